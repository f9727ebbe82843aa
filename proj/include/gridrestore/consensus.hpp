#pragma once

// Decentralized discovery of communication-connected parts (CCPs) by average
// consensus. Every agent publishes a numeric field vector plus an indicator
// entry for itself; iterating the Metropolis-Hastings mixing matrix drives
// each entry to the component-wide average. The agent's own indicator then
// converges to 1/N for a component of N agents, which simultaneously yields
// the component size and the rescale factor that recovers field sums.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gridrestore {

struct CommGraph {
    std::map<int, bool> agents;              // agent id -> available
    std::set<std::pair<int, int>> links;     // undirected, stored with first < second

    void add_agent(int id, bool available = true) { agents[id] = available; }
    void add_link(int a, int b) {
        if (a == b) throw std::invalid_argument("comm link endpoints must differ");
        links.insert({std::min(a, b), std::max(a, b)});
    }
    bool agent_available(int id) const {
        auto it = agents.find(id);
        return it != agents.end() && it->second;
    }
    // A link carries traffic only while both endpoints are available.
    bool link_active(int a, int b) const {
        return links.count({std::min(a, b), std::max(a, b)}) && agent_available(a) && agent_available(b);
    }
    std::vector<int> available_agents() const {
        std::vector<int> out;
        for (const auto& [id, ok] : agents)
            if (ok) out.push_back(id);
        return out;
    }
    std::vector<int> neighbors(int id) const {
        std::vector<int> out;
        if (!agent_available(id)) return out;
        for (const auto& [a, b] : links) {
            if (a == id && agent_available(b)) out.push_back(b);
            if (b == id && agent_available(a)) out.push_back(a);
        }
        std::sort(out.begin(), out.end());
        return out;
    }
};

// Metropolis-Hastings mixing weights on the active communication graph:
// for neighbours i != j, a_ij = 1 / (max(deg_i, deg_j) + 1); the self weight
// a_ii absorbs the remainder so every row sums to one.
inline std::map<std::pair<int, int>, double> metropolis_weights(const CommGraph& g) {
    std::map<int, int> deg;
    for (int id : g.available_agents()) deg[id] = static_cast<int>(g.neighbors(id).size());
    std::map<std::pair<int, int>, double> w;
    for (const auto& [id, d] : deg) {
        double self = 1.0;
        for (int nb : g.neighbors(id)) {
            double a = 1.0 / (std::max(deg[id], deg[nb]) + 1.0);
            w[{id, nb}] = a;
            self -= a;
        }
        w[{id, id}] = self;
    }
    return w;
}

using FieldKey = std::pair<int, std::string>;  // (source agent id, field name)

// One agent's working vector during consensus: field entries (aligned by
// global key) and the indicator set.
struct AgentVector {
    std::map<FieldKey, double> entries;
    std::map<int, double> indicator;  // source agent id -> value
};

// What one agent knows about its CCP after consensus has converged.
struct CcpView {
    std::vector<int> members;  // ascending agent ids
    int agent_count = 0;
    std::map<FieldKey, double> global_state;  // reconstructed per-source field values
    int rounds_used = 0;
    double elapsed_ms = 0.0;
    bool converged = false;

    double get(int agent, const std::string& field, double def = 0.0) const {
        auto it = global_state.find({agent, field});
        return it == global_state.end() ? def : it->second;
    }
    bool has(int agent, const std::string& field) const {
        return global_state.count({agent, field}) != 0;
    }
    double sum(const std::string& field) const {
        double s = 0;
        for (const auto& [k, v] : global_state)
            if (k.second == field) s += v;
        return s;
    }
};

struct IdpConfig {
    double tol = 1e-10;                 // max-norm convergence threshold on one round's change
    int k_max = 100000;                 // round cap
    double iteration_latency_ms = 1.0;  // wall-clock cost charged per round
    // Fields whose reconstructed values are integers by construction; they are
    // rounded to kill consensus noise. Defaults to the published-state schema.
    std::function<bool(const std::string&)> integer_field = default_integer_field;

    static bool default_integer_field(const std::string& f) {
        static const std::set<std::string> exact = {"ab", "v", "dg", "es", "dgts"};
        if (exact.count(f)) return true;
        return f.rfind("af:", 0) == 0 || f.rfind("w:", 0) == 0;
    }
};

struct IdpResult {
    std::map<int, CcpView> views;                        // per available agent
    std::map<int, std::vector<double>> size_estimate;    // per agent: 1/indicator after each round (round 0 first)
    int rounds = 0;
    double elapsed_ms = 0.0;
    bool converged = false;
};

namespace detail {

// Dense consensus workspace: one row per available agent, one column per
// global key (all agents' published fields plus one indicator per agent).
// Entries an agent has not yet sighted are numerically zero, which is exactly
// the value the dynamic-insertion formulation assigns them, so iterating the
// full matrix reproduces the sparse protocol bit for bit while staying simple.
struct DenseConsensus {
    std::vector<int> ids;                  // ascending available agent ids
    std::map<int, int> row_of;
    std::vector<FieldKey> keys;            // ascending (source, field); indicator key = (id, "")
    std::map<FieldKey, int> col_of;
    std::vector<std::vector<double>> x;    // ids.size() x keys.size()
    std::vector<std::vector<int>> nbr;     // neighbour rows, ascending
    std::vector<std::vector<double>> nbr_w;
    std::vector<double> self_w;
    std::vector<std::set<int>> sighted;    // indicator-set membership per row

    static FieldKey indicator_key(int id) { return {id, std::string()}; }

    DenseConsensus(const CommGraph& g, const std::map<int, std::map<std::string, double>>& local) {
        ids = g.available_agents();
        for (std::size_t r = 0; r < ids.size(); ++r) row_of[ids[r]] = static_cast<int>(r);
        std::set<FieldKey> keyset;
        for (int id : ids) {
            keyset.insert(indicator_key(id));
            auto it = local.find(id);
            if (it != local.end())
                for (const auto& [f, _] : it->second) {
                    if (f.empty()) throw std::invalid_argument("field names must be non-empty");
                    keyset.insert({id, f});
                }
        }
        keys.assign(keyset.begin(), keyset.end());
        for (std::size_t c = 0; c < keys.size(); ++c) col_of[keys[c]] = static_cast<int>(c);

        x.assign(ids.size(), std::vector<double>(keys.size(), 0.0));
        sighted.resize(ids.size());
        for (std::size_t r = 0; r < ids.size(); ++r) {
            int id = ids[r];
            x[r][col_of.at(indicator_key(id))] = 1.0;
            sighted[r].insert(id);
            auto it = local.find(id);
            if (it != local.end())
                for (const auto& [f, v] : it->second) x[r][col_of.at(FieldKey{id, f})] = v;
        }

        auto w = metropolis_weights(g);
        nbr.resize(ids.size());
        nbr_w.resize(ids.size());
        self_w.assign(ids.size(), 1.0);
        for (std::size_t r = 0; r < ids.size(); ++r) {
            for (int nb : g.neighbors(ids[r])) {
                nbr[r].push_back(row_of.at(nb));
                nbr_w[r].push_back(w.at({ids[r], nb}));
            }
            self_w[r] = w.at({ids[r], ids[r]});
        }
    }

    // One synchronous round; returns the max-norm of the change.
    double step() {
        std::vector<std::vector<double>> nx(x.size(), std::vector<double>(keys.size()));
        double maxdiff = 0.0;
        for (std::size_t r = 0; r < x.size(); ++r) {
            for (std::size_t c = 0; c < keys.size(); ++c) {
                double acc = self_w[r] * x[r][c];
                for (std::size_t t = 0; t < nbr[r].size(); ++t) acc += nbr_w[r][t] * x[nbr[r][t]][c];
                nx[r][c] = acc;
                maxdiff = std::max(maxdiff, std::abs(acc - x[r][c]));
            }
        }
        x.swap(nx);
        // Indicator-set membership floods one hop per round, mirroring the
        // sparse protocol's insertion of newly sighted entries.
        std::vector<std::set<int>> ns = sighted;
        for (std::size_t r = 0; r < x.size(); ++r)
            for (int t : nbr[r]) ns[r].insert(sighted[t].begin(), sighted[t].end());
        sighted.swap(ns);
        return maxdiff;
    }

    double own_indicator(std::size_t r) const { return x[r][col_of.at(indicator_key(ids[r]))]; }
};

}  // namespace detail

// One synchronous consensus round applied to explicit agent vectors, mixing
// both field entries and indicator sets with the given weights. Entries a
// vector lacks are treated as zero and materialize after the round whenever a
// neighbour carries them.
inline void consensus_step(std::map<int, AgentVector>& vecs,
                           const std::map<std::pair<int, int>, double>& weights) {
    // Collect the key universe touched by anyone.
    std::set<FieldKey> keyset;
    std::set<int> indset;
    for (const auto& [id, v] : vecs) {
        for (const auto& [k, _] : v.entries) keyset.insert(k);
        for (const auto& [k, _] : v.indicator) indset.insert(k);
    }
    auto weight = [&](int i, int j) {
        auto it = weights.find({i, j});
        return it == weights.end() ? 0.0 : it->second;
    };
    std::map<int, AgentVector> next;
    for (const auto& [id, v] : vecs) {
        AgentVector nv;
        for (const auto& key : keyset) {
            auto self = v.entries.find(key);
            double xi = self == v.entries.end() ? 0.0 : self->second;
            double acc = weight(id, id) * xi;
            bool sighted = self != v.entries.end();
            for (const auto& [jd, jv] : vecs) {
                if (jd == id) continue;
                double a = weight(id, jd);
                if (a == 0.0) continue;
                auto jt = jv.entries.find(key);
                double xj = jt == jv.entries.end() ? 0.0 : jt->second;
                acc += a * xj;
                sighted = sighted || jt != jv.entries.end();
            }
            if (sighted) nv.entries[key] = acc;
        }
        for (int key : indset) {
            auto self = v.indicator.find(key);
            double xi = self == v.indicator.end() ? 0.0 : self->second;
            double acc = weight(id, id) * xi;
            bool sighted = self != v.indicator.end();
            for (const auto& [jd, jv] : vecs) {
                if (jd == id) continue;
                double a = weight(id, jd);
                if (a == 0.0) continue;
                auto jt = jv.indicator.find(key);
                acc += a * (jt == jv.indicator.end() ? 0.0 : jt->second);
                sighted = sighted || jt != jv.indicator.end();
            }
            if (sighted) nv.indicator[key] = acc;
        }
        next[id] = std::move(nv);
    }
    vecs.swap(next);
}

// Runs the full discovery protocol on the active communication graph.
// local_state maps agent id -> published field values. Unavailable agents
// publish nothing and take no part. The result carries one reconstructed view
// per agent plus the per-round size-estimate trace.
inline IdpResult run_idp(const CommGraph& g,
                         const std::map<int, std::map<std::string, double>>& local_state,
                         const IdpConfig& cfg = {}) {
    for (const auto& [id, _] : local_state)
        if (!g.agent_available(id))
            throw std::invalid_argument("local state supplied for unavailable agent " + std::to_string(id));

    IdpResult res;
    detail::DenseConsensus dc(g, local_state);
    const std::size_t n = dc.ids.size();
    if (n == 0) return res;

    for (std::size_t r = 0; r < n; ++r)
        res.size_estimate[dc.ids[r]].push_back(1.0 / dc.own_indicator(r));

    int k = 0;
    bool converged = false;
    while (k < cfg.k_max) {
        double diff = dc.step();
        ++k;
        for (std::size_t r = 0; r < n; ++r)
            res.size_estimate[dc.ids[r]].push_back(1.0 / dc.own_indicator(r));
        if (diff < cfg.tol) {
            converged = true;
            break;
        }
    }
    res.rounds = k;
    res.elapsed_ms = k * cfg.iteration_latency_ms;
    res.converged = converged;

    for (std::size_t r = 0; r < n; ++r) {
        CcpView view;
        view.members.assign(dc.sighted[r].begin(), dc.sighted[r].end());
        view.rounds_used = k;
        view.elapsed_ms = res.elapsed_ms;
        view.converged = converged;

        double ind = dc.own_indicator(r);
        double est = ind > 0 ? 1.0 / ind : 0.0;
        double rounded = std::round(est);
        if (!converged || ind <= 0 || std::abs(est - rounded) >= 0.01 ||
            static_cast<int>(rounded) != static_cast<int>(view.members.size())) {
            view.converged = false;
            view.agent_count = static_cast<int>(view.members.size());
        } else {
            view.agent_count = static_cast<int>(rounded);
        }

        double scale = view.agent_count;  // converged entry holds (1/N) * value
        for (std::size_t c = 0; c < dc.keys.size(); ++c) {
            const FieldKey& key = dc.keys[c];
            if (key.second.empty()) continue;  // indicator column
            if (!dc.sighted[r].count(key.first)) continue;
            double val = dc.x[r][c] * scale;
            if (cfg.integer_field && cfg.integer_field(key.second)) val = std::round(val);
            view.global_state[key] = val;
        }
        res.views[dc.ids[r]] = std::move(view);
    }
    return res;
}

struct TraceRow {
    int round = 0;
    int agent_id = 0;
    double size_estimate = 0.0;
};

// Flattens the per-round 1/indicator series into (round, agent, estimate)
// rows ordered by round then agent id.
inline std::vector<TraceRow> convergence_trace(const IdpResult& res) {
    std::vector<TraceRow> rows;
    for (int r = 0; r <= res.rounds; ++r)
        for (const auto& [id, series] : res.size_estimate)
            if (r < static_cast<int>(series.size())) rows.push_back({r, id, series[r]});
    return rows;
}

}  // namespace gridrestore
