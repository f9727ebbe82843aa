#pragma once

// Builds the multi-interval restoration MILP for one
// communication-connected part (CCP): linearized branch-flow physics with
// piecewise-linear square terms, big-M gated voltage drops, single-commodity
// fictitious flow enforcing radial islands, DG synchronization/ramping,
// ES charge/discharge with SoC tracking and a banded reactive capability,
// priority-weighted load pickup with service continuity, and boundary
// conditions pinned to the observed state at the scheduling instant.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridrestore/consensus.hpp"
#include "gridrestore/grid.hpp"
#include "gridrestore/milp.hpp"
#include "gridrestore/solver.hpp"

namespace gridrestore {

enum class EsQMode { table_binary, conservative_fixed };
enum class BigMPolicy { auto_tight, fixed_value };

struct MilpConfig {
    double w_l1 = 1000.0;  // objective weight, priority class 1
    double w_l2 = 100.0;
    double w_l3 = 10.0;
    int pwl_segments = 6;  // breakpoints per side of zero; 2x this many segments
    double lambda_min_default = 0.1;
    EsQMode es_q_mode = EsQMode::table_binary;
    BigMPolicy big_m_policy = BigMPolicy::auto_tight;
    double big_m_value = 0.0;        // used with BigMPolicy::fixed_value
    bool strict_flow_bounds = false; // legacy loss-style feeder flow limits
};

// What the scheduling agent knows about its CCP at the scheduling instant:
// member buses, usable feeders, discovered resources, and the observed
// operating point that seeds the boundary conditions.
struct ObservedCcp {
    std::vector<BusId> buses;           // available member buses, ascending
    std::vector<std::string> feeders;   // usable feeders inside the part, ascending
    std::map<BusId, int> dg_start;      // discovered DG buses -> absolute start instant
    std::set<BusId> es_buses;           // discovered ES buses
    std::map<BusId, bool> v0;           // bus in use at t_c
    std::map<std::string, bool> w0;     // feeder in use at t_c
    std::map<BusId, double> pg0;        // resource injection at t_c
    std::map<BusId, BusLoadState> load0;
    std::map<BusId, double> soc0;

    bool bus_on0(BusId b) const {
        auto it = v0.find(b);
        return it != v0.end() && it->second;
    }
    bool feeder_on0(const std::string& f) const {
        auto it = w0.find(f);
        return it != w0.end() && it->second;
    }
    double pg0_at(BusId b) const {
        auto it = pg0.find(b);
        return it == pg0.end() ? 0.0 : it->second;
    }
    BusLoadState load0_at(BusId b) const {
        auto it = load0.find(b);
        return it == load0.end() ? BusLoadState{} : it->second;
    }
    double soc0_at(BusId b, double def) const {
        auto it = soc0.find(b);
        return it == soc0.end() ? def : it->second;
    }
};

// ---------------------------------------------------------------------------
// Published-state schema: every agent publishes these fields about its bus,
// and the discovery protocol reconstructs them for the whole part.

inline std::map<std::string, double> publish_local_state(const Network& net, const NetworkState& st,
                                                         BusId bus) {
    std::map<std::string, double> f;
    f["ab"] = st.bus_available(bus) ? 1.0 : 0.0;
    f["v"] = st.bus_in_use(bus) ? 1.0 : 0.0;
    auto load = st.load_at(bus);
    f["pl1"] = load.pl1;
    f["pl2"] = load.pl2;
    f["pl3"] = load.pl3;
    f["ql1"] = load.ql1;
    f["ql2"] = load.ql2;
    f["ql3"] = load.ql3;
    f["pg"] = st.p_g_at(bus);
    f["qg"] = st.q_g_at(bus);
    if (const DgUnit* d = net.dg_at(bus); d != nullptr && st.dg_start.count(bus)) {
        f["dg"] = 1.0;
        f["dgts"] = st.dg_start.at(bus);
    }
    if (const EsUnit* e = net.es_at(bus)) {
        f["es"] = 1.0;
        f["soc"] = st.soc_at(bus);
    }
    for (const auto& fd : net.feeders) {
        if (fd.from != bus && fd.to != bus) continue;
        std::string n = fd.name();
        f["af:" + n] = st.feeder_available(n) ? 1.0 : 0.0;
        f["w:" + n] = st.feeder_in_use(n) ? 1.0 : 0.0;
    }
    return f;
}

// Distills a converged discovery view into the builder's input. Agent ids are
// bus ids. A feeder is usable when both endpoints are members and every
// published copy of its availability flag is 1.
inline ObservedCcp observed_from_view(const CcpView& view, const Network& net) {
    ObservedCcp o;
    std::set<BusId> members(view.members.begin(), view.members.end());
    auto clamp = [](double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); };
    for (BusId b : view.members) {
        const Bus* bus = net.find_bus(b);
        if (!bus) continue;  // agent without a bus: nothing to schedule
        if (view.get(b, "ab", 1.0) == 0.0) continue;  // damaged bus: excluded from scheduling
        o.buses.push_back(b);
        o.v0[b] = view.get(b, "v") != 0.0;
        // Reconstructed continuous values carry consensus round-off; scrub them
        // back into their physical ranges so boundary pins stay feasible.
        auto pcl = [&](int c) { return clamp(view.get(b, "pl" + std::to_string(c + 1)), 0.0, bus->load_par[c].p_kw); };
        auto qcl = [&](int c) {
            double qp = bus->load_par[c].q_kvar;
            return clamp(view.get(b, "ql" + std::to_string(c + 1)), std::min(0.0, qp), std::max(0.0, qp));
        };
        BusLoadState l;
        l.pl1 = pcl(0);
        l.pl2 = pcl(1);
        l.pl3 = pcl(2);
        l.ql1 = qcl(0);
        l.ql2 = qcl(1);
        l.ql3 = qcl(2);
        o.load0[b] = l;
        double pg = view.get(b, "pg");
        if (const DgUnit* d = net.dg_at(b))
            pg = clamp(pg, 0.0, d->p_max_kw);
        else if (const EsUnit* e = net.es_at(b))
            pg = clamp(pg, -e->p_ch_max_kw, e->p_dis_max_kw);
        else
            pg = 0.0;
        if (!o.v0[b]) {
            // A dark bus serves no load and injects nothing; residual values
            // there are reconstruction noise.
            o.load0[b] = BusLoadState{};
            pg = 0.0;
        }
        o.pg0[b] = pg;
        if (view.get(b, "dg") != 0.0) o.dg_start[b] = static_cast<int>(view.get(b, "dgts"));
        if (view.get(b, "es") != 0.0) {
            o.es_buses.insert(b);
            o.soc0[b] = clamp(view.get(b, "soc"), 0.0, 1.0);
        }
    }
    std::set<BusId> usable(o.buses.begin(), o.buses.end());
    for (const auto& fd : net.feeders) {
        if (!usable.count(fd.from) || !usable.count(fd.to)) continue;
        std::string n = fd.name();
        bool avail = true, on = false;
        for (BusId end : {fd.from, fd.to}) {
            if (view.has(end, "af:" + n) && view.get(end, "af:" + n) == 0.0) avail = false;
            if (view.get(end, "w:" + n) != 0.0) on = true;
        }
        if (!avail) continue;
        o.feeders.push_back(n);
        o.w0[n] = on;
    }
    std::sort(o.feeders.begin(), o.feeders.end());
    return o;
}

// Reference construction of the same input straight from a ground-truth
// network state (bypassing the discovery protocol); used by tests and the
// single-shot CLI paths.
inline ObservedCcp make_observed(const Network& net, const NetworkState& st,
                                 const std::vector<BusId>& members) {
    ObservedCcp o;
    std::set<BusId> mem(members.begin(), members.end());
    for (BusId b : members) {
        if (!st.bus_available(b)) continue;
        o.buses.push_back(b);
        o.v0[b] = st.bus_in_use(b);
        o.load0[b] = st.load_at(b);
        o.pg0[b] = st.p_g_at(b);
        if (const DgUnit* d = net.dg_at(b); d != nullptr && st.dg_start.count(b))
            o.dg_start[b] = st.dg_start.at(b);
        if (net.es_at(b)) {
            o.es_buses.insert(b);
            o.soc0[b] = st.soc_at(b);
        }
    }
    std::sort(o.buses.begin(), o.buses.end());
    std::set<BusId> usable(o.buses.begin(), o.buses.end());
    for (const auto& fd : net.feeders) {
        if (!usable.count(fd.from) || !usable.count(fd.to)) continue;
        if (!st.feeder_available(fd.name())) continue;
        o.feeders.push_back(fd.name());
        o.w0[fd.name()] = st.feeder_in_use(fd.name());
    }
    std::sort(o.feeders.begin(), o.feeders.end());
    return o;
}

// ---------------------------------------------------------------------------
// Variable naming scheme (also the extraction contract).

namespace vn {
inline std::string t(int n) { return "_t" + std::to_string(n); }
inline std::string v(BusId b, int n) { return "v_b" + std::to_string(b) + t(n); }
inline std::string w(const std::string& f, int n) { return "w_" + f + t(n); }
inline std::string fp(const std::string& f, int n) { return "fp_" + f + t(n); }
inline std::string fq(const std::string& f, int n) { return "fq_" + f + t(n); }
inline std::string isq(const std::string& f, int n) { return "isq_" + f + t(n); }
inline std::string vsq(BusId b, int n) { return "vsq_b" + std::to_string(b) + t(n); }
inline std::string pg(BusId b, int n) { return "pg_b" + std::to_string(b) + t(n); }
inline std::string qg(BusId b, int n) { return "qg_b" + std::to_string(b) + t(n); }
inline std::string pdg(BusId b, int n) { return "pdg_b" + std::to_string(b) + t(n); }
inline std::string qdg(BusId b, int n) { return "qdg_b" + std::to_string(b) + t(n); }
inline std::string pesc(BusId b, int n) { return "pesc_b" + std::to_string(b) + t(n); }
inline std::string pesd(BusId b, int n) { return "pesd_b" + std::to_string(b) + t(n); }
inline std::string qes(BusId b, int n) { return "qes_b" + std::to_string(b) + t(n); }
inline std::string vch(BusId b, int n) { return "vch_b" + std::to_string(b) + t(n); }
inline std::string vdis(BusId b, int n) { return "vdis_b" + std::to_string(b) + t(n); }
inline std::string esb(BusId b, int r, int n) {
    return "esb_b" + std::to_string(b) + "_r" + std::to_string(r) + t(n);
}
inline std::string soc(BusId b, int n) { return "soc_b" + std::to_string(b) + t(n); }
inline std::string pl(BusId b, int n) { return "pl_b" + std::to_string(b) + t(n); }
inline std::string ql(BusId b, int n) { return "ql_b" + std::to_string(b) + t(n); }
inline std::string plc(BusId b, int c, int n) {
    return "pl" + std::to_string(c) + "_b" + std::to_string(b) + t(n);
}
inline std::string qlc(BusId b, int c, int n) {
    return "ql" + std::to_string(c) + "_b" + std::to_string(b) + t(n);
}
// Directed copies of a feeder: d0 runs from->to as stored, d1 the reverse.
inline std::string wfd(const std::string& f, int d, int n) {
    return "wfd_" + f + "_d" + std::to_string(d) + t(n);
}
inline std::string h(const std::string& f, int d, int n) {
    return "h_" + f + "_d" + std::to_string(d) + t(n);
}
// Root connector to a resource bus in the connectivity layer.
inline std::string wfd0(BusId b, int n) { return "wfd0_b" + std::to_string(b) + t(n); }
inline std::string h0(BusId b, int n) { return "h0_b" + std::to_string(b) + t(n); }
inline std::string lam(char block, const std::string& f, int k, int n) {
    return (block == 'p' ? "lp_" : "lq_") + f + "_k" + std::to_string(k) + t(n);
}
inline std::string seg(char block, const std::string& f, int s, int n) {
    return block == 'p' ? "sp_" + f + "_s" + std::to_string(s) + t(n)
                        : "sq_" + f + "_s" + std::to_string(s) + t(n);
}
}  // namespace vn

struct BuildResult {
    MilpInstance milp;
    std::vector<BusId> buses;
    std::vector<std::string> feeders;
    std::vector<BusId> dg_buses;
    std::vector<BusId> es_buses;
    int n_points = 0;  // schedule points run 0..n_points
    bool degenerate = false;
};

namespace builddetail {

struct FeederInfo {
    std::string name;
    BusId from = 0, to = 0;
    double r = 0, x = 0, imax = 0;
    double fbar = 0;   // flow magnitude limit used in gating rows (kW/kvar)
    double ybar = 0;   // square-term linearization range (kW)
    double bigm = 0;   // voltage-drop relaxation constant (kV^2)
};

}  // namespace builddetail

inline BuildResult build_model(const ObservedCcp& obs, const Network& net, const TimeGrid& grid,
                               const MilpConfig& cfg) {
    // Only the horizon discretization matters here; the re-scheduling period is
    // a concern of the rolling engine.
    if (grid.step_min <= 0 || grid.horizon_min <= 0 || grid.horizon_min % grid.step_min != 0)
        throw std::invalid_argument("build_model: horizon_min must be a positive multiple of step_min");
    if (obs.buses.empty()) throw std::invalid_argument("build_model: empty bus set");
    if (cfg.pwl_segments < 1) throw std::invalid_argument("build_model: need at least one segment per side");

    BuildResult out;
    out.buses = obs.buses;
    out.feeders = obs.feeders;
    for (const auto& [b, ts] : obs.dg_start) out.dg_buses.push_back(b);
    out.es_buses.assign(obs.es_buses.begin(), obs.es_buses.end());
    const int N = grid.intervals();
    out.n_points = N;

    std::set<BusId> bus_set(obs.buses.begin(), obs.buses.end());
    for (const auto& f : obs.feeders) {
        const Feeder* fd = net.find_feeder(f);
        if (!fd) throw std::invalid_argument("build_model: unknown feeder " + f);
        if (!bus_set.count(fd->from) || !bus_set.count(fd->to))
            throw std::invalid_argument("build_model: feeder " + f + " leaves the part");
    }
    for (BusId b : obs.buses)
        if (!net.find_bus(b)) throw std::invalid_argument("build_model: unknown bus " + std::to_string(b));
    for (const auto& [b, ts] : obs.dg_start)
        if (!net.dg_at(b)) throw std::invalid_argument("build_model: no DG data at bus " + std::to_string(b));
    for (BusId b : obs.es_buses)
        if (!net.es_at(b)) throw std::invalid_argument("build_model: no ES data at bus " + std::to_string(b));

    std::set<BusId> resource_buses;
    for (const auto& [b, ts] : obs.dg_start) resource_buses.insert(b);
    for (BusId b : obs.es_buses) resource_buses.insert(b);
    out.degenerate = resource_buses.empty();

    const int L = cfg.pwl_segments;  // breakpoints per side; segments 0..2L-1
    const double vmax2 = net.v_max_kv * net.v_max_kv;
    const double vmin2 = net.v_min_kv * net.v_min_kv;
    const double vnom2 = net.v_nom_kv * net.v_nom_kv;
    const double root_cap = static_cast<double>(obs.buses.size()) + 1.0;

    std::vector<builddetail::FeederInfo> fis;
    for (const auto& name : obs.feeders) {
        const Feeder* fd = net.find_feeder(name);
        builddetail::FeederInfo fi;
        fi.name = name;
        fi.from = fd->from;
        fi.to = fd->to;
        fi.r = fd->r_ohm;
        fi.x = fd->x_ohm;
        fi.imax = fd->i_max_a;
        fi.ybar = net.v_nom_kv * fd->i_max_a;
        fi.fbar = cfg.strict_flow_bounds ? fd->r_ohm * fd->i_max_a * fd->i_max_a * 1e-3 : fi.ybar;
        fi.bigm = cfg.big_m_policy == BigMPolicy::fixed_value && cfg.big_m_value > 0 ? cfg.big_m_value
                                                                                     : vmax2;
        fis.push_back(fi);
    }

    // Pre-sync points of each DG: output is pinned to zero there, and (when
    // the unit has a positive minimum output) the bus cannot be in use either.
    std::map<BusId, std::vector<char>> presync;
    for (const auto& [b, ts] : obs.dg_start) {
        const DgUnit* d = net.dg_at(b);
        std::vector<char> pre(N + 1, 0);
        for (int n = 0; n <= N; ++n) pre[n] = grid.point_time(n) < ts + d->t_syn_min ? 1 : 0;
        presync[b] = std::move(pre);
    }
    auto bus_forced_dark = [&](BusId b, int n) {
        auto it = presync.find(b);
        if (it == presync.end() || !it->second[n]) return false;
        return net.dg_at(b)->p_min_kw > 0;
    };
    // Effective in-use bounds per bus/point: observed-on buses stay on for the
    // whole horizon (service continuity), observed-off buses start off, and
    // pre-sync DG buses with a positive floor cannot be on.
    auto v_bounds = [&](BusId b, int n) -> std::pair<double, double> {
        if (obs.bus_on0(b)) {
            if (bus_forced_dark(b, n))
                throw std::invalid_argument("build_model: bus " + std::to_string(b) +
                                            " observed in use before its DG can synchronize");
            return {1, 1};
        }
        if (n == 0) return {0, 0};
        if (bus_forced_dark(b, n)) return {0, 0};
        return {0, 1};
    };
    auto v_fixed_off = [&](BusId b, int n) {
        auto [lo, hi] = v_bounds(b, n);
        return hi == 0;
    };

    MilpInstance& m = out.milp;

    // ---- variables, family by family -------------------------------------
    for (BusId b : obs.buses)
        for (int n = 0; n <= N; ++n) {
            auto [lo, hi] = v_bounds(b, n);
            m.add_var(vn::v(b, n), VarKind::binary, lo, hi);
        }
    for (const auto& fi : fis)
        for (int n = 0; n <= N; ++n) {
            bool on0 = obs.feeder_on0(fi.name);
            double lo = on0 ? 1 : 0;
            double hi = on0 ? 1 : (n == 0 ? 0 : 1);
            // A feeder cannot be used while either endpoint is forced dark.
            if (hi > 0 && (v_fixed_off(fi.from, n) || v_fixed_off(fi.to, n))) {
                if (on0)
                    throw std::invalid_argument("build_model: feeder " + fi.name +
                                                " observed in use with a dark endpoint");
                hi = 0;
            }
            m.add_var(vn::w(fi.name, n), VarKind::binary, lo, hi);
        }
    // Directed connectivity selectors and flows.
    auto wfd_fixed_zero = [&](const builddetail::FeederInfo& fi, int n) {
        int wi = m.find_var(vn::w(fi.name, n));
        bool w_zero = m.vars[wi].ub == 0;
        return w_zero || v_fixed_off(fi.from, n) || v_fixed_off(fi.to, n);
    };
    for (const auto& fi : fis)
        for (int d = 0; d < 2; ++d)
            for (int n = 0; n <= N; ++n) {
                double hi = wfd_fixed_zero(fi, n) ? 0 : 1;
                m.add_var(vn::wfd(fi.name, d, n), VarKind::binary, 0, hi);
            }
    for (BusId b : resource_buses)
        for (int n = 0; n <= N; ++n)
            m.add_var(vn::wfd0(b, n), VarKind::binary, 0, v_fixed_off(b, n) ? 0 : 1);
    for (const auto& fi : fis)
        for (int d = 0; d < 2; ++d)
            for (int n = 0; n <= N; ++n) m.add_var(vn::h(fi.name, d, n), VarKind::continuous, 0, root_cap);
    for (BusId b : resource_buses)
        for (int n = 0; n <= N; ++n) m.add_var(vn::h0(b, n), VarKind::continuous, 0, root_cap);

    // Network physics is modeled over the look-ahead intervals only; the
    // boundary point is a frozen initial condition whose flows have already
    // happened, so its electrical variables are parked at zero. This keeps the
    // model solvable even when the observed operating point is electrically
    // inconsistent (sudden load loss, reconstruction noise).
    for (const auto& fi : fis)
        for (int n = 0; n <= N; ++n) {
            double fb = n == 0 ? 0 : fi.fbar;
            double ib = n == 0 ? 0 : fi.imax * fi.imax;
            m.add_var(vn::fp(fi.name, n), VarKind::continuous, -fb, fb);
            m.add_var(vn::fq(fi.name, n), VarKind::continuous, -fb, fb);
            m.add_var(vn::isq(fi.name, n), VarKind::continuous, 0, ib);
        }
    for (BusId b : obs.buses)
        for (int n = 0; n <= N; ++n)
            m.add_var(vn::vsq(b, n), VarKind::continuous, 0, n == 0 ? 0 : vmax2);

    for (BusId b : obs.buses)
        for (int n = 0; n <= N; ++n) {
            if (n == 0) {
                double g = obs.pg0_at(b);
                m.add_var(vn::pg(b, n), VarKind::continuous, g, g);
            } else {
                m.add_var(vn::pg(b, n), VarKind::continuous, -kInf, kInf);
            }
            m.add_var(vn::qg(b, n), VarKind::continuous, -kInf, kInf);
        }
    for (const auto& [b, ts] : obs.dg_start) {
        const DgUnit* d = net.dg_at(b);
        for (int n = 0; n <= N; ++n) {
            m.add_var(vn::pdg(b, n), VarKind::continuous, 0, d->p_max_kw);
            m.add_var(vn::qdg(b, n), VarKind::continuous, std::min(d->q_min_kvar, 0.0),
                      std::max(d->q_max_kvar, 0.0));
        }
    }
    for (BusId b : obs.es_buses) {
        const EsUnit* e = net.es_at(b);
        double qlo = 0, qhi = 0;
        for (const auto& r : e->q_capability) {
            qlo = std::min(qlo, r.q_min * e->rated_kw());
            qhi = std::max(qhi, r.q_max * e->rated_kw());
        }
        for (int n = 0; n <= N; ++n) {
            m.add_var(vn::pesc(b, n), VarKind::continuous, 0, e->p_ch_max_kw);
            m.add_var(vn::pesd(b, n), VarKind::continuous, 0, e->p_dis_max_kw);
            m.add_var(vn::qes(b, n), VarKind::continuous, qlo, qhi);
            m.add_var(vn::vch(b, n), VarKind::binary, 0, 1);
            m.add_var(vn::vdis(b, n), VarKind::binary, 0, 1);
            if (cfg.es_q_mode == EsQMode::table_binary)
                for (std::size_t r = 0; r < e->q_capability.size(); ++r)
                    m.add_var(vn::esb(b, static_cast<int>(r), n), VarKind::binary, 0, 1);
            if (n == 0) {
                double s0 = obs.soc0_at(b, e->soc_min);
                m.add_var(vn::soc(b, n), VarKind::continuous, s0, s0);
            } else {
                m.add_var(vn::soc(b, n), VarKind::continuous, e->soc_min, e->soc_max);
            }
        }
    }

    for (BusId b : obs.buses) {
        const Bus* bus = net.find_bus(b);
        auto l0 = obs.load0_at(b);
        double obs_p[3] = {l0.pl1, l0.pl2, l0.pl3};
        for (int n = 0; n <= N; ++n) {
            double par_sum = 0;
            for (int c = 0; c < 3; ++c) {
                double par = bus->load_par[c].p_kw;
                par_sum += par;
                if (n == 0)
                    m.add_var(vn::plc(b, c + 1, n), VarKind::continuous, obs_p[c], obs_p[c]);
                else
                    m.add_var(vn::plc(b, c + 1, n), VarKind::continuous, 0, par);
            }
            m.add_var(vn::pl(b, n), VarKind::continuous, 0, std::max(par_sum, l0.total_p()));
            for (int c = 0; c < 3; ++c) {
                double qpar = bus->load_par[c].q_kvar;
                m.add_var(vn::qlc(b, c + 1, n), VarKind::continuous, std::min(0.0, qpar),
                          std::max(0.0, qpar));
            }
            double qlo = 0, qhi = 0;
            for (int c = 0; c < 3; ++c) {
                qlo += std::min(0.0, bus->load_par[c].q_kvar);
                qhi += std::max(0.0, bus->load_par[c].q_kvar);
            }
            m.add_var(vn::ql(b, n), VarKind::continuous, qlo, qhi);
        }
    }

    // Square-term linearization variables. The boundary point carries no
    // modeled flow, so its weights and segment selectors are parked at zero
    // alongside the flow variables they describe.
    for (const auto& fi : fis)
        for (char blk : {'p', 'q'})
            for (int n = 0; n <= N; ++n) {
                double cap = n == 0 ? 0 : 1;
                for (int k = 0; k <= 2 * L; ++k) m.add_var(vn::lam(blk, fi.name, k, n), VarKind::continuous, 0, cap);
                for (int s = 0; s < 2 * L; ++s) m.add_var(vn::seg(blk, fi.name, s, n), VarKind::binary, 0, cap);
            }

    // ---- constraints ------------------------------------------------------
    auto add = [&](const std::string& family, const std::string& entity, int n,
                   std::vector<LinTerm> terms, Rel rel, double rhs) {
        m.add_con(make_tag(family, entity, n), std::move(terms), rel, rhs);
    };
    auto T = [&](const std::string& name, double c) { return LinTerm{m.find_var(name), c}; };

    // Active/reactive power balance at every bus: inflows minus outflows
    // (losses charged to the sending side) plus local generation equals the
    // restored load. Physics rows start at the first look-ahead point; the
    // boundary point is an initial condition, not a solved operating point.
    for (BusId b : obs.buses)
        for (int n = 1; n <= N; ++n) {
            std::vector<LinTerm> tp, tq;
            for (const auto& fi : fis) {
                if (fi.to == b) {
                    tp.push_back(T(vn::fp(fi.name, n), 1.0));
                    tq.push_back(T(vn::fq(fi.name, n), 1.0));
                } else if (fi.from == b) {
                    tp.push_back(T(vn::fp(fi.name, n), -1.0));
                    tp.push_back(T(vn::isq(fi.name, n), -fi.r * 1e-3));
                    tq.push_back(T(vn::fq(fi.name, n), -1.0));
                    tq.push_back(T(vn::isq(fi.name, n), -fi.x * 1e-3));
                }
            }
            tp.push_back(T(vn::pg(b, n), 1.0));
            tp.push_back(T(vn::pl(b, n), -1.0));
            tq.push_back(T(vn::qg(b, n), 1.0));
            tq.push_back(T(vn::ql(b, n), -1.0));
            add("pbal_p", "b" + std::to_string(b), n, std::move(tp), Rel::eq, 0.0);
            add("pbal_q", "b" + std::to_string(b), n, std::move(tq), Rel::eq, 0.0);
        }

    // Voltage drop along an in-service feeder, relaxed by a big constant when
    // the feeder is out of service.
    for (const auto& fi : fis)
        for (int n = 1; n <= N; ++n) {
            double rr = 2e-3 * fi.r, xx = 2e-3 * fi.x;
            double zz = 1e-6 * (fi.r * fi.r + fi.x * fi.x);
            std::vector<LinTerm> base{T(vn::vsq(fi.from, n), 1.0), T(vn::vsq(fi.to, n), -1.0),
                                      T(vn::fp(fi.name, n), -rr), T(vn::fq(fi.name, n), -xx),
                                      T(vn::isq(fi.name, n), -zz)};
            auto hi = base;
            hi.push_back(T(vn::w(fi.name, n), fi.bigm));
            add("vdrop_hi", fi.name, n, std::move(hi), Rel::le, fi.bigm);
            auto lo = base;
            lo.push_back(T(vn::w(fi.name, n), -fi.bigm));
            add("vdrop_lo", fi.name, n, std::move(lo), Rel::ge, -fi.bigm);
        }

    // Piecewise-linear square terms for both flow blocks of each feeder.
    for (char blk : {'p', 'q'})
        for (const auto& fi : fis)
            for (int n = 1; n <= N; ++n) {
                std::string fam(1, blk);
                double h = fi.ybar / L;
                std::vector<LinTerm> sum, ylink;
                for (int k = 0; k <= 2 * L; ++k) {
                    sum.push_back(T(vn::lam(blk, fi.name, k, n), 1.0));
                    double yk = (k - L) * h;
                    if (yk != 0.0) ylink.push_back(T(vn::lam(blk, fi.name, k, n), yk));
                }
                ylink.push_back(T(blk == 'p' ? vn::fp(fi.name, n) : vn::fq(fi.name, n), -1.0));
                add("pwl_sum_" + fam, fi.name, n, std::move(sum), Rel::eq, 1.0);
                add("pwl_y_" + fam, fi.name, n, std::move(ylink), Rel::eq, 0.0);
                std::vector<LinTerm> segsum;
                for (int s = 0; s < 2 * L; ++s) segsum.push_back(T(vn::seg(blk, fi.name, s, n), 1.0));
                add("pwl_seg_" + fam, fi.name, n, std::move(segsum), Rel::eq, 1.0);
                for (int k = 0; k <= 2 * L; ++k) {
                    std::vector<LinTerm> adj{T(vn::lam(blk, fi.name, k, n), 1.0)};
                    if (k > 0) adj.push_back(T(vn::seg(blk, fi.name, k - 1, n), -1.0));
                    if (k < 2 * L) adj.push_back(T(vn::seg(blk, fi.name, k, n), -1.0));
                    add("pwl_adj_" + fam, fi.name + "#k" + std::to_string(k), n, std::move(adj), Rel::le,
                        0.0);
                }
            }

    // Squared current matches the linearized squares of both flow blocks.
    for (const auto& fi : fis)
        for (int n = 1; n <= N; ++n) {
            double h = fi.ybar / L;
            std::vector<LinTerm> terms{T(vn::isq(fi.name, n), vnom2)};
            for (char blk : {'p', 'q'})
                for (int k = 0; k <= 2 * L; ++k) {
                    double yk = (k - L) * h;
                    if (yk != 0.0) terms.push_back(T(vn::lam(blk, fi.name, k, n), -yk * yk));
                }
            add("isqr_def", fi.name, n, std::move(terms), Rel::eq, 0.0);
        }

    // Flow and current magnitudes are only available on in-service feeders.
    for (const auto& fi : fis)
        for (int n = 1; n <= N; ++n) {
            add("pflow_hi", fi.name, n, {T(vn::fp(fi.name, n), 1.0), T(vn::w(fi.name, n), -fi.fbar)},
                Rel::le, 0.0);
            add("pflow_lo", fi.name, n, {T(vn::fp(fi.name, n), 1.0), T(vn::w(fi.name, n), fi.fbar)},
                Rel::ge, 0.0);
            add("qflow_hi", fi.name, n, {T(vn::fq(fi.name, n), 1.0), T(vn::w(fi.name, n), -fi.fbar)},
                Rel::le, 0.0);
            add("qflow_lo", fi.name, n, {T(vn::fq(fi.name, n), 1.0), T(vn::w(fi.name, n), fi.fbar)},
                Rel::ge, 0.0);
        }

    // Voltage window for in-use buses (dark buses read zero), current cap for
    // in-service feeders.
    for (BusId b : obs.buses)
        for (int n = 1; n <= N; ++n) {
            add("vmin_gate", "b" + std::to_string(b), n,
                {T(vn::vsq(b, n), 1.0), T(vn::v(b, n), -vmin2)}, Rel::ge, 0.0);
            add("vmax_gate", "b" + std::to_string(b), n,
                {T(vn::vsq(b, n), 1.0), T(vn::v(b, n), -vmax2)}, Rel::le, 0.0);
        }
    for (const auto& fi : fis)
        for (int n = 1; n <= N; ++n)
            add("isqr_cap", fi.name, n,
                {T(vn::isq(fi.name, n), 1.0), T(vn::w(fi.name, n), -fi.imax * fi.imax)}, Rel::le, 0.0);

    // Radial-islanding layer: a unit of fictitious demand per in-use bus must
    // flow from the root through resource buses over the selected directed
    // arcs; arc selection pairs with feeder use and every in-use bus has
    // exactly one selected incoming arc, which makes each island a tree
    // hanging off a resource.
    for (BusId b : obs.buses)
        for (int n = 0; n <= N; ++n) {
            std::vector<LinTerm> bal;
            for (const auto& fi : fis) {
                if (fi.to == b) {
                    bal.push_back(T(vn::h(fi.name, 0, n), 1.0));   // arrives via stored direction
                    bal.push_back(T(vn::h(fi.name, 1, n), -1.0));  // leaves via reverse
                } else if (fi.from == b) {
                    bal.push_back(T(vn::h(fi.name, 1, n), 1.0));
                    bal.push_back(T(vn::h(fi.name, 0, n), -1.0));
                }
            }
            if (resource_buses.count(b)) bal.push_back(T(vn::h0(b, n), 1.0));
            bal.push_back(T(vn::v(b, n), -1.0));
            add("rad_bal", "b" + std::to_string(b), n, std::move(bal), Rel::eq, 0.0);
        }
    for (const auto& fi : fis)
        for (int d = 0; d < 2; ++d)
            for (int n = 0; n <= N; ++n)
                add("rad_cap", fi.name + "#d" + std::to_string(d), n,
                    {T(vn::h(fi.name, d, n), 1.0), T(vn::wfd(fi.name, d, n), -root_cap)}, Rel::le, 0.0);
    for (BusId b : resource_buses)
        for (int n = 0; n <= N; ++n)
            add("rad_cap", "b" + std::to_string(b) + "#root", n,
                {T(vn::h0(b, n), 1.0), T(vn::wfd0(b, n), -root_cap)}, Rel::le, 0.0);
    for (const auto& fi : fis)
        for (int n = 0; n <= N; ++n)
            add("rad_link", fi.name, n,
                {T(vn::v(fi.from, n), 1.0), T(vn::v(fi.to, n), 1.0), T(vn::wfd(fi.name, 0, n), -2.0),
                 T(vn::wfd(fi.name, 1, n), -2.0)},
                Rel::ge, 0.0);
    for (BusId b : resource_buses)
        for (int n = 0; n <= N; ++n)
            add("rad_link", "b" + std::to_string(b) + "#root", n,
                {T(vn::wfd0(b, n), 2.0), T(vn::v(b, n), -1.0)}, Rel::le, 1.0);
    for (const auto& fi : fis)
        for (int n = 0; n <= N; ++n)
            add("rad_map", fi.name, n,
                {T(vn::wfd(fi.name, 0, n), 1.0), T(vn::wfd(fi.name, 1, n), 1.0),
                 T(vn::w(fi.name, n), -1.0)},
                Rel::eq, 0.0);
    for (BusId b : obs.buses)
        for (int n = 0; n <= N; ++n) {
            std::vector<LinTerm> par;
            for (const auto& fi : fis) {
                if (fi.to == b) par.push_back(T(vn::wfd(fi.name, 0, n), 1.0));
                else if (fi.from == b) par.push_back(T(vn::wfd(fi.name, 1, n), 1.0));
            }
            if (resource_buses.count(b)) par.push_back(T(vn::wfd0(b, n), 1.0));
            par.push_back(T(vn::v(b, n), -1.0));
            add("rad_parent", "b" + std::to_string(b), n, std::move(par), Rel::eq, 0.0);
        }

    // Buses without a resource inject nothing.
    for (BusId b : obs.buses) {
        if (resource_buses.count(b)) continue;
        for (int n = 0; n <= N; ++n) {
            add("gen_zero_p", "b" + std::to_string(b), n, {T(vn::pg(b, n), 1.0)}, Rel::eq, 0.0);
            add("gen_zero_q", "b" + std::to_string(b), n, {T(vn::qg(b, n), 1.0)}, Rel::eq, 0.0);
        }
    }

    // DG coupling, capability, synchronization, ramping, and reactive range
    // proportional to active output.
    for (const auto& [b, ts] : obs.dg_start) {
        const DgUnit* d = net.dg_at(b);
        const auto& pre = presync.at(b);
        std::string eb = "b" + std::to_string(b);
        for (int n = 0; n <= N; ++n) {
            add("dg_link_p", eb, n, {T(vn::pg(b, n), 1.0), T(vn::pdg(b, n), -1.0)}, Rel::eq, 0.0);
            add("dg_link_q", eb, n, {T(vn::qg(b, n), 1.0), T(vn::qdg(b, n), -1.0)}, Rel::eq, 0.0);
            // Capability and synchronization rows describe what the unit may do
            // next; the boundary output is whatever was actually observed.
            if (n >= 1) {
                add("dg_cap_hi", eb, n, {T(vn::pdg(b, n), 1.0), T(vn::v(b, n), -d->p_max_kw)}, Rel::le,
                    0.0);
                add("dg_cap_lo", eb, n, {T(vn::pdg(b, n), 1.0), T(vn::v(b, n), -d->p_min_kw)}, Rel::ge,
                    0.0);
                if (pre[n]) add("dg_sync", eb, n, {T(vn::pdg(b, n), 1.0)}, Rel::eq, 0.0);
            }
            if (d->p_max_kw > 0) {
                add("dg_q_hi", eb, n,
                    {T(vn::qdg(b, n), 1.0), T(vn::pdg(b, n), -d->q_max_kvar / d->p_max_kw)}, Rel::le,
                    0.0);
                add("dg_q_lo", eb, n,
                    {T(vn::qdg(b, n), 1.0), T(vn::pdg(b, n), -d->q_min_kvar / d->p_max_kw)}, Rel::ge,
                    0.0);
            }
        }
        double step_kw = d->ramp_kw_per_min * grid.step_min;
        for (int n = 0; n + 1 <= N; ++n) {
            if (pre[n] || pre[n + 1]) continue;  // ramping binds only between synchronized points
            add("dg_ramp_up", eb, n, {T(vn::pdg(b, n + 1), 1.0), T(vn::pdg(b, n), -1.0)}, Rel::le,
                step_kw);
            add("dg_ramp_dn", eb, n, {T(vn::pdg(b, n + 1), 1.0), T(vn::pdg(b, n), -1.0)}, Rel::ge,
                -step_kw);
        }
    }

    // ES coupling, charge/discharge exclusivity, banded reactive capability,
    // and the state-of-charge recursion.
    for (BusId b : obs.es_buses) {
        const EsUnit* e = net.es_at(b);
        std::string eb = "b" + std::to_string(b);
        double base = e->rated_kw();
        for (int n = 0; n <= N; ++n) {
            add("es_net_p", eb, n,
                {T(vn::pg(b, n), 1.0), T(vn::pesd(b, n), -1.0), T(vn::pesc(b, n), 1.0)}, Rel::eq, 0.0);
            add("es_net_q", eb, n, {T(vn::qg(b, n), 1.0), T(vn::qes(b, n), -1.0)}, Rel::eq, 0.0);
            add("es_ch_cap", eb, n, {T(vn::pesc(b, n), 1.0), T(vn::vch(b, n), -e->p_ch_max_kw)},
                Rel::le, 0.0);
            add("es_dis_cap", eb, n, {T(vn::pesd(b, n), 1.0), T(vn::vdis(b, n), -e->p_dis_max_kw)},
                Rel::le, 0.0);
            add("es_mutex", eb, n,
                {T(vn::vch(b, n), 1.0), T(vn::vdis(b, n), 1.0), T(vn::v(b, n), -1.0)}, Rel::le, 0.0);

            if (cfg.es_q_mode == EsQMode::table_binary && !e->q_capability.empty()) {
                std::vector<LinTerm> pick;
                for (std::size_t r = 0; r < e->q_capability.size(); ++r)
                    pick.push_back(T(vn::esb(b, static_cast<int>(r), n), 1.0));
                pick.push_back(T(vn::v(b, n), -1.0));
                add("es_band_pick", eb, n, std::move(pick), Rel::eq, 0.0);

                // |P_ES| = charge + discharge under exclusivity; the selected
                // band's window contains it, with the rated power as the
                // relaxation constant for unselected rows.
                std::vector<LinTerm> blo{T(vn::pesc(b, n), 1.0), T(vn::pesd(b, n), 1.0)};
                std::vector<LinTerm> bhi{T(vn::pesc(b, n), 1.0), T(vn::pesd(b, n), 1.0)};
                for (std::size_t r = 0; r < e->q_capability.size(); ++r) {
                    blo.push_back(T(vn::esb(b, static_cast<int>(r), n), -e->q_capability[r].p_lo * base));
                    bhi.push_back(T(vn::esb(b, static_cast<int>(r), n), -e->q_capability[r].p_hi * base));
                }
                add("es_band_lo", eb, n, std::move(blo), Rel::ge, 0.0);
                add("es_band_hi", eb, n, std::move(bhi), Rel::le, 0.0);

                std::vector<LinTerm> qhi{T(vn::qes(b, n), 1.0)};
                std::vector<LinTerm> qlo{T(vn::qes(b, n), 1.0)};
                for (std::size_t r = 0; r < e->q_capability.size(); ++r) {
                    qhi.push_back(T(vn::esb(b, static_cast<int>(r), n), -e->q_capability[r].q_max * base));
                    qlo.push_back(T(vn::esb(b, static_cast<int>(r), n), -e->q_capability[r].q_min * base));
                }
                add("es_q_hi", eb, n, std::move(qhi), Rel::le, 0.0);
                add("es_q_lo", eb, n, std::move(qlo), Rel::ge, 0.0);
            } else {
                const EsQRow row = e->q_capability.empty() ? EsQRow{0, 1, 0, 0} : e->q_capability.back();
                add("es_q_hi", eb, n, {T(vn::qes(b, n), 1.0), T(vn::v(b, n), -row.q_max * base)},
                    Rel::le, 0.0);
                add("es_q_lo", eb, n, {T(vn::qes(b, n), 1.0), T(vn::v(b, n), -row.q_min * base)},
                    Rel::ge, 0.0);
            }
        }
        // Stored energy at a point reflects the activity over the interval
        // that ends there; the boundary activity echoes the observation and
        // moves no energy.
        double scale = (grid.step_min / 60.0) / e->capacity_kwh;
        for (int n = 1; n <= N; ++n)
            add("es_soc", eb, n,
                {T(vn::soc(b, n), 1.0), T(vn::soc(b, n - 1), -1.0), T(vn::pesc(b, n), -e->eta_ch * scale),
                 T(vn::pesd(b, n), e->eta_dis * scale)},
                Rel::eq, 0.0);
    }

    // Load model: per-class pickup capped by connected load on an in-use bus,
    // reactive load proportional to active pickup, a minimum pickup fraction
    // for in-use buses, and no shedding of priority-1/2 load once served.
    for (BusId b : obs.buses) {
        const Bus* bus = net.find_bus(b);
        std::string eb = "b" + std::to_string(b);
        double lam_min = bus->lambda_min >= 0 ? bus->lambda_min : cfg.lambda_min_default;
        double par_sum = bus->load_par[0].p_kw + bus->load_par[1].p_kw + bus->load_par[2].p_kw;
        for (int n = 0; n <= N; ++n) {
            add("load_sum_p", eb, n,
                {T(vn::pl(b, n), 1.0), T(vn::plc(b, 1, n), -1.0), T(vn::plc(b, 2, n), -1.0),
                 T(vn::plc(b, 3, n), -1.0)},
                Rel::eq, 0.0);
            for (int c = 0; c < 3; ++c)
                add("load_cap" + std::to_string(c + 1), eb, n,
                    {T(vn::plc(b, c + 1, n), 1.0), T(vn::v(b, n), -bus->load_par[c].p_kw)}, Rel::le,
                    0.0);
            add("load_sum_q", eb, n,
                {T(vn::ql(b, n), 1.0), T(vn::qlc(b, 1, n), -1.0), T(vn::qlc(b, 2, n), -1.0),
                 T(vn::qlc(b, 3, n), -1.0)},
                Rel::eq, 0.0);
            for (int c = 0; c < 3; ++c) {
                if (bus->load_par[c].p_kw > 0) {
                    double ratio = bus->load_par[c].q_kvar / bus->load_par[c].p_kw;
                    add("load_prop" + std::to_string(c + 1), eb, n,
                        {T(vn::qlc(b, c + 1, n), 1.0), T(vn::plc(b, c + 1, n), -ratio)}, Rel::eq, 0.0);
                } else {
                    add("load_prop" + std::to_string(c + 1), eb, n, {T(vn::qlc(b, c + 1, n), 1.0)},
                        Rel::eq, 0.0);
                }
            }
            // The minimum-pickup rule constrains future operating points; the
            // boundary pickup is a fact, not a decision.
            if (n >= 1 && par_sum > 0 && lam_min > 0)
                add("load_min", eb, n, {T(vn::pl(b, n), 1.0), T(vn::v(b, n), -lam_min * par_sum)},
                    Rel::ge, 0.0);
        }
        for (int n = 0; n + 1 <= N; ++n) {
            add("keep_l1", eb, n, {T(vn::plc(b, 1, n), 1.0), T(vn::plc(b, 1, n + 1), -1.0)}, Rel::le,
                0.0);
            add("keep_l2", eb, n, {T(vn::plc(b, 2, n), 1.0), T(vn::plc(b, 2, n + 1), -1.0)}, Rel::le,
                0.0);
        }
    }

    // Switching is one-way within the horizon: in-use buses and feeders stay
    // in use.
    for (BusId b : obs.buses)
        for (int n = 0; n + 1 <= N; ++n)
            add("keep_bus", "b" + std::to_string(b), n,
                {T(vn::v(b, n), 1.0), T(vn::v(b, n + 1), -1.0)}, Rel::le, 0.0);
    for (const auto& fi : fis)
        for (int n = 0; n + 1 <= N; ++n)
            add("keep_feeder", fi.name, n, {T(vn::w(fi.name, n), 1.0), T(vn::w(fi.name, n + 1), -1.0)},
                Rel::le, 0.0);

    // Objective: priority-weighted restored energy over the scheduled points.
    for (int n = 1; n <= N; ++n)
        for (BusId b : obs.buses) {
            m.objective.push_back({m.find_var(vn::plc(b, 1, n)), cfg.w_l1 * grid.step_min});
            m.objective.push_back({m.find_var(vn::plc(b, 2, n)), cfg.w_l2 * grid.step_min});
            m.objective.push_back({m.find_var(vn::plc(b, 3, n)), cfg.w_l3 * grid.step_min});
        }

    m.degenerate = out.degenerate;
    return out;
}

inline BuildResult build_model(const CcpView& view, const Network& net, const TimeGrid& grid,
                               const MilpConfig& cfg) {
    return build_model(observed_from_view(view, net), net, grid, cfg);
}

// ---------------------------------------------------------------------------
// Schedule extraction.

struct SchedulePoint {
    std::map<BusId, int> v;
    std::map<std::string, int> w;
    std::map<std::string, double> p_flow, q_flow, i_sqr;
    std::map<BusId, double> v_sqr;
    std::map<BusId, double> p_g, q_g;
    std::map<BusId, double> p_dg, q_dg;
    std::map<BusId, double> p_es_ch, p_es_dis, q_es;
    std::map<BusId, int> es_ch, es_dis;
    std::map<BusId, double> soc;
    std::map<BusId, double> pl1, pl2, pl3, ql1, ql2, ql3;
    std::map<std::string, int> arc_use;  // directed arc selectors, "f1_2#d0" / "b5#root"
    std::map<std::string, double> arc_flow;

    double total_pl() const {
        double s = 0;
        for (const auto& [b, x] : pl1) s += x;
        for (const auto& [b, x] : pl2) s += x;
        for (const auto& [b, x] : pl3) s += x;
        return s;
    }
};

struct Schedule {
    int t_c = 0;
    int step_min = 5;
    std::vector<SchedulePoint> points;  // index n -> instant t_c + n*step_min
    double objective = 0.0;
    SolveStatus status = SolveStatus::optimal;
    bool degenerate = false;
};

inline Schedule extract_schedule(const BuildResult& br, const Solution& sol, const TimeGrid& grid,
                                 const Network& net) {
    Schedule sch;
    sch.t_c = grid.t_c;
    sch.step_min = grid.step_min;
    sch.objective = sol.objective;
    sch.status = sol.status;
    sch.degenerate = br.degenerate;
    const MilpInstance& m = br.milp;
    auto val = [&](const std::string& name) {
        int i = m.find_var(name);
        if (i < 0) throw std::logic_error("extract_schedule: missing variable " + name);
        return sol.x[i];
    };
    auto bval = [&](const std::string& name) { return static_cast<int>(std::lround(val(name))); };

    std::set<BusId> resource(br.dg_buses.begin(), br.dg_buses.end());
    for (BusId b : br.es_buses) resource.insert(b);

    for (int n = 0; n <= br.n_points; ++n) {
        SchedulePoint p;
        for (BusId b : br.buses) {
            p.v[b] = bval(vn::v(b, n));
            p.v_sqr[b] = val(vn::vsq(b, n));
            p.p_g[b] = val(vn::pg(b, n));
            p.q_g[b] = val(vn::qg(b, n));
            p.pl1[b] = val(vn::plc(b, 1, n));
            p.pl2[b] = val(vn::plc(b, 2, n));
            p.pl3[b] = val(vn::plc(b, 3, n));
            p.ql1[b] = val(vn::qlc(b, 1, n));
            p.ql2[b] = val(vn::qlc(b, 2, n));
            p.ql3[b] = val(vn::qlc(b, 3, n));
        }
        for (const auto& f : br.feeders) {
            p.w[f] = bval(vn::w(f, n));
            p.p_flow[f] = val(vn::fp(f, n));
            p.q_flow[f] = val(vn::fq(f, n));
            p.i_sqr[f] = val(vn::isq(f, n));
            for (int d = 0; d < 2; ++d) {
                p.arc_use[f + "#d" + std::to_string(d)] = bval(vn::wfd(f, d, n));
                p.arc_flow[f + "#d" + std::to_string(d)] = val(vn::h(f, d, n));
            }
        }
        for (BusId b : resource) {
            p.arc_use["b" + std::to_string(b) + "#root"] = bval(vn::wfd0(b, n));
            p.arc_flow["b" + std::to_string(b) + "#root"] = val(vn::h0(b, n));
        }
        for (BusId b : br.dg_buses) {
            p.p_dg[b] = val(vn::pdg(b, n));
            p.q_dg[b] = val(vn::qdg(b, n));
        }
        for (BusId b : br.es_buses) {
            p.p_es_ch[b] = val(vn::pesc(b, n));
            p.p_es_dis[b] = val(vn::pesd(b, n));
            p.q_es[b] = val(vn::qes(b, n));
            p.es_ch[b] = bval(vn::vch(b, n));
            p.es_dis[b] = bval(vn::vdis(b, n));
            p.soc[b] = val(vn::soc(b, n));
        }
        sch.points.push_back(std::move(p));
    }
    (void)net;
    return sch;
}

// The maximum over-estimate of y^2 by the chord interpolation with the given
// half-range and per-side segment count.
inline double pwl_square_max_error(double ybar, int segments_per_side) {
    double h = ybar / segments_per_side;
    return h * h / 4.0;
}

// Chord interpolation of y^2 on the uniform breakpoint grid, matching the
// model's linearization exactly (used by tests and verification).
inline double pwl_square_chord(double y, double ybar, int segments_per_side) {
    double h = ybar / segments_per_side;
    if (h <= 0) throw std::invalid_argument("pwl_square_chord: empty range");
    double clamped = std::max(-ybar, std::min(ybar, y));
    int s = static_cast<int>(std::floor((clamped + ybar) / h));
    s = std::max(0, std::min(2 * segments_per_side - 1, s));
    double y0 = -ybar + s * h, y1 = y0 + h;
    double t = (clamped - y0) / h;
    return (1 - t) * y0 * y0 + t * y1 * y1;
}

}  // namespace gridrestore
