#pragma once

// Static distribution-network model plus the dynamic switching state used by
// the restoration pipeline: buses, feeders, dispatchable generators (DG),
// energy storage (ES), per-moment network state, and the scheduling time grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gridrestore {

using BusId = int;

inline std::string feeder_name(BusId a, BusId b) {
    if (a > b) std::swap(a, b);
    return "f" + std::to_string(a) + "_" + std::to_string(b);
}

// One priority class worth of connected load at a bus (class 1 is the most
// valuable, class 3 the least).
struct ClassLoad {
    double p_kw = 0.0;
    double q_kvar = 0.0;
};

struct Bus {
    BusId id = 0;
    std::array<ClassLoad, 3> load_par{};  // index 0 -> class 1, ... index 2 -> class 3
    double lambda_min = -1.0;             // minimum restored fraction when energized; <0 -> use config default
    bool has_agent = true;
    int priority_class = 3;  // display label only; scheduling always sees all three classes
};

struct Feeder {
    BusId from = 0;
    BusId to = 0;
    double r_ohm = 0.0;
    double x_ohm = 0.0;
    double i_max_a = 0.0;

    std::string name() const { return feeder_name(from, to); }
};

struct DgUnit {
    BusId bus = 0;
    double p_max_kw = 0.0;
    double p_min_kw = 0.0;
    double q_max_kvar = 0.0;
    double q_min_kvar = 0.0;
    double ramp_kw_per_min = 0.0;
    int t_syn_min = 0;    // synchronization delay after start
    int t_start_min = 0;  // absolute start instant on the universal clock (may be negative)
};

// One row of an ES reactive-capability table. Active-power breakpoints and
// reactive bounds are in per-unit of the unit's rated power.
struct EsQRow {
    double p_lo = 0.0;
    double p_hi = 0.0;
    double q_min = 0.0;
    double q_max = 0.0;
};

struct EsUnit {
    BusId bus = 0;
    double capacity_kwh = 0.0;
    double p_ch_max_kw = 0.0;
    double p_dis_max_kw = 0.0;
    double eta_ch = 1.0;   // fraction of charging power stored (typically in (0, 1])
    double eta_dis = 1.0;  // energy drawn per unit delivered (typically >= 1)
    double soc_min = 0.0;
    double soc_max = 1.0;
    std::vector<EsQRow> q_capability;

    double rated_kw() const { return std::max(p_ch_max_kw, p_dis_max_kw); }
};

// State of charge after running the unit for dt_min minutes at the given
// charge/discharge powers (kW).
inline double soc_after(const EsUnit& es, double soc, double p_ch_kw, double p_dis_kw, int dt_min) {
    double hours = dt_min / 60.0;
    return soc + (es.eta_ch * p_ch_kw - es.eta_dis * p_dis_kw) * hours / es.capacity_kwh;
}

struct Network {
    std::vector<Bus> buses;
    std::vector<Feeder> feeders;
    std::vector<DgUnit> dgs;
    std::vector<EsUnit> ess;
    double v_nom_kv = 0.0;
    double v_min_kv = 0.0;
    double v_max_kv = 0.0;

    const Bus* find_bus(BusId id) const {
        for (const auto& b : buses)
            if (b.id == id) return &b;
        return nullptr;
    }
    const Feeder* find_feeder(BusId a, BusId b) const {
        for (const auto& f : feeders)
            if ((f.from == a && f.to == b) || (f.from == b && f.to == a)) return &f;
        return nullptr;
    }
    const Feeder* find_feeder(const std::string& name) const {
        for (const auto& f : feeders)
            if (f.name() == name) return &f;
        return nullptr;
    }
    const DgUnit* dg_at(BusId id) const {
        for (const auto& d : dgs)
            if (d.bus == id) return &d;
        return nullptr;
    }
    const EsUnit* es_at(BusId id) const {
        for (const auto& e : ess)
            if (e.bus == id) return &e;
        return nullptr;
    }
    bool is_resource_bus(BusId id) const { return dg_at(id) != nullptr || es_at(id) != nullptr; }
};

// Restored load at one bus, split by priority class.
struct BusLoadState {
    double pl1 = 0, pl2 = 0, pl3 = 0;
    double ql1 = 0, ql2 = 0, ql3 = 0;
    double total_p() const { return pl1 + pl2 + pl3; }
};

// Snapshot of the physical/switching state at one instant. Sparse maps with
// defaulting accessors: buses and feeders default to available, de-energized.
struct NetworkState {
    int time_min = 0;
    std::map<BusId, bool> avail_bus;           // damaged/failed -> false
    std::map<std::string, bool> avail_feeder;  // keyed by feeder_name
    std::map<BusId, bool> v;                   // bus in use (energized)
    std::map<std::string, bool> w;             // feeder in use
    std::map<BusId, BusLoadState> restored;
    std::map<BusId, double> p_g;  // net active injection of the resource at the bus, kW
    std::map<BusId, double> q_g;
    std::map<BusId, double> soc;  // ES state of charge, fraction of capacity
    std::map<BusId, int> dg_start;  // absolute start instant for DGs whose start is known

    static bool get(const std::map<BusId, bool>& m, BusId k, bool def) {
        auto it = m.find(k);
        return it == m.end() ? def : it->second;
    }
    static bool get(const std::map<std::string, bool>& m, const std::string& k, bool def) {
        auto it = m.find(k);
        return it == m.end() ? def : it->second;
    }
    bool bus_available(BusId id) const { return get(avail_bus, id, true); }
    bool feeder_available(const std::string& n) const { return get(avail_feeder, n, true); }
    bool bus_in_use(BusId id) const { return get(v, id, false); }
    bool feeder_in_use(const std::string& n) const { return get(w, n, false); }
    double p_g_at(BusId id) const {
        auto it = p_g.find(id);
        return it == p_g.end() ? 0.0 : it->second;
    }
    double q_g_at(BusId id) const {
        auto it = q_g.find(id);
        return it == q_g.end() ? 0.0 : it->second;
    }
    double soc_at(BusId id, double def = 0.0) const {
        auto it = soc.find(id);
        return it == soc.end() ? def : it->second;
    }
    BusLoadState load_at(BusId id) const {
        auto it = restored.find(id);
        return it == restored.end() ? BusLoadState{} : it->second;
    }
};

// Scheduling clock: control moment t_c, look-ahead horizon T split into
// intervals of step_min, re-scheduling period control_min.
struct TimeGrid {
    int t_c = 0;
    int horizon_min = 120;
    int step_min = 5;
    int control_min = 30;

    int intervals() const { return horizon_min / step_min; }  // number of steps; points are 0..intervals()
    int point_time(int n) const { return t_c + n * step_min; }

    void validate() const {
        if (step_min <= 0) throw std::invalid_argument("time grid: step_min must be positive");
        if (horizon_min <= 0 || horizon_min % step_min != 0)
            throw std::invalid_argument("time grid: horizon_min must be a positive multiple of step_min");
        if (control_min <= 0 || control_min % step_min != 0)
            throw std::invalid_argument("time grid: control_min must be a positive multiple of step_min");
        if (control_min >= horizon_min)
            throw std::invalid_argument("time grid: control_min must be smaller than horizon_min");
    }
};

// ---------------------------------------------------------------------------
// Validation

inline std::vector<std::string> validate_network(const Network& net) {
    std::vector<std::string> out;
    auto complain = [&](const std::string& s) { out.push_back(s); };

    std::set<BusId> ids;
    for (const auto& b : net.buses) {
        if (!ids.insert(b.id).second) complain("duplicate bus id " + std::to_string(b.id));
        for (int c = 0; c < 3; ++c) {
            if (b.load_par[c].p_kw < 0)
                complain("bus " + std::to_string(b.id) + ": class " + std::to_string(c + 1) +
                         " active load parameter is negative");
        }
        if (b.lambda_min >= 0 && b.lambda_min > 1)
            complain("bus " + std::to_string(b.id) + ": lambda_min exceeds 1");
        if (b.priority_class < 1 || b.priority_class > 3)
            complain("bus " + std::to_string(b.id) + ": priority_class must be 1, 2 or 3");
    }
    if (net.v_min_kv <= 0 || net.v_min_kv >= net.v_nom_kv || net.v_nom_kv >= net.v_max_kv)
        complain("voltage levels must satisfy 0 < v_min < v_nom < v_max");

    std::set<std::string> fnames;
    for (const auto& f : net.feeders) {
        if (f.from == f.to) complain("feeder " + f.name() + " is a self-loop");
        if (!ids.count(f.from) || !ids.count(f.to))
            complain("feeder " + f.name() + " references an unknown bus");
        if (!fnames.insert(f.name()).second) complain("duplicate feeder " + f.name());
        if (f.r_ohm < 0 || f.x_ohm < 0) complain("feeder " + f.name() + " has negative impedance");
        if (f.i_max_a <= 0) complain("feeder " + f.name() + " has non-positive ampacity");
    }

    std::set<BusId> resource_buses;
    for (const auto& d : net.dgs) {
        if (!ids.count(d.bus)) complain("DG references unknown bus " + std::to_string(d.bus));
        if (!resource_buses.insert(d.bus).second)
            complain("bus " + std::to_string(d.bus) + " hosts more than one resource");
        if (d.p_max_kw <= 0 || d.p_min_kw < 0 || d.p_min_kw > d.p_max_kw)
            complain("DG at bus " + std::to_string(d.bus) + ": need 0 <= p_min <= p_max, p_max > 0");
        if (d.q_max_kvar < d.q_min_kvar)
            complain("DG at bus " + std::to_string(d.bus) + ": q_max < q_min");
        if (d.ramp_kw_per_min <= 0)
            complain("DG at bus " + std::to_string(d.bus) + ": ramp rate must be positive");
        if (d.t_syn_min < 0) complain("DG at bus " + std::to_string(d.bus) + ": negative sync delay");
    }
    for (const auto& e : net.ess) {
        if (!ids.count(e.bus)) complain("ES references unknown bus " + std::to_string(e.bus));
        if (!resource_buses.insert(e.bus).second)
            complain("bus " + std::to_string(e.bus) + " hosts more than one resource");
        if (e.capacity_kwh <= 0) complain("ES at bus " + std::to_string(e.bus) + ": non-positive capacity");
        if (e.p_ch_max_kw < 0 || e.p_dis_max_kw < 0 || e.rated_kw() <= 0)
            complain("ES at bus " + std::to_string(e.bus) + ": bad power ratings");
        if (e.eta_ch <= 0 || e.eta_dis <= 0)
            complain("ES at bus " + std::to_string(e.bus) + ": efficiencies must be positive");
        if (!(0 <= e.soc_min && e.soc_min < e.soc_max && e.soc_max <= 1))
            complain("ES at bus " + std::to_string(e.bus) + ": need 0 <= soc_min < soc_max <= 1");
        double prev_hi = 0.0;
        bool first = true;
        for (const auto& r : e.q_capability) {
            if (r.p_lo > r.p_hi || r.q_min > r.q_max)
                complain("ES at bus " + std::to_string(e.bus) + ": malformed capability row");
            if (first && r.p_lo != 0.0)
                complain("ES at bus " + std::to_string(e.bus) + ": capability rows must start at 0");
            if (!first && std::abs(r.p_lo - prev_hi) > 1e-12)
                complain("ES at bus " + std::to_string(e.bus) + ": capability rows must tile contiguously");
            prev_hi = r.p_hi;
            first = false;
        }
        if (!e.q_capability.empty() && std::abs(prev_hi - 1.0) > 1e-9)
            complain("ES at bus " + std::to_string(e.bus) +
                     ": capability rows must end exactly at rated power (1.0 per-unit)");
    }
    return out;
}

// Checks a state snapshot against the network it describes: restored load may
// not exceed the connected parameters, stored energy must respect the unit's
// band, and nothing damaged may be energized.
inline std::vector<std::string> validate_state(const Network& net, const NetworkState& st) {
    std::vector<std::string> out;
    auto complain = [&](const std::string& s) { out.push_back(s); };

    for (const auto& b : net.buses) {
        BusLoadState ld = st.load_at(b.id);
        const double eps = 1e-9;
        double pl[3] = {ld.pl1, ld.pl2, ld.pl3};
        for (int c = 0; c < 3; ++c) {
            if (pl[c] < -eps || pl[c] > b.load_par[c].p_kw + eps)
                complain("bus " + std::to_string(b.id) + ": restored class " + std::to_string(c + 1) +
                         " load outside [0, connected]");
        }
        if (st.bus_in_use(b.id) && !st.bus_available(b.id))
            complain("bus " + std::to_string(b.id) + " is in use but unavailable");
        if (!st.bus_in_use(b.id) && ld.total_p() > eps)
            complain("bus " + std::to_string(b.id) + " reports restored load while de-energized");
    }
    for (const auto& f : net.feeders) {
        if (st.feeder_in_use(f.name()) && !st.feeder_available(f.name()))
            complain("feeder " + f.name() + " is in use but unavailable");
        if (st.feeder_in_use(f.name()) && (!st.bus_in_use(f.from) || !st.bus_in_use(f.to)))
            complain("feeder " + f.name() + " is in use but an endpoint bus is not");
    }
    for (const auto& e : net.ess) {
        double s = st.soc_at(e.bus, e.soc_min);
        if (s < e.soc_min - 1e-9 || s > e.soc_max + 1e-9)
            complain("ES at bus " + std::to_string(e.bus) + ": state of charge outside its band");
    }
    for (const auto& [b, v] : st.v)
        if (v && !net.find_bus(b)) complain("state energizes unknown bus " + std::to_string(b));
    for (const auto& [f, w] : st.w)
        if (w && !net.find_feeder(f)) complain("state energizes unknown feeder " + f);
    return out;
}

// ---------------------------------------------------------------------------
// Graph utilities

// Connected components of an undirected graph. Components are returned with
// members ascending and components ordered by smallest member.
inline std::vector<std::vector<int>> connected_components(const std::set<int>& nodes,
                                                          const std::vector<std::pair<int, int>>& edges) {
    std::map<int, std::vector<int>> adj;
    for (auto [a, b] : edges) {
        if (!nodes.count(a) || !nodes.count(b))
            throw std::invalid_argument("connected_components: edge endpoint not in node set");
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::set<int> seen;
    std::vector<std::vector<int>> comps;
    for (int start : nodes) {  // std::set iterates ascending -> deterministic order
        if (seen.count(start)) continue;
        std::vector<int> comp, stack{start};
        seen.insert(start);
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            comp.push_back(u);
            auto it = adj.find(u);
            if (it == adj.end()) continue;
            for (int w : it->second)
                if (seen.insert(w).second) stack.push_back(w);
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    return comps;
}

struct RadialityReport {
    bool ok = true;
    std::string diagnostic;  // first violation found, empty when ok
};

// Checks that the energized part of the network forms radial islands:
//  (a) every in-use feeder joins two in-use buses,
//  (b) every energized island is cycle-free (|edges| == |buses| - 1),
//  (c) every energized island contains at least one bus in resource_buses.
inline RadialityReport is_radial_islanding(const Network& net, const std::set<BusId>& on_buses,
                                           const std::set<std::string>& wired_feeders,
                                           const std::set<BusId>& resource_buses) {
    std::vector<std::pair<int, int>> on_edges;
    for (const auto& f : net.feeders) {
        if (!wired_feeders.count(f.name())) continue;
        if (!on_buses.count(f.from) || !on_buses.count(f.to))
            return {false, "feeder " + f.name() + " is in use but an endpoint bus is not"};
        on_edges.emplace_back(f.from, f.to);
    }

    auto comps = connected_components(std::set<int>(on_buses.begin(), on_buses.end()), on_edges);
    for (const auto& comp : comps) {
        std::set<int> members(comp.begin(), comp.end());
        std::size_t edge_count = 0;
        for (auto [a, b] : on_edges)
            if (members.count(a)) ++edge_count;
        if (edge_count + 1 != comp.size())
            return {false, "island containing bus " + std::to_string(comp.front()) +
                               " has " + std::to_string(edge_count) + " feeders for " +
                               std::to_string(comp.size()) + " buses (not a tree)"};
        bool has_resource = std::any_of(comp.begin(), comp.end(),
                                        [&](int id) { return resource_buses.count(id) != 0; });
        if (!has_resource)
            return {false, "island containing bus " + std::to_string(comp.front()) +
                               " has no generation resource"};
    }
    return {};
}

inline RadialityReport is_radial_islanding(const Network& net, const NetworkState& st) {
    std::set<BusId> on_buses;
    for (const auto& b : net.buses)
        if (st.bus_in_use(b.id)) on_buses.insert(b.id);
    std::set<std::string> wired;
    for (const auto& f : net.feeders)
        if (st.feeder_in_use(f.name())) wired.insert(f.name());
    std::set<BusId> resources;
    for (const auto& b : net.buses)
        if (net.is_resource_bus(b.id)) resources.insert(b.id);
    return is_radial_islanding(net, on_buses, wired, resources);
}

}  // namespace gridrestore
