#pragma once

// Scenario ingestion and serialization. A scenario is one versioned JSON
// document with five sections — network, state, comm, events, config — that
// fully determines a simulation run. Parsing is strict: unknown keys and
// version mismatches are errors, and every referential fault is reported with
// the element that caused it. A handful of reference scenarios ship built in.

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gridrestore/consensus.hpp"
#include "gridrestore/grid.hpp"
#include "gridrestore/model_builder.hpp"
#include "gridrestore/rolling.hpp"

namespace gridrestore {

inline constexpr int kScenarioVersion = 1;

struct Scenario {
    std::string name;
    Network net;
    NetworkState state;
    CommGraph comm;
    std::vector<Event> events;
    MilpConfig milp;
    IdpConfig idp;
    TimeGrid grid;     // grid.t_c is the first scheduling moment
    int end_min = 0;   // simulate until this instant
};

struct ScenarioError : std::runtime_error {
    std::vector<std::string> errors;
    explicit ScenarioError(std::vector<std::string> errs)
        : std::runtime_error(join(errs)), errors(std::move(errs)) {}

    static std::string join(const std::vector<std::string>& errs) {
        std::ostringstream os;
        os << errs.size() << " scenario error(s)";
        for (const auto& e : errs) os << "\n  " << e;
        return os.str();
    }
};

// ---------------------------------------------------------------------------
// Validation beyond the JSON schema: referential integrity across sections.

inline std::vector<std::string> scenario_errors(const Scenario& s) {
    std::vector<std::string> errs = validate_network(s.net);
    for (auto& e : errs) e = "network: " + e;
    for (const auto& e : validate_state(s.net, s.state)) errs.push_back("state: " + e);

    std::set<BusId> agent_buses;
    for (const auto& b : s.net.buses)
        if (b.has_agent) agent_buses.insert(b.id);
    for (const auto& [id, avail] : s.comm.agents)
        if (!agent_buses.count(id))
            errs.push_back("comm: agent " + std::to_string(id) + " has no agent-carrying bus");
    for (const auto& [a, b] : s.comm.links) {
        if (!s.comm.agents.count(a) || !s.comm.agents.count(b))
            errs.push_back("comm: link " + std::to_string(a) + "-" + std::to_string(b) +
                           " references an unknown agent");
    }

    for (std::size_t i = 0; i < s.events.size(); ++i) {
        const Event& ev = s.events[i];
        std::string where = "events[" + std::to_string(i) + "]: ";
        auto known_bus = [&](BusId b) { return s.net.find_bus(b) != nullptr; };
        switch (ev.kind) {
            case EventKind::dg_discovered:
                if (!known_bus(ev.dg.bus)) errs.push_back(where + "dg bus " + std::to_string(ev.dg.bus) + " not in network");
                break;
            case EventKind::es_discovered:
                if (!known_bus(ev.es.bus)) errs.push_back(where + "es bus " + std::to_string(ev.es.bus) + " not in network");
                if (ev.es_soc < 0 || ev.es_soc > 1) errs.push_back(where + "soc must lie in [0, 1]");
                break;
            case EventKind::agent_restored:
                if (!agent_buses.count(ev.bus)) errs.push_back(where + "agent " + std::to_string(ev.bus) + " not in network");
                break;
            case EventKind::feeder_repaired:
                if (!s.net.find_feeder(ev.feeder)) errs.push_back(where + "feeder " + ev.feeder + " not in network");
                break;
            case EventKind::bus_repaired:
                if (!known_bus(ev.bus)) errs.push_back(where + "bus " + std::to_string(ev.bus) + " not in network");
                break;
            case EventKind::link_restored:
                if (!agent_buses.count(ev.link_a) || !agent_buses.count(ev.link_b))
                    errs.push_back(where + "link endpoints must be agent-carrying buses");
                break;
            case EventKind::load_scaled:
                if (!known_bus(ev.bus)) errs.push_back(where + "bus " + std::to_string(ev.bus) + " not in network");
                if (ev.factor < 0) errs.push_back(where + "factor must be non-negative");
                break;
        }
    }

    try {
        s.grid.validate();
    } catch (const std::exception& e) {
        errs.push_back(std::string("config.time: ") + e.what());
    }
    if (s.end_min <= s.grid.t_c)
        errs.push_back("config.time: end_min must lie beyond t0_min");
    else if ((s.end_min - s.grid.t_c) % s.grid.step_min != 0)
        errs.push_back("config.time: end_min must be a whole number of steps beyond t0_min");
    if (s.milp.pwl_segments < 1) errs.push_back("config: pwl_segments must be at least 1");
    if (s.idp.tol <= 0) errs.push_back("config.idp: tol must be positive");
    if (s.idp.k_max < 1) errs.push_back("config.idp: k_max must be at least 1");
    return errs;
}

// ---------------------------------------------------------------------------
// JSON emission. The layout is canonical: fixed section order, arrays sorted
// the way the in-memory containers are, state maps reduced to their non-default
// entries — so structurally equal scenarios serialize identically.

namespace scenariodetail {

using json = nlohmann::ordered_json;

inline json dg_to_json(const DgUnit& d) {
    json o;
    o["bus"] = d.bus;
    o["p_max_kw"] = d.p_max_kw;
    o["p_min_kw"] = d.p_min_kw;
    o["q_max_kvar"] = d.q_max_kvar;
    o["q_min_kvar"] = d.q_min_kvar;
    o["ramp_kw_per_min"] = d.ramp_kw_per_min;
    o["t_syn_min"] = d.t_syn_min;
    o["t_start_min"] = d.t_start_min;
    return o;
}

inline json es_to_json(const EsUnit& e) {
    json o;
    o["bus"] = e.bus;
    o["capacity_kwh"] = e.capacity_kwh;
    o["p_ch_max_kw"] = e.p_ch_max_kw;
    o["p_dis_max_kw"] = e.p_dis_max_kw;
    o["eta_ch"] = e.eta_ch;
    o["eta_dis"] = e.eta_dis;
    o["soc_min"] = e.soc_min;
    o["soc_max"] = e.soc_max;
    json bands = json::array();
    for (const auto& r : e.q_capability)
        bands.push_back(json{{"p_lo", r.p_lo}, {"p_hi", r.p_hi}, {"q_min", r.q_min}, {"q_max", r.q_max}});
    o["q_capability"] = std::move(bands);
    return o;
}

inline json feeder_key(const std::string& name, const Network& net) {
    const Feeder* fd = net.find_feeder(name);
    if (fd) return json::array({fd->from, fd->to});
    return json::array({name});  // unknown feeder: keep the raw name visible
}

}  // namespace scenariodetail

inline nlohmann::ordered_json scenario_to_json(const Scenario& s) {
    using scenariodetail::json;
    json doc;
    doc["version"] = kScenarioVersion;
    doc["name"] = s.name;

    json net;
    net["v_nom_kv"] = s.net.v_nom_kv;
    net["v_min_kv"] = s.net.v_min_kv;
    net["v_max_kv"] = s.net.v_max_kv;
    json buses = json::array();
    for (const auto& b : s.net.buses) {
        json o;
        o["id"] = b.id;
        o["load_kw"] = {b.load_par[0].p_kw, b.load_par[1].p_kw, b.load_par[2].p_kw};
        o["load_kvar"] = {b.load_par[0].q_kvar, b.load_par[1].q_kvar, b.load_par[2].q_kvar};
        if (b.lambda_min >= 0) o["lambda_min"] = b.lambda_min;
        if (b.priority_class != 3) o["priority_class"] = b.priority_class;
        if (!b.has_agent) o["has_agent"] = false;
        buses.push_back(std::move(o));
    }
    net["buses"] = std::move(buses);
    json feeders = json::array();
    for (const auto& f : s.net.feeders)
        feeders.push_back(json{{"from", f.from},
                               {"to", f.to},
                               {"r_ohm", f.r_ohm},
                               {"x_ohm", f.x_ohm},
                               {"i_max_a", f.i_max_a}});
    net["feeders"] = std::move(feeders);
    json dgs = json::array();
    for (const auto& d : s.net.dgs) dgs.push_back(scenariodetail::dg_to_json(d));
    net["dgs"] = std::move(dgs);
    json ess = json::array();
    for (const auto& e : s.net.ess) ess.push_back(scenariodetail::es_to_json(e));
    net["ess"] = std::move(ess);
    doc["network"] = std::move(net);

    json st;
    st["time_min"] = s.state.time_min;
    json arr = json::array();
    for (const auto& [b, ok] : s.state.avail_bus)
        if (!ok) arr.push_back(b);
    st["unavailable_buses"] = std::move(arr);
    arr = json::array();
    for (const auto& [f, ok] : s.state.avail_feeder)
        if (!ok) arr.push_back(scenariodetail::feeder_key(f, s.net));
    st["unavailable_feeders"] = std::move(arr);
    arr = json::array();
    for (const auto& [b, on] : s.state.v)
        if (on) arr.push_back(b);
    st["in_use_buses"] = std::move(arr);
    arr = json::array();
    for (const auto& [f, on] : s.state.w)
        if (on) arr.push_back(scenariodetail::feeder_key(f, s.net));
    st["in_use_feeders"] = std::move(arr);
    arr = json::array();
    for (const auto& [b, ld] : s.state.restored) {
        if (ld.pl1 == 0 && ld.pl2 == 0 && ld.pl3 == 0 && ld.ql1 == 0 && ld.ql2 == 0 && ld.ql3 == 0)
            continue;
        arr.push_back(json{{"bus", b},
                           {"pl", {ld.pl1, ld.pl2, ld.pl3}},
                           {"ql", {ld.ql1, ld.ql2, ld.ql3}}});
    }
    st["restored"] = std::move(arr);
    arr = json::array();
    {
        std::set<BusId> inj;
        for (const auto& [b, p] : s.state.p_g)
            if (p != 0) inj.insert(b);
        for (const auto& [b, q] : s.state.q_g)
            if (q != 0) inj.insert(b);
        for (BusId b : inj)
            arr.push_back(json{{"bus", b}, {"p_kw", s.state.p_g_at(b)}, {"q_kvar", s.state.q_g_at(b)}});
    }
    st["injection"] = std::move(arr);
    arr = json::array();
    for (const auto& [b, v] : s.state.soc) arr.push_back(json{{"bus", b}, {"value", v}});
    st["soc"] = std::move(arr);
    arr = json::array();
    for (const auto& [b, t] : s.state.dg_start) arr.push_back(json{{"bus", b}, {"at_min", t}});
    st["dg_started"] = std::move(arr);
    doc["state"] = std::move(st);

    json comm;
    json links = json::array();
    // Links present because the communication graph mirrors the feeder graph
    // are emitted through the flag, not the list.
    std::set<std::pair<int, int>> mirrored;
    bool mirror = true;
    for (const auto& f : s.net.feeders) {
        auto key = std::minmax(f.from, f.to);
        std::pair<int, int> k{key.first, key.second};
        if (s.comm.links.count(k)) mirrored.insert(k);
        else mirror = false;
    }
    if (!mirror || s.net.feeders.empty()) mirrored.clear();
    comm["mirror_feeders"] = !mirrored.empty();
    for (const auto& l : s.comm.links)
        if (!mirrored.count(l)) links.push_back(json::array({l.first, l.second}));
    comm["links"] = std::move(links);
    arr = json::array();
    for (const auto& [id, avail] : s.comm.agents)
        if (!avail) arr.push_back(id);
    comm["unavailable_agents"] = std::move(arr);
    doc["comm"] = std::move(comm);

    json events = json::array();
    for (const auto& ev : s.events) {
        json o;
        o["time"] = ev.time;
        o["kind"] = to_string(ev.kind);
        switch (ev.kind) {
            case EventKind::dg_discovered:
                o["dg"] = scenariodetail::dg_to_json(ev.dg);
                if (!ev.dg_start_known) o["start_known"] = false;
                break;
            case EventKind::es_discovered:
                o["es"] = scenariodetail::es_to_json(ev.es);
                o["soc"] = ev.es_soc;
                break;
            case EventKind::agent_restored: o["agent"] = ev.bus; break;
            case EventKind::feeder_repaired: o["feeder"] = scenariodetail::feeder_key(ev.feeder, s.net); break;
            case EventKind::bus_repaired: o["bus"] = ev.bus; break;
            case EventKind::link_restored: o["link"] = json::array({ev.link_a, ev.link_b}); break;
            case EventKind::load_scaled:
                o["bus"] = ev.bus;
                o["factor"] = ev.factor;
                break;
        }
        events.push_back(std::move(o));
    }
    doc["events"] = std::move(events);

    json cfg;
    cfg["weights"] = {s.milp.w_l1, s.milp.w_l2, s.milp.w_l3};
    cfg["lambda_min_default"] = s.milp.lambda_min_default;
    cfg["pwl_segments"] = s.milp.pwl_segments;
    cfg["es_q_mode"] = s.milp.es_q_mode == EsQMode::table_binary ? "table_binary" : "conservative_fixed";
    cfg["strict_flow_bounds"] = s.milp.strict_flow_bounds;
    cfg["idp"] = json{{"tol", s.idp.tol},
                      {"k_max", s.idp.k_max},
                      {"iteration_latency_ms", s.idp.iteration_latency_ms}};
    cfg["time"] = json{{"t0_min", s.grid.t_c},
                       {"horizon_min", s.grid.horizon_min},
                       {"step_min", s.grid.step_min},
                       {"control_min", s.grid.control_min},
                       {"end_min", s.end_min}};
    doc["config"] = std::move(cfg);
    return doc;
}

inline std::string scenario_to_string(const Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

inline void save_scenario(const Scenario& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_scenario: cannot write " + path);
    out << scenario_to_string(s);
}

// ---------------------------------------------------------------------------
// Strict JSON parsing.

namespace scenariodetail {

struct Parser {
    std::vector<std::string>& errs;

    void fail(const std::string& where, const std::string& what) { errs.push_back(where + ": " + what); }

    bool object(const json& v, const std::string& where) {
        if (v.is_object()) return true;
        fail(where, "expected an object");
        return false;
    }
    bool array(const json& v, const std::string& where) {
        if (v.is_array()) return true;
        fail(where, "expected an array");
        return false;
    }
    void keys(const json& o, const std::set<std::string>& allowed, const std::string& where) {
        if (!o.is_object()) return;
        for (const auto& [k, v] : o.items())
            if (!allowed.count(k)) fail(where, "unknown key '" + k + "'");
    }
    double num(const json& o, const char* key, const std::string& where, double def = 0.0,
               bool required = true) {
        if (!o.is_object() || !o.contains(key)) {
            if (required) fail(where, std::string("missing key '") + key + "'");
            return def;
        }
        const json& v = o.at(key);
        if (!v.is_number()) {
            fail(where + "." + key, "expected a number");
            return def;
        }
        return v.get<double>();
    }
    int integer(const json& o, const char* key, const std::string& where, int def = 0,
                bool required = true) {
        if (!o.is_object() || !o.contains(key)) {
            if (required) fail(where, std::string("missing key '") + key + "'");
            return def;
        }
        const json& v = o.at(key);
        if (!v.is_number_integer()) {
            fail(where + "." + key, "expected an integer");
            return def;
        }
        return v.get<int>();
    }
    bool boolean(const json& o, const char* key, const std::string& where, bool def) {
        if (!o.is_object() || !o.contains(key)) return def;
        const json& v = o.at(key);
        if (!v.is_boolean()) {
            fail(where + "." + key, "expected a boolean");
            return def;
        }
        return v.get<bool>();
    }
    std::string text(const json& o, const char* key, const std::string& where,
                     const std::string& def = "", bool required = true) {
        if (!o.is_object() || !o.contains(key)) {
            if (required) fail(where, std::string("missing key '") + key + "'");
            return def;
        }
        const json& v = o.at(key);
        if (!v.is_string()) {
            fail(where + "." + key, "expected a string");
            return def;
        }
        return v.get<std::string>();
    }
    // Fixed-length numeric triple, e.g. per-class loads.
    std::array<double, 3> triple(const json& o, const char* key, const std::string& where) {
        std::array<double, 3> out{0, 0, 0};
        if (!o.is_object() || !o.contains(key)) {
            fail(where, std::string("missing key '") + key + "'");
            return out;
        }
        const json& v = o.at(key);
        if (!v.is_array() || v.size() != 3 ||
            !std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); })) {
            fail(where + "." + key, "expected an array of 3 numbers");
            return out;
        }
        for (int i = 0; i < 3; ++i) out[i] = v[i].get<double>();
        return out;
    }
    // [from, to] bus pair used to key feeders and links.
    std::pair<int, int> buspair(const json& v, const std::string& where) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
            fail(where, "expected [from, to] bus ids");
            return {0, 0};
        }
        return {v[0].get<int>(), v[1].get<int>()};
    }

    DgUnit dg(const json& o, const std::string& where) {
        DgUnit d;
        if (!object(o, where)) return d;
        keys(o, {"bus", "p_max_kw", "p_min_kw", "q_max_kvar", "q_min_kvar", "ramp_kw_per_min",
                 "t_syn_min", "t_start_min"},
             where);
        d.bus = integer(o, "bus", where);
        d.p_max_kw = num(o, "p_max_kw", where);
        d.p_min_kw = num(o, "p_min_kw", where);
        d.q_max_kvar = num(o, "q_max_kvar", where);
        d.q_min_kvar = num(o, "q_min_kvar", where, -d.q_max_kvar, false);
        d.ramp_kw_per_min = num(o, "ramp_kw_per_min", where);
        d.t_syn_min = integer(o, "t_syn_min", where);
        d.t_start_min = integer(o, "t_start_min", where, 0, false);
        return d;
    }

    EsUnit es(const json& o, const std::string& where) {
        EsUnit e;
        if (!object(o, where)) return e;
        keys(o, {"bus", "capacity_kwh", "p_ch_max_kw", "p_dis_max_kw", "eta_ch", "eta_dis", "soc_min",
                 "soc_max", "q_capability"},
             where);
        e.bus = integer(o, "bus", where);
        e.capacity_kwh = num(o, "capacity_kwh", where);
        e.p_ch_max_kw = num(o, "p_ch_max_kw", where);
        e.p_dis_max_kw = num(o, "p_dis_max_kw", where);
        e.eta_ch = num(o, "eta_ch", where);
        e.eta_dis = num(o, "eta_dis", where);
        e.soc_min = num(o, "soc_min", where);
        e.soc_max = num(o, "soc_max", where);
        if (o.contains("q_capability") && array(o.at("q_capability"), where + ".q_capability")) {
            int i = 0;
            for (const json& r : o.at("q_capability")) {
                std::string rw = where + ".q_capability[" + std::to_string(i++) + "]";
                if (!object(r, rw)) continue;
                keys(r, {"p_lo", "p_hi", "q_min", "q_max"}, rw);
                EsQRow row;
                row.p_lo = num(r, "p_lo", rw);
                row.p_hi = num(r, "p_hi", rw);
                row.q_min = num(r, "q_min", rw);
                row.q_max = num(r, "q_max", rw);
                e.q_capability.push_back(row);
            }
        }
        return e;
    }
};

}  // namespace scenariodetail

inline Scenario scenario_from_json(const nlohmann::ordered_json& doc,
                                   std::vector<std::string>& errs) {
    using scenariodetail::json;
    Scenario s;
    scenariodetail::Parser p{errs};
    if (!p.object(doc, "document")) return s;
    p.keys(doc, {"version", "name", "network", "state", "comm", "events", "config"}, "document");

    int version = p.integer(doc, "version", "document");
    if (doc.contains("version") && doc.at("version").is_number_integer() &&
        version != kScenarioVersion) {
        p.fail("document", "unsupported version " + std::to_string(version) + " (expected " +
                               std::to_string(kScenarioVersion) + ")");
        return s;
    }
    s.name = p.text(doc, "name", "document");

    // ---- network ----------------------------------------------------------
    if (doc.contains("network") && p.object(doc.at("network"), "network")) {
        const json& net = doc.at("network");
        p.keys(net, {"v_nom_kv", "v_min_kv", "v_max_kv", "buses", "feeders", "dgs", "ess"}, "network");
        s.net.v_nom_kv = p.num(net, "v_nom_kv", "network");
        s.net.v_min_kv = p.num(net, "v_min_kv", "network");
        s.net.v_max_kv = p.num(net, "v_max_kv", "network");
        if (net.contains("buses") && p.array(net.at("buses"), "network.buses")) {
            int i = 0;
            for (const json& o : net.at("buses")) {
                std::string where = "network.buses[" + std::to_string(i++) + "]";
                if (!p.object(o, where)) continue;
                p.keys(o, {"id", "load_kw", "load_kvar", "lambda_min", "priority_class", "has_agent"},
                       where);
                Bus b;
                b.id = p.integer(o, "id", where);
                auto kw = p.triple(o, "load_kw", where);
                auto kvar = p.triple(o, "load_kvar", where);
                for (int c = 0; c < 3; ++c) b.load_par[c] = {kw[c], kvar[c]};
                b.lambda_min = p.num(o, "lambda_min", where, -1.0, false);
                b.priority_class = p.integer(o, "priority_class", where, 3, false);
                b.has_agent = p.boolean(o, "has_agent", where, true);
                s.net.buses.push_back(b);
            }
        } else if (!net.contains("buses")) {
            p.fail("network", "missing key 'buses'");
        }
        if (net.contains("feeders") && p.array(net.at("feeders"), "network.feeders")) {
            int i = 0;
            for (const json& o : net.at("feeders")) {
                std::string where = "network.feeders[" + std::to_string(i++) + "]";
                if (!p.object(o, where)) continue;
                p.keys(o, {"from", "to", "r_ohm", "x_ohm", "i_max_a"}, where);
                Feeder f;
                f.from = p.integer(o, "from", where);
                f.to = p.integer(o, "to", where);
                f.r_ohm = p.num(o, "r_ohm", where);
                f.x_ohm = p.num(o, "x_ohm", where);
                f.i_max_a = p.num(o, "i_max_a", where);
                s.net.feeders.push_back(f);
            }
        } else if (!net.contains("feeders")) {
            p.fail("network", "missing key 'feeders'");
        }
        if (net.contains("dgs") && p.array(net.at("dgs"), "network.dgs")) {
            int i = 0;
            for (const json& o : net.at("dgs"))
                s.net.dgs.push_back(p.dg(o, "network.dgs[" + std::to_string(i++) + "]"));
        }
        if (net.contains("ess") && p.array(net.at("ess"), "network.ess")) {
            int i = 0;
            for (const json& o : net.at("ess"))
                s.net.ess.push_back(p.es(o, "network.ess[" + std::to_string(i++) + "]"));
        }
    } else if (!doc.contains("network")) {
        p.fail("document", "missing key 'network'");
    }

    auto feeder_from_pair = [&](const json& v, const std::string& where) -> std::string {
        auto [a, b] = p.buspair(v, where);
        return feeder_name(a, b);
    };

    // ---- state ------------------------------------------------------------
    if (doc.contains("state") && p.object(doc.at("state"), "state")) {
        const json& st = doc.at("state");
        p.keys(st,
               {"time_min", "unavailable_buses", "unavailable_feeders", "in_use_buses",
                "in_use_feeders", "restored", "injection", "soc", "dg_started"},
               "state");
        s.state.time_min = p.integer(st, "time_min", "state", 0, false);
        if (st.contains("unavailable_buses") && p.array(st.at("unavailable_buses"), "state.unavailable_buses"))
            for (const json& v : st.at("unavailable_buses")) {
                if (!v.is_number_integer()) p.fail("state.unavailable_buses", "expected bus ids");
                else s.state.avail_bus[v.get<int>()] = false;
            }
        if (st.contains("unavailable_feeders") && p.array(st.at("unavailable_feeders"), "state.unavailable_feeders")) {
            int i = 0;
            for (const json& v : st.at("unavailable_feeders"))
                s.state.avail_feeder[feeder_from_pair(
                    v, "state.unavailable_feeders[" + std::to_string(i++) + "]")] = false;
        }
        if (st.contains("in_use_buses") && p.array(st.at("in_use_buses"), "state.in_use_buses"))
            for (const json& v : st.at("in_use_buses")) {
                if (!v.is_number_integer()) p.fail("state.in_use_buses", "expected bus ids");
                else s.state.v[v.get<int>()] = true;
            }
        if (st.contains("in_use_feeders") && p.array(st.at("in_use_feeders"), "state.in_use_feeders")) {
            int i = 0;
            for (const json& v : st.at("in_use_feeders"))
                s.state.w[feeder_from_pair(v, "state.in_use_feeders[" + std::to_string(i++) + "]")] =
                    true;
        }
        if (st.contains("restored") && p.array(st.at("restored"), "state.restored")) {
            int i = 0;
            for (const json& o : st.at("restored")) {
                std::string where = "state.restored[" + std::to_string(i++) + "]";
                if (!p.object(o, where)) continue;
                p.keys(o, {"bus", "pl", "ql"}, where);
                BusLoadState ld;
                auto pl = p.triple(o, "pl", where);
                auto ql = p.triple(o, "ql", where);
                ld.pl1 = pl[0]; ld.pl2 = pl[1]; ld.pl3 = pl[2];
                ld.ql1 = ql[0]; ld.ql2 = ql[1]; ld.ql3 = ql[2];
                s.state.restored[p.integer(o, "bus", where)] = ld;
            }
        }
        if (st.contains("injection") && p.array(st.at("injection"), "state.injection")) {
            int i = 0;
            for (const json& o : st.at("injection")) {
                std::string where = "state.injection[" + std::to_string(i++) + "]";
                if (!p.object(o, where)) continue;
                p.keys(o, {"bus", "p_kw", "q_kvar"}, where);
                int b = p.integer(o, "bus", where);
                s.state.p_g[b] = p.num(o, "p_kw", where, 0.0, false);
                s.state.q_g[b] = p.num(o, "q_kvar", where, 0.0, false);
            }
        }
        if (st.contains("soc") && p.array(st.at("soc"), "state.soc")) {
            int i = 0;
            for (const json& o : st.at("soc")) {
                std::string where = "state.soc[" + std::to_string(i++) + "]";
                if (!p.object(o, where)) continue;
                p.keys(o, {"bus", "value"}, where);
                s.state.soc[p.integer(o, "bus", where)] = p.num(o, "value", where);
            }
        }
        if (st.contains("dg_started") && p.array(st.at("dg_started"), "state.dg_started")) {
            int i = 0;
            for (const json& o : st.at("dg_started")) {
                std::string where = "state.dg_started[" + std::to_string(i++) + "]";
                if (!p.object(o, where)) continue;
                p.keys(o, {"bus", "at_min"}, where);
                s.state.dg_start[p.integer(o, "bus", where)] = p.integer(o, "at_min", where);
            }
        }
    } else if (!doc.contains("state")) {
        p.fail("document", "missing key 'state'");
    }

    // ---- comm -------------------------------------------------------------
    for (const auto& b : s.net.buses)
        if (b.has_agent) s.comm.add_agent(b.id, true);
    if (doc.contains("comm") && p.object(doc.at("comm"), "comm")) {
        const json& cm = doc.at("comm");
        p.keys(cm, {"mirror_feeders", "links", "unavailable_agents"}, "comm");
        if (p.boolean(cm, "mirror_feeders", "comm", false))
            for (const auto& f : s.net.feeders)
                if (f.from != f.to) s.comm.add_link(f.from, f.to);
        if (cm.contains("links") && p.array(cm.at("links"), "comm.links")) {
            int i = 0;
            for (const json& v : cm.at("links")) {
                auto [a, b] = p.buspair(v, "comm.links[" + std::to_string(i++) + "]");
                if (a != b) s.comm.add_link(a, b);
            }
        }
        if (cm.contains("unavailable_agents") && p.array(cm.at("unavailable_agents"), "comm.unavailable_agents"))
            for (const json& v : cm.at("unavailable_agents")) {
                if (!v.is_number_integer()) p.fail("comm.unavailable_agents", "expected agent ids");
                else s.comm.agents[v.get<int>()] = false;
            }
    } else if (!doc.contains("comm")) {
        p.fail("document", "missing key 'comm'");
    }

    // ---- events -----------------------------------------------------------
    if (doc.contains("events") && p.array(doc.at("events"), "events")) {
        int i = 0;
        for (const json& o : doc.at("events")) {
            std::string where = "events[" + std::to_string(i++) + "]";
            if (!p.object(o, where)) continue;
            Event ev;
            ev.time = p.integer(o, "time", where);
            std::string kind = p.text(o, "kind", where);
            try {
                ev.kind = event_kind_from_string(kind);
            } catch (const std::exception&) {
                p.fail(where, "unknown event kind '" + kind + "'");
                continue;
            }
            switch (ev.kind) {
                case EventKind::dg_discovered:
                    p.keys(o, {"time", "kind", "dg", "start_known"}, where);
                    if (o.contains("dg")) ev.dg = p.dg(o.at("dg"), where + ".dg");
                    else p.fail(where, "missing key 'dg'");
                    ev.dg_start_known = p.boolean(o, "start_known", where, true);
                    break;
                case EventKind::es_discovered:
                    p.keys(o, {"time", "kind", "es", "soc"}, where);
                    if (o.contains("es")) ev.es = p.es(o.at("es"), where + ".es");
                    else p.fail(where, "missing key 'es'");
                    ev.es_soc = p.num(o, "soc", where, 0.5, false);
                    break;
                case EventKind::agent_restored:
                    p.keys(o, {"time", "kind", "agent"}, where);
                    ev.bus = p.integer(o, "agent", where);
                    break;
                case EventKind::feeder_repaired:
                    p.keys(o, {"time", "kind", "feeder"}, where);
                    if (o.contains("feeder")) ev.feeder = feeder_from_pair(o.at("feeder"), where + ".feeder");
                    else p.fail(where, "missing key 'feeder'");
                    break;
                case EventKind::bus_repaired:
                    p.keys(o, {"time", "kind", "bus"}, where);
                    ev.bus = p.integer(o, "bus", where);
                    break;
                case EventKind::link_restored: {
                    p.keys(o, {"time", "kind", "link"}, where);
                    if (o.contains("link")) {
                        auto [a, b] = p.buspair(o.at("link"), where + ".link");
                        ev.link_a = a;
                        ev.link_b = b;
                    } else {
                        p.fail(where, "missing key 'link'");
                    }
                    break;
                }
                case EventKind::load_scaled:
                    p.keys(o, {"time", "kind", "bus", "factor"}, where);
                    ev.bus = p.integer(o, "bus", where);
                    ev.factor = p.num(o, "factor", where);
                    break;
            }
            s.events.push_back(std::move(ev));
        }
    } else if (!doc.contains("events")) {
        p.fail("document", "missing key 'events'");
    }

    // ---- config -----------------------------------------------------------
    if (doc.contains("config") && p.object(doc.at("config"), "config")) {
        const json& cfg = doc.at("config");
        p.keys(cfg,
               {"weights", "lambda_min_default", "pwl_segments", "es_q_mode", "strict_flow_bounds",
                "idp", "time"},
               "config");
        if (cfg.contains("weights")) {
            auto w = p.triple(cfg, "weights", "config");
            s.milp.w_l1 = w[0];
            s.milp.w_l2 = w[1];
            s.milp.w_l3 = w[2];
        }
        s.milp.lambda_min_default = p.num(cfg, "lambda_min_default", "config", s.milp.lambda_min_default, false);
        s.milp.pwl_segments = p.integer(cfg, "pwl_segments", "config", s.milp.pwl_segments, false);
        if (cfg.contains("es_q_mode")) {
            std::string mode = p.text(cfg, "es_q_mode", "config");
            if (mode == "table_binary") s.milp.es_q_mode = EsQMode::table_binary;
            else if (mode == "conservative_fixed") s.milp.es_q_mode = EsQMode::conservative_fixed;
            else p.fail("config.es_q_mode", "expected 'table_binary' or 'conservative_fixed'");
        }
        s.milp.strict_flow_bounds = p.boolean(cfg, "strict_flow_bounds", "config", s.milp.strict_flow_bounds);
        if (cfg.contains("idp") && p.object(cfg.at("idp"), "config.idp")) {
            const json& idp = cfg.at("idp");
            p.keys(idp, {"tol", "k_max", "iteration_latency_ms"}, "config.idp");
            s.idp.tol = p.num(idp, "tol", "config.idp", s.idp.tol, false);
            s.idp.k_max = p.integer(idp, "k_max", "config.idp", s.idp.k_max, false);
            s.idp.iteration_latency_ms =
                p.num(idp, "iteration_latency_ms", "config.idp", s.idp.iteration_latency_ms, false);
        }
        if (cfg.contains("time") && p.object(cfg.at("time"), "config.time")) {
            const json& t = cfg.at("time");
            p.keys(t, {"t0_min", "horizon_min", "step_min", "control_min", "end_min"}, "config.time");
            s.grid.t_c = p.integer(t, "t0_min", "config.time", 0, false);
            s.grid.horizon_min = p.integer(t, "horizon_min", "config.time");
            s.grid.step_min = p.integer(t, "step_min", "config.time");
            s.grid.control_min = p.integer(t, "control_min", "config.time");
            s.end_min = p.integer(t, "end_min", "config.time");
        } else if (!cfg.contains("time")) {
            p.fail("config", "missing key 'time'");
        }
    } else if (!doc.contains("config")) {
        p.fail("document", "missing key 'config'");
    }

    if (errs.empty())
        for (const auto& e : scenario_errors(s)) errs.push_back(e);
    return s;
}

inline Scenario scenario_from_string(const std::string& text, std::vector<std::string>& errs) {
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(text);
    } catch (const std::exception& e) {
        errs.push_back(std::string("json: ") + e.what());
        return {};
    }
    return scenario_from_json(doc, errs);
}

// ---------------------------------------------------------------------------
// Built-in reference scenarios.

namespace scenariodetail {

inline Bus mk_bus(BusId id, double p1, double q1, double p2, double q2, double p3, double q3) {
    Bus b;
    b.id = id;
    b.load_par[0] = {p1, q1};
    b.load_par[1] = {p2, q2};
    b.load_par[2] = {p3, q3};
    return b;
}

inline void add_feeder(Network& net, BusId a, BusId b, double r, double x, double imax) {
    Feeder f;
    f.from = a;
    f.to = b;
    f.r_ohm = r;
    f.x_ohm = x;
    f.i_max_a = imax;
    net.feeders.push_back(f);
}

inline DgUnit mk_dg(BusId bus, double pmax, double pmin, double qmax, double ramp, int t_syn,
                    int t_start) {
    DgUnit d;
    d.bus = bus;
    d.p_max_kw = pmax;
    d.p_min_kw = pmin;
    d.q_max_kvar = qmax;
    d.q_min_kvar = -qmax;
    d.ramp_kw_per_min = ramp;
    d.t_syn_min = t_syn;
    d.t_start_min = t_start;
    return d;
}

// Inverter reactive-capability bands as a fraction of rated power: wide range
// near zero loading, shrinking toward full output.
inline std::vector<EsQRow> inverter_bands() {
    return {{0.0, 0.2, -1.1, 0.6},
            {0.2, 0.4, -1.0, 0.6},
            {0.4, 0.6, -0.9, 0.6},
            {0.6, 0.8, -0.75, 0.6},
            {0.8, 1.0, -0.5, 0.5}};
}

inline void mirror_comm(Scenario& s) {
    for (const auto& b : s.net.buses)
        if (b.has_agent) s.comm.add_agent(b.id, true);
    for (const auto& f : s.net.feeders) s.comm.add_link(f.from, f.to);
}

inline void seed_dg_starts(Scenario& s) {
    for (const auto& d : s.net.dgs) s.state.dg_start[d.bus] = d.t_start_min;
    for (const auto& e : s.net.ess)
        if (!s.state.soc.count(e.bus)) s.state.soc[e.bus] = 0.5;
}

inline Scenario builtin_pair2() {
    Scenario s;
    s.name = "pair2";
    s.net.v_nom_kv = 10.0;
    s.net.v_min_kv = 9.5;
    s.net.v_max_kv = 10.5;
    s.net.buses.push_back(mk_bus(1, 0, 0, 0, 0, 0, 0));
    s.net.buses.push_back(mk_bus(2, 200, 100, 100, 50, 100, 0));
    add_feeder(s.net, 1, 2, 0.05, 0.3, 200);
    s.net.dgs.push_back(mk_dg(1, 500, 50, 300, 50, 10, -20));
    mirror_comm(s);
    seed_dg_starts(s);
    s.milp.pwl_segments = 1;
    s.grid.t_c = 0;
    s.grid.horizon_min = 30;
    s.grid.step_min = 10;
    s.grid.control_min = 10;
    s.end_min = 30;
    return s;
}

inline Scenario builtin_tri3() {
    Scenario s;
    s.name = "tri3";
    s.net.v_nom_kv = 2.4;
    s.net.v_min_kv = 2.3;
    s.net.v_max_kv = 2.5;
    s.net.buses.push_back(mk_bus(1, 0, 0, 0, 0, 0, 0));
    s.net.buses.push_back(mk_bus(2, 100, 40, 0, 0, 0, 0));
    s.net.buses.push_back(mk_bus(3, 100, 40, 0, 0, 0, 0));
    add_feeder(s.net, 1, 2, 0.02, 0.2, 150);
    add_feeder(s.net, 1, 3, 0.02, 0.2, 150);
    add_feeder(s.net, 2, 3, 0.02, 0.2, 150);
    s.net.dgs.push_back(mk_dg(1, 400, 20, 200, 400, 0, -60));
    mirror_comm(s);
    seed_dg_starts(s);
    s.milp.pwl_segments = 1;
    s.grid.t_c = 0;
    s.grid.horizon_min = 10;
    s.grid.step_min = 5;
    s.grid.control_min = 5;
    s.end_min = 10;
    return s;
}

// Seven communication agents on a line of buses; the link between agents 4
// and 5 is missing and agent 7 is down, so discovery yields the parts
// {1,2,3,4} and {5,6}. A pure discovery fixture: no generation resources.
inline Scenario builtin_fig3_mas() {
    Scenario s;
    s.name = "fig3_mas";
    s.net.v_nom_kv = 10.0;
    s.net.v_min_kv = 9.5;
    s.net.v_max_kv = 10.5;
    for (BusId b = 1; b <= 7; ++b)
        s.net.buses.push_back(b == 1 ? mk_bus(b, 0, 0, 0, 0, 0, 0) : mk_bus(b, 0, 0, 0, 0, 10, 5));
    for (BusId b = 1; b <= 6; ++b) add_feeder(s.net, b, b + 1, 0.1, 0.2, 100);
    for (BusId b = 1; b <= 7; ++b) s.comm.add_agent(b, b != 7);
    for (auto [a, b] : {std::pair<int, int>{1, 2}, {2, 3}, {3, 4}, {5, 6}}) s.comm.add_link(a, b);
    s.milp.pwl_segments = 1;
    s.grid.t_c = 0;
    s.grid.horizon_min = 10;
    s.grid.step_min = 5;
    s.grid.control_min = 5;
    s.end_min = 10;
    return s;
}

// A 13-bus chain with one generator and one storage unit: the size of one
// discovered part in the larger case below, handy for exercising a single
// scheduling problem end to end.
inline Scenario builtin_path13() {
    Scenario s;
    s.name = "path13";
    s.net.v_nom_kv = 4.16;
    s.net.v_min_kv = 3.952;
    s.net.v_max_kv = 4.368;
    s.net.buses.push_back(mk_bus(1, 0, 0, 0, 0, 0, 0));
    for (BusId b = 2; b <= 13; ++b) s.net.buses.push_back(mk_bus(b, 20, 8, 15, 6, 10, 4));
    for (BusId b = 1; b <= 12; ++b) add_feeder(s.net, b, b + 1, 0.06, 0.12, 250);
    s.net.dgs.push_back(mk_dg(1, 500, 30, 250, 25, 5, 0));
    EsUnit e;
    e.bus = 7;
    e.capacity_kwh = 150;
    e.p_ch_max_kw = 40;
    e.p_dis_max_kw = 40;
    e.eta_ch = 0.9;
    e.eta_dis = 1.1;
    e.soc_min = 0.15;
    e.soc_max = 0.9;
    e.q_capability = inverter_bands();
    s.net.ess.push_back(e);
    mirror_comm(s);
    seed_dg_starts(s);
    s.state.soc[7] = 0.6;
    s.milp.pwl_segments = 1;
    s.grid.t_c = 0;
    s.grid.horizon_min = 60;
    s.grid.step_min = 15;
    s.grid.control_min = 15;
    s.end_min = 60;
    return s;
}

// A 123-bus radial feeder in blackout. The communication graph mirrors the
// feeder graph; most agents are down after the event, leaving three
// communication-connected parts of 13, 10, and 6 agents around the surviving
// resources. Crews bring one more generator online at minute 30 and three
// more at minute 60.
//
// The bus numbering and resource placements/parameters follow the published
// case study; the tree layout, per-bus load values, and the exact agent
// availability pattern are synthesized (deterministically, below) because the
// original per-bus feeder data is not bundled. Loads are sized so the full
// resource fleet can restore roughly half of the affected load by minute 90.
inline Scenario builtin_ieee123_mod() {
    Scenario s;
    s.name = "ieee123_mod";
    s.net.v_nom_kv = 4.16;
    s.net.v_min_kv = 3.952;
    s.net.v_max_kv = 4.368;

    const std::set<BusId> members_a = {55, 56, 57, 58, 59, 60, 61, 62, 76, 77, 78, 88, 89};
    const std::set<BusId> members_b = {7, 8, 9, 20, 21, 22, 23, 42, 43, 44};
    const std::set<BusId> members_c = {102, 103, 104, 105, 106, 107};
    auto member = [&](BusId b) {
        return members_a.count(b) || members_b.count(b) || members_c.count(b);
    };

    for (BusId b = 1; b <= 123; ++b) {
        // Buses inside the surviving parts carry the load profile that the
        // restoration works through; the rest of the feeder gets a lighter
        // profile and stays out of reach until its agents are repaired.
        Bus bus = member(b) ? mk_bus(b, 40, 20, 25, 12, 20, 10) : mk_bus(b, 20, 10, 10, 5, 10, 5);
        bus.priority_class = member(b) ? 1 : 3;
        s.net.buses.push_back(bus);
    }
    // Radial layout: a long trunk with four branch points chosen so each
    // surviving part is a connected stretch of the tree.
    std::map<BusId, BusId> parent_override = {{20, 9}, {42, 23}, {76, 62}, {88, 78}};
    for (BusId b = 2; b <= 123; ++b) {
        BusId parent = parent_override.count(b) ? parent_override[b] : b - 1;
        add_feeder(s.net, parent, b, 0.08, 0.16, 400);
    }

    s.net.dgs.push_back(mk_dg(8, 200, 33.3, 150, 11.1, 10, -10));
    s.net.dgs.push_back(mk_dg(57, 300, 66.7, 200, 16.7, 15, 0));
    s.net.dgs.push_back(mk_dg(105, 200, 33.3, 150, 11.1, 10, 0));
    EsUnit e;
    e.bus = 61;
    e.capacity_kwh = 200;
    e.p_ch_max_kw = 50;
    e.p_dis_max_kw = 50;
    e.eta_ch = 0.85;
    e.eta_dis = 1.15;
    e.soc_min = 0.05;
    e.soc_max = 0.95;
    e.q_capability = inverter_bands();
    s.net.ess.push_back(e);

    mirror_comm(s);
    for (const auto& b : s.net.buses)
        if (!member(b.id)) s.comm.agents[b.id] = false;
    seed_dg_starts(s);
    s.state.soc[61] = 0.8;

    Event ev;
    ev.time = 30;
    ev.kind = EventKind::dg_discovered;
    ev.dg = mk_dg(44, 150, 16.7, 100, 8.3, 10, 15);
    s.events.push_back(ev);
    ev.time = 60;
    ev.dg = mk_dg(23, 100, 5.6, 60, 5.6, 5, 40);
    s.events.push_back(ev);
    ev.dg = mk_dg(78, 120, 13.3, 100, 6.7, 10, 50);
    s.events.push_back(ev);
    ev.dg = mk_dg(89, 120, 13.3, 100, 6.7, 10, 20);
    s.events.push_back(ev);

    s.milp.pwl_segments = 1;  // coarse but bounded square linearization keeps the parts tractable
    s.grid.t_c = 0;
    s.grid.horizon_min = 120;
    s.grid.step_min = 5;
    s.grid.control_min = 30;
    s.end_min = 120;
    return s;
}

}  // namespace scenariodetail

inline std::vector<std::string> builtin_scenario_names() {
    return {"fig3_mas", "ieee123_mod", "pair2", "path13", "tri3"};
}

inline std::optional<Scenario> builtin_scenario(const std::string& name) {
    if (name == "pair2") return scenariodetail::builtin_pair2();
    if (name == "tri3") return scenariodetail::builtin_tri3();
    if (name == "fig3_mas") return scenariodetail::builtin_fig3_mas();
    if (name == "path13") return scenariodetail::builtin_path13();
    if (name == "ieee123_mod") return scenariodetail::builtin_ieee123_mod();
    return std::nullopt;
}

// Loads a scenario from a built-in name or a file path. Throws ScenarioError
// with the full list of schema/integrity problems on any fault.
inline Scenario load_scenario(const std::string& name_or_path) {
    if (auto b = builtin_scenario(name_or_path)) {
        if (auto errs = scenario_errors(*b); !errs.empty()) throw ScenarioError(std::move(errs));
        return *b;
    }
    std::ifstream in(name_or_path, std::ios::binary);
    if (!in)
        throw ScenarioError({"cannot open '" + name_or_path +
                             "' (not a file, and not one of the built-in scenarios)"});
    std::ostringstream buf;
    buf << in.rdbuf();
    std::vector<std::string> errs;
    Scenario s = scenario_from_string(buf.str(), errs);
    if (!errs.empty()) {
        for (auto& e : errs) e = name_or_path + ": " + e;
        throw ScenarioError(std::move(errs));
    }
    return s;
}

// Run options implied by a scenario's config block.
inline RunOptions run_options_for(const Scenario& s) {
    RunOptions opt;
    opt.grid = s.grid;
    opt.end_min = s.end_min;
    opt.idp = s.idp;
    opt.milp = s.milp;
    return opt;
}

}  // namespace gridrestore
