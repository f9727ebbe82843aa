#pragma once

// Rolling re-scheduling engine. The universal clock marches in re-scheduling
// periods; at every scheduling moment the engine applies field events that
// have come due, freezes the communication graph, runs the discovery
// protocol, and lets the lowest-id resource-bus agent of each
// communication-connected part build and solve a fresh restoration schedule
// seeded by the observed operating point. The fresh plans are then executed
// step by step until the next moment. Aggregate rows are always recomputed
// from the realized network state, never copied out of the plans.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gridrestore/consensus.hpp"
#include "gridrestore/grid.hpp"
#include "gridrestore/model_builder.hpp"
#include "gridrestore/solver.hpp"
#include "gridrestore/verify.hpp"

namespace gridrestore {

// ---------------------------------------------------------------------------
// Field events.

enum class EventKind {
    dg_discovered,   // a generator (with its start instant) joins the network
    es_discovered,   // a storage unit (with its measured charge) joins
    agent_restored,  // a communication agent comes back online
    feeder_repaired, // a damaged feeder becomes available again
    bus_repaired,    // a damaged bus becomes available again
    link_restored,   // a communication link (re)appears; felt at the next discovery
    load_scaled,     // connected load parameters at a bus are multiplied by a factor
};

inline std::string to_string(EventKind k) {
    switch (k) {
        case EventKind::dg_discovered: return "dg_discovered";
        case EventKind::es_discovered: return "es_discovered";
        case EventKind::agent_restored: return "agent_restored";
        case EventKind::feeder_repaired: return "feeder_repaired";
        case EventKind::bus_repaired: return "bus_repaired";
        case EventKind::link_restored: return "link_restored";
        case EventKind::load_scaled: return "load_scaled";
    }
    return "?";
}

inline EventKind event_kind_from_string(const std::string& s) {
    for (EventKind k : {EventKind::dg_discovered, EventKind::es_discovered, EventKind::agent_restored,
                        EventKind::feeder_repaired, EventKind::bus_repaired, EventKind::link_restored,
                        EventKind::load_scaled})
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown event kind '" + s + "'");
}

struct Event {
    int time = 0;  // absolute minute; takes effect at the first scheduling moment >= time
    EventKind kind = EventKind::dg_discovered;

    DgUnit dg;                  // dg_discovered
    bool dg_start_known = true; // false -> start instant unknown until the unit self-starts
    EsUnit es;                  // es_discovered
    double es_soc = 0.5;        // es_discovered: measured state of charge
    int bus = 0;                // agent_restored / bus_repaired / load_scaled
    std::string feeder;         // feeder_repaired
    int link_a = 0, link_b = 0; // link_restored
    double factor = 1.0;        // load_scaled
};

// ---------------------------------------------------------------------------
// Simulation state.

// One plan currently driving a set of buses/feeders. Keeps the observation it
// was built from so the plan can be re-verified later.
struct ActiveSchedule {
    std::vector<BusId> buses;
    std::vector<std::string> feeders;
    Schedule schedule;
    ObservedCcp observed;
};

struct SimState {
    int clock = 0;
    Network net;          // grows as resources are discovered
    NetworkState state;
    CommGraph comm;
    std::vector<Event> pending;          // sorted by time, stable
    std::vector<ActiveSchedule> active;  // plans currently in force
};

// ---------------------------------------------------------------------------
// Event application.

inline void apply_event(SimState& s, const Event& ev, std::vector<std::string>& warnings) {
    auto warn = [&](const std::string& msg) {
        warnings.push_back("t=" + std::to_string(s.clock) + " " + to_string(ev.kind) + ": " + msg);
    };
    switch (ev.kind) {
        case EventKind::dg_discovered: {
            if (!s.net.find_bus(ev.dg.bus))
                throw std::invalid_argument("dg_discovered: unknown bus " + std::to_string(ev.dg.bus));
            if (s.net.is_resource_bus(ev.dg.bus))
                throw std::invalid_argument("dg_discovered: bus " + std::to_string(ev.dg.bus) +
                                            " already hosts a resource");
            s.net.dgs.push_back(ev.dg);
            if (auto faults = validate_network(s.net); !faults.empty())
                throw std::invalid_argument("dg_discovered: " + faults.front());
            if (ev.dg_start_known) s.state.dg_start[ev.dg.bus] = ev.dg.t_start_min;
            break;
        }
        case EventKind::es_discovered: {
            if (!s.net.find_bus(ev.es.bus))
                throw std::invalid_argument("es_discovered: unknown bus " + std::to_string(ev.es.bus));
            if (s.net.is_resource_bus(ev.es.bus))
                throw std::invalid_argument("es_discovered: bus " + std::to_string(ev.es.bus) +
                                            " already hosts a resource");
            s.net.ess.push_back(ev.es);
            if (auto faults = validate_network(s.net); !faults.empty())
                throw std::invalid_argument("es_discovered: " + faults.front());
            s.state.soc[ev.es.bus] = ev.es_soc;
            break;
        }
        case EventKind::agent_restored: {
            auto it = s.comm.agents.find(ev.bus);
            if (it == s.comm.agents.end())
                throw std::invalid_argument("agent_restored: unknown agent " + std::to_string(ev.bus));
            if (it->second)
                warn("agent " + std::to_string(ev.bus) + " is already available");
            it->second = true;
            break;
        }
        case EventKind::feeder_repaired: {
            if (!s.net.find_feeder(ev.feeder))
                throw std::invalid_argument("feeder_repaired: unknown feeder " + ev.feeder);
            if (s.state.feeder_available(ev.feeder))
                warn("feeder " + ev.feeder + " is already available");
            s.state.avail_feeder[ev.feeder] = true;
            break;
        }
        case EventKind::bus_repaired: {
            if (!s.net.find_bus(ev.bus))
                throw std::invalid_argument("bus_repaired: unknown bus " + std::to_string(ev.bus));
            if (s.state.bus_available(ev.bus))
                warn("bus " + std::to_string(ev.bus) + " is already available");
            s.state.avail_bus[ev.bus] = true;
            break;
        }
        case EventKind::link_restored: {
            if (!s.comm.agents.count(ev.link_a) || !s.comm.agents.count(ev.link_b))
                throw std::invalid_argument("link_restored: unknown agent endpoint");
            auto key = std::make_pair(std::min(ev.link_a, ev.link_b), std::max(ev.link_a, ev.link_b));
            if (s.comm.links.count(key))
                warn("link " + std::to_string(key.first) + "-" + std::to_string(key.second) +
                     " already exists");
            s.comm.add_link(ev.link_a, ev.link_b);
            break;
        }
        case EventKind::load_scaled: {
            if (ev.factor < 0)
                throw std::invalid_argument("load_scaled: factor must be non-negative");
            bool found = false;
            for (auto& b : s.net.buses) {
                if (b.id != ev.bus) continue;
                found = true;
                for (auto& cl : b.load_par) {
                    cl.p_kw *= ev.factor;
                    cl.q_kvar *= ev.factor;
                }
                // keep the realized pickup inside the (possibly shrunk) parameters
                auto it = s.state.restored.find(b.id);
                if (it != s.state.restored.end()) {
                    auto clamp = [&](double& x, double par) {
                        if (x > par) {
                            warn("restored load at bus " + std::to_string(b.id) +
                                 " clamped to the rescaled parameter");
                            x = par;
                        }
                    };
                    clamp(it->second.pl1, b.load_par[0].p_kw);
                    clamp(it->second.pl2, b.load_par[1].p_kw);
                    clamp(it->second.pl3, b.load_par[2].p_kw);
                    clamp(it->second.ql1, b.load_par[0].q_kvar);
                    clamp(it->second.ql2, b.load_par[1].q_kvar);
                    clamp(it->second.ql3, b.load_par[2].q_kvar);
                }
            }
            if (!found) throw std::invalid_argument("load_scaled: unknown bus " + std::to_string(ev.bus));
            break;
        }
    }
}

// Applies, in order, all pending events whose timestamp has been reached.
// Returns how many were applied.
inline int apply_due_events(SimState& s, std::vector<std::string>& warnings) {
    int applied = 0;
    auto it = s.pending.begin();
    while (it != s.pending.end() && it->time <= s.clock) {
        apply_event(s, *it, warnings);
        it = s.pending.erase(it);
        ++applied;
    }
    return applied;
}

// A generator whose agent is alive but cut off from everyone can start its
// synchronization countdown on its own. Returns the buses started.
inline std::vector<BusId> isolated_dg_autostart(SimState& s) {
    std::vector<BusId> started;
    for (const auto& d : s.net.dgs) {
        if (s.state.dg_start.count(d.bus)) continue;
        if (!s.state.bus_available(d.bus)) continue;
        if (!s.comm.agent_available(d.bus)) continue;
        if (!s.comm.neighbors(d.bus).empty()) continue;
        s.state.dg_start[d.bus] = s.clock;
        started.push_back(d.bus);
    }
    return started;
}

// ---------------------------------------------------------------------------
// Timeline records.

struct AggregateRow {
    int t = 0;
    double sum_pg = 0, sum_pl1 = 0, sum_pl2 = 0, sum_pl3 = 0;
};

inline AggregateRow aggregate_state(const Network& net, const NetworkState& st, int t) {
    AggregateRow r;
    r.t = t;
    for (const auto& b : net.buses) {
        r.sum_pg += st.p_g_at(b.id);
        BusLoadState ld = st.load_at(b.id);
        r.sum_pl1 += ld.pl1;
        r.sum_pl2 += ld.pl2;
        r.sum_pl3 += ld.pl3;
    }
    return r;
}

struct ConsensusCostRow {
    int t_c = 0;
    int iterations = 0;
    double elapsed_ms = 0.0;
    bool converged = true;
};

struct CcpRecord {
    int index = 0;               // position within the moment, ordered by smallest member
    std::vector<int> members;    // every agent in the part, including those on damaged buses
    int scheduler = -1;          // agent that built the plan; -1 when the part idled
    bool scheduled = false;      // a fresh plan was produced this moment
    bool idle = false;           // no resource-bus agent: the part held its state
    bool extended = false;       // solve failed: the previous plan was carried forward
    ObservedCcp observed;
    Schedule schedule;           // meaningful when scheduled
    int verify_violations = 0;   // violations found when re-checking the fresh plan
    std::string note;
};

struct MomentRecord {
    int t_c = 0;
    ConsensusCostRow cost;
    std::vector<TraceRow> trace;  // per-round size estimates (when recorded)
    std::vector<CcpRecord> ccps;
};

struct Timeline {
    std::vector<MomentRecord> moments;
    std::vector<AggregateRow> rows;             // one per scheduling moment, plus the final instant
    std::vector<AggregateRow> steps;            // realized aggregates at every step
    std::vector<NetworkState> realized_states;  // realized snapshot at every step
    std::vector<std::string> warnings;
    Network final_net;
    NetworkState final_state;
};

// ---------------------------------------------------------------------------
// Plan execution.

// Appends copies of the last point so the plan covers n_total points. Storage
// activity in the copies is recomputed so stored energy stays inside its band;
// a unit that cannot keep its last-point activity going is shut to idle.
inline void extend_schedule(Schedule& sch, const Network& net, int n_total,
                            std::vector<std::string>& warnings) {
    if (sch.points.empty()) throw std::invalid_argument("extend_schedule: empty plan");
    while (static_cast<int>(sch.points.size()) <= n_total) {
        SchedulePoint p = sch.points.back();
        for (auto& [b, soc] : p.soc) {
            const EsUnit* e = net.es_at(b);
            if (!e) continue;
            double next = soc_after(*e, soc, p.p_es_ch[b], p.p_es_dis[b], sch.step_min);
            if (next < e->soc_min - 1e-9 || next > e->soc_max + 1e-9) {
                warnings.push_back("extended plan idles storage at bus " + std::to_string(b) +
                                   " to keep its charge in band");
                p.p_es_ch[b] = 0;
                p.p_es_dis[b] = 0;
                p.q_es[b] = 0;
                p.es_ch[b] = 0;
                p.es_dis[b] = 0;
                p.p_g[b] = 0;
                p.q_g[b] = 0;
                next = soc;
            }
            soc = next;
        }
        sch.points.push_back(std::move(p));
    }
}

// Writes the plan's points for every step instant in (from_min, to_min] into
// the realized state. The window must lie within the plan's coverage.
inline void apply_schedule(NetworkState& st, const Network& net, const ActiveSchedule& act,
                           int from_min, int to_min, std::vector<std::string>& warnings) {
    const Schedule& sch = act.schedule;
    const int step = sch.step_min;
    if (step <= 0) throw std::invalid_argument("apply_schedule: non-positive step");
    if ((from_min - sch.t_c) % step != 0 || (to_min - from_min) % step != 0)
        throw std::invalid_argument("apply_schedule: window is not aligned to the plan's steps");
    int n_from = (from_min - sch.t_c) / step;
    int n_to = (to_min - sch.t_c) / step;
    if (n_from < 0 || n_to >= static_cast<int>(sch.points.size()))
        throw std::invalid_argument("apply_schedule: window [" + std::to_string(from_min) + ", " +
                                    std::to_string(to_min) + "] is outside the plan's coverage");

    // Continuity: the point at the window start must agree with what has
    // actually happened; a mismatch means the plan was seeded from a stale
    // observation.
    const SchedulePoint& p0 = sch.points[n_from];
    for (BusId b : act.buses) {
        auto it = p0.v.find(b);
        if (it != p0.v.end() && (it->second != 0) != st.bus_in_use(b))
            warnings.push_back("plan for bus " + std::to_string(b) +
                               " disagrees with the realized state at its start");
    }

    for (int n = n_from + 1; n <= n_to; ++n) {
        const SchedulePoint& p = sch.points[n];
        for (BusId b : act.buses) {
            st.v[b] = p.v.at(b) != 0;
            BusLoadState ld;
            ld.pl1 = p.pl1.at(b);
            ld.pl2 = p.pl2.at(b);
            ld.pl3 = p.pl3.at(b);
            ld.ql1 = p.ql1.at(b);
            ld.ql2 = p.ql2.at(b);
            ld.ql3 = p.ql3.at(b);
            st.restored[b] = ld;
            st.p_g[b] = p.p_g.at(b);
            st.q_g[b] = p.q_g.at(b);
            auto sit = p.soc.find(b);
            if (sit != p.soc.end()) {
                // replay the energy bookkeeping as a cross-check on the plan
                const EsUnit* e = net.es_at(b);
                const SchedulePoint& prev = sch.points[n - 1];
                if (e) {
                    double replay = soc_after(*e, prev.soc.at(b), p.p_es_ch.at(b), p.p_es_dis.at(b),
                                              step);
                    if (std::abs(replay - sit->second) > 1e-6)
                        warnings.push_back("plan charge trajectory at bus " + std::to_string(b) +
                                           " drifts from the energy bookkeeping at minute " +
                                           std::to_string(sch.t_c + n * step));
                }
                st.soc[b] = sit->second;
            }
        }
        for (const std::string& f : act.feeders) st.w[f] = p.w.at(f) != 0;
    }
    st.time_min = std::max(st.time_min, to_min);
}

// ---------------------------------------------------------------------------
// The rolling loop.

struct RunOptions {
    TimeGrid grid;        // t_c = first scheduling moment
    int end_min = 0;      // simulate until this instant (> grid.t_c)
    IdpConfig idp;
    MilpConfig milp;
    SolverLimits limits;
    SolverChoice solver;
    bool verify_each = true;   // re-check every fresh plan
    bool record_trace = true;  // keep per-round discovery traces
};

namespace rollingdetail {

// Groups the discovery views into parts ordered by smallest member, together
// with a representative view per part.
inline std::vector<std::pair<std::vector<int>, const CcpView*>> group_ccps(const IdpResult& idp) {
    std::map<std::vector<int>, const CcpView*> parts;
    for (const auto& [id, view] : idp.views) {
        auto it = parts.find(view.members);
        if (it == parts.end()) parts[view.members] = &view;
    }
    std::vector<std::pair<std::vector<int>, const CcpView*>> out(parts.begin(), parts.end());
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first.front() < b.first.front(); });
    return out;
}

inline int pick_scheduler(const ObservedCcp& obs) {
    int best = -1;
    for (const auto& [b, ts] : obs.dg_start)
        if (best < 0 || b < best) best = b;
    for (BusId b : obs.es_buses)
        if (best < 0 || b < best) best = b;
    return best;
}

}  // namespace rollingdetail

inline Timeline run_simulation(const Network& net0, const NetworkState& st0, const CommGraph& comm0,
                               std::vector<Event> events, const RunOptions& opt) {
    opt.grid.validate();
    const int start = opt.grid.t_c;
    const int step = opt.grid.step_min;
    const int control = opt.grid.control_min;
    if (opt.end_min <= start)
        throw std::invalid_argument("run_simulation: end_min must lie beyond the first moment");
    if ((opt.end_min - start) % step != 0)
        throw std::invalid_argument("run_simulation: end_min must be a whole number of steps away");
    {
        auto faults = validate_network(net0);
        if (!faults.empty())
            throw std::invalid_argument("run_simulation: invalid network: " + faults.front());
    }
    for (const auto& [id, avail] : comm0.agents)
        if (!net0.find_bus(id))
            throw std::invalid_argument("run_simulation: agent " + std::to_string(id) +
                                        " has no bus in the network");

    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.time < b.time; });

    SimState s;
    s.clock = start;
    s.net = net0;
    s.state = st0;
    s.state.time_min = start;
    s.comm = comm0;
    s.pending = std::move(events);

    Timeline tl;
    tl.steps.push_back(aggregate_state(s.net, s.state, start));
    tl.realized_states.push_back(s.state);

    for (int t_c = start; t_c < opt.end_min; t_c += control) {
        s.clock = t_c;
        tl.rows.push_back(aggregate_state(s.net, s.state, t_c));

        apply_due_events(s, tl.warnings);
        for (BusId b : isolated_dg_autostart(s))
            tl.warnings.push_back("t=" + std::to_string(t_c) + " isolated generator at bus " +
                                  std::to_string(b) + " started its synchronization countdown");

        // Freeze the communication graph and run the discovery protocol.
        std::map<int, std::map<std::string, double>> local;
        for (int id : s.comm.available_agents()) {
            if (!s.net.find_bus(id)) continue;
            local[id] = publish_local_state(s.net, s.state, id);
        }
        IdpResult idp = run_idp(s.comm, local, opt.idp);

        MomentRecord mom;
        mom.t_c = t_c;
        mom.cost = {t_c, idp.rounds, idp.elapsed_ms, idp.converged};
        if (!idp.converged && !idp.views.empty())
            tl.warnings.push_back("t=" + std::to_string(t_c) +
                                  " discovery did not converge within the round cap");
        if (opt.record_trace) mom.trace = convergence_trace(idp);

        TimeGrid grid_now = opt.grid;
        grid_now.t_c = t_c;

        std::vector<ActiveSchedule> next_active;
        int index = 0;
        for (const auto& [members, view] : rollingdetail::group_ccps(idp)) {
            CcpRecord rec;
            rec.index = index++;
            rec.members = members;
            rec.observed = observed_from_view(*view, s.net);
            rec.scheduler = rollingdetail::pick_scheduler(rec.observed);

            auto carry_previous = [&](const std::string& why) {
                // Keep following the plan the part already had, restricted to
                // the buses still in it.
                std::set<BusId> here(rec.observed.buses.begin(), rec.observed.buses.end());
                std::set<std::string> feeders_here(rec.observed.feeders.begin(),
                                                   rec.observed.feeders.end());
                for (const auto& prev : s.active) {
                    bool overlaps = std::any_of(prev.buses.begin(), prev.buses.end(),
                                                [&](BusId b) { return here.count(b) != 0; });
                    if (!overlaps) continue;
                    ActiveSchedule cont = prev;
                    cont.buses.erase(std::remove_if(cont.buses.begin(), cont.buses.end(),
                                                    [&](BusId b) { return !here.count(b); }),
                                     cont.buses.end());
                    cont.feeders.erase(std::remove_if(cont.feeders.begin(), cont.feeders.end(),
                                                      [&](const std::string& f) {
                                                          return !feeders_here.count(f);
                                                      }),
                                       cont.feeders.end());
                    int n_needed = (std::min(t_c + control, opt.end_min) - cont.schedule.t_c) / step;
                    extend_schedule(cont.schedule, s.net, n_needed, tl.warnings);
                    next_active.push_back(std::move(cont));
                    rec.extended = true;
                }
                rec.note = why + (rec.extended ? "; previous plan carried forward" : "; part holds its state");
                tl.warnings.push_back("t=" + std::to_string(t_c) + " part " +
                                      std::to_string(rec.index) + ": " + rec.note);
            };

            if (rec.observed.buses.empty() || rec.scheduler < 0) {
                rec.idle = true;
                if (!rec.observed.buses.empty())
                    rec.note = "no resource-bus agent; part idles";
            } else {
                try {
                    BuildResult br = build_model(rec.observed, s.net, grid_now, opt.milp);
                    Solution sol = solve(br.milp, opt.limits, opt.solver);
                    if (sol.status != SolveStatus::optimal && sol.status != SolveStatus::feasible) {
                        carry_previous("solve ended with status " + std::string(to_string(sol.status)));
                    } else {
                        rec.schedule = extract_schedule(br, sol, grid_now, s.net);
                        rec.scheduled = true;
                        if (opt.verify_each) {
                            auto rep = verify_schedule(rec.schedule, rec.observed, s.net, grid_now,
                                                       opt.milp);
                            rec.verify_violations = static_cast<int>(rep.violations.size());
                            if (!rep.ok())
                                tl.warnings.push_back("t=" + std::to_string(t_c) + " part " +
                                                      std::to_string(rec.index) +
                                                      ": plan failed verification: " +
                                                      rep.violations.front().where());
                        }
                        ActiveSchedule act;
                        act.buses = rec.observed.buses;
                        act.feeders = rec.observed.feeders;
                        act.schedule = rec.schedule;
                        act.observed = rec.observed;
                        next_active.push_back(std::move(act));
                    }
                } catch (const std::exception& e) {
                    carry_previous(std::string("solve failed: ") + e.what());
                }
            }
            mom.ccps.push_back(std::move(rec));
        }
        s.active = std::move(next_active);
        tl.moments.push_back(std::move(mom));

        // Execute the plans in force until the next moment (or the end).
        int until = std::min(t_c + control, opt.end_min);
        for (int t = t_c + step; t <= until; t += step) {
            for (const auto& act : s.active) apply_schedule(s.state, s.net, act, t - step, t, tl.warnings);
            s.state.time_min = t;
            tl.steps.push_back(aggregate_state(s.net, s.state, t));
            tl.realized_states.push_back(s.state);
        }
        s.clock = until;
    }

    tl.rows.push_back(aggregate_state(s.net, s.state, opt.end_min));
    tl.final_net = s.net;
    tl.final_state = s.state;
    return tl;
}

}  // namespace gridrestore
