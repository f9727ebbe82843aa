#pragma once

// Independent schedule verification. Re-checks a produced schedule against
// the observed part, the static network data, and the scheduling
// configuration by direct arithmetic — without consulting the optimization
// model that produced it. Every failed check is reported against the
// constraint family, entity, and interval it belongs to.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gridrestore/grid.hpp"
#include "gridrestore/model_builder.hpp"

namespace gridrestore {

struct Violation {
    std::string family;
    std::string entity;
    int interval = -1;
    double residual = 0.0;
    std::string detail;

    std::string where() const { return make_tag(family, entity, interval); }
};

struct VerificationReport {
    std::vector<Violation> violations;
    long checks = 0;

    bool ok() const { return violations.empty(); }
    double worst() const {
        double w = 0;
        for (const auto& v : violations) w = std::max(w, v.residual);
        return w;
    }
    std::string summary(std::size_t max_lines = 12) const {
        std::ostringstream os;
        if (ok()) {
            os << "schedule verified: " << checks << " checks passed";
            return os.str();
        }
        os << violations.size() << " violation(s) in " << checks << " checks (worst residual "
           << worst() << ")";
        for (std::size_t i = 0; i < violations.size() && i < max_lines; ++i) {
            const auto& v = violations[i];
            os << "\n  " << v.where() << " residual=" << v.residual;
            if (!v.detail.empty()) os << " (" << v.detail << ")";
        }
        if (violations.size() > max_lines) os << "\n  ...";
        return os.str();
    }
};

namespace verifydetail {

struct Checker {
    VerificationReport& rep;
    double tol;

    // residual > tol * max(1, scale) -> violation
    void num(const std::string& family, const std::string& entity, int n, double residual,
             double scale, const std::string& detail = "") {
        ++rep.checks;
        if (!(residual <= tol * std::max(1.0, std::abs(scale)))) {
            rep.violations.push_back({family, entity, n, residual, detail});
        }
    }
    void flag(const std::string& family, const std::string& entity, int n, bool pass,
              const std::string& detail = "") {
        ++rep.checks;
        if (!pass) rep.violations.push_back({family, entity, n, 1.0, detail});
    }
};

template <typename K, typename V>
bool maps_keys(const std::map<K, V>& m, const std::vector<K>& keys) {
    if (m.size() != keys.size()) return false;
    for (const auto& k : keys)
        if (!m.count(k)) return false;
    return true;
}

}  // namespace verifydetail

inline VerificationReport verify_schedule(const Schedule& sch, const ObservedCcp& obs,
                                          const Network& net, const TimeGrid& grid,
                                          const MilpConfig& cfg, double tol = 1e-6) {
    VerificationReport rep;
    verifydetail::Checker c{rep, tol};
    const int N = grid.intervals();
    const int L = cfg.pwl_segments;
    const double vmax2 = net.v_max_kv * net.v_max_kv;
    const double vmin2 = net.v_min_kv * net.v_min_kv;
    const double vnom2 = net.v_nom_kv * net.v_nom_kv;

    c.flag("shape", "points", -1, static_cast<int>(sch.points.size()) == N + 1,
           "schedule must carry one point per interval boundary");
    c.flag("shape", "clock", -1, sch.t_c == grid.t_c && sch.step_min == grid.step_min,
           "schedule clock must match the time grid");
    if (static_cast<int>(sch.points.size()) != N + 1) return rep;

    std::set<BusId> resource;
    for (const auto& [b, ts] : obs.dg_start) resource.insert(b);
    for (BusId b : obs.es_buses) resource.insert(b);

    // Index the feeders once.
    struct FRef {
        const Feeder* fd;
        double fbar, ybar;
    };
    std::map<std::string, FRef> fref;
    for (const auto& fname : obs.feeders) {
        const Feeder* fd = net.find_feeder(fname);
        c.flag("shape", fname, -1, fd != nullptr, "feeder present in network data");
        if (!fd) continue;
        double ybar = net.v_nom_kv * fd->i_max_a;
        double fbar = cfg.strict_flow_bounds ? fd->r_ohm * fd->i_max_a * fd->i_max_a * 1e-3 : ybar;
        fref[fname] = {fd, fbar, ybar};
    }

    for (int n = 0; n <= N; ++n) {
        const SchedulePoint& p = sch.points[n];
        c.flag("shape", "bus_set", n, verifydetail::maps_keys(p.v, obs.buses),
               "point must cover exactly the member buses");
        c.flag("shape", "feeder_set", n, verifydetail::maps_keys(p.w, obs.feeders),
               "point must cover exactly the usable feeders");
    }
    if (!rep.ok()) return rep;  // set mismatches make the per-entry checks meaningless

    // Pre-sync table, recomputed from the observed start instants.
    std::map<BusId, std::vector<char>> presync;
    for (const auto& [b, ts] : obs.dg_start) {
        const DgUnit* d = net.dg_at(b);
        std::vector<char> pre(N + 1, 0);
        for (int n = 0; n <= N; ++n) pre[n] = grid.point_time(n) < ts + d->t_syn_min ? 1 : 0;
        presync[b] = std::move(pre);
    }

    // ---- boundary conditions at the scheduling instant --------------------
    {
        const SchedulePoint& p0 = sch.points[0];
        for (BusId b : obs.buses) {
            c.flag("boundary", "b" + std::to_string(b) + "#v", 0,
                   p0.v.at(b) == (obs.bus_on0(b) ? 1 : 0), "bus use must match the observed state");
            auto l0 = obs.load0_at(b);
            c.num("boundary", "b" + std::to_string(b) + "#pl1", 0, std::abs(p0.pl1.at(b) - l0.pl1),
                  l0.pl1);
            c.num("boundary", "b" + std::to_string(b) + "#pl2", 0, std::abs(p0.pl2.at(b) - l0.pl2),
                  l0.pl2);
            c.num("boundary", "b" + std::to_string(b) + "#pl3", 0, std::abs(p0.pl3.at(b) - l0.pl3),
                  l0.pl3);
            c.num("boundary", "b" + std::to_string(b) + "#pg", 0, std::abs(p0.p_g.at(b) - obs.pg0_at(b)),
                  obs.pg0_at(b));
        }
        for (const auto& f : obs.feeders)
            c.flag("boundary", f + "#w", 0, p0.w.at(f) == (obs.feeder_on0(f) ? 1 : 0),
                   "feeder use must match the observed state");
        for (BusId b : obs.es_buses) {
            const EsUnit* e = net.es_at(b);
            double s0 = obs.soc0_at(b, e ? e->soc_min : 0.0);
            c.num("boundary", "b" + std::to_string(b) + "#soc", 0, std::abs(p0.soc.at(b) - s0), s0);
        }
    }

    // ---- service continuity ------------------------------------------------
    for (int n = 0; n + 1 <= N; ++n) {
        const SchedulePoint& a = sch.points[n];
        const SchedulePoint& b2 = sch.points[n + 1];
        for (BusId b : obs.buses) {
            std::string eb = "b" + std::to_string(b);
            c.flag("keep_bus", eb, n, a.v.at(b) <= b2.v.at(b), "in-use buses stay in use");
            c.num("keep_l1", eb, n, std::max(0.0, a.pl1.at(b) - b2.pl1.at(b)), a.pl1.at(b),
                  "priority-1 pickup must not shrink");
            c.num("keep_l2", eb, n, std::max(0.0, a.pl2.at(b) - b2.pl2.at(b)), a.pl2.at(b),
                  "priority-2 pickup must not shrink");
        }
        for (const auto& f : obs.feeders)
            c.flag("keep_feeder", f, n, a.w.at(f) <= b2.w.at(f), "in-use feeders stay in use");
    }

    // ---- per-point physics, gating, radiality, resources, loads ------------
    for (int n = 0; n <= N; ++n) {
        const SchedulePoint& p = sch.points[n];

        for (BusId b : obs.buses) {
            std::string eb = "b" + std::to_string(b);
            int v = p.v.at(b);
            c.flag("binary", eb + "#v", n, v == 0 || v == 1);

            // Power balance: inflow - outflow - sending-side losses + local
            // generation - restored load. Network physics only constrains the
            // look-ahead points; the boundary point is an initial condition
            // whose electrical quantities are parked at zero.
            if (n >= 1) {
                double sp = p.p_g.at(b) - (p.pl1.at(b) + p.pl2.at(b) + p.pl3.at(b));
                double sq = p.q_g.at(b) - (p.ql1.at(b) + p.ql2.at(b) + p.ql3.at(b));
                double scale_p = std::abs(p.p_g.at(b)) + p.pl1.at(b) + p.pl2.at(b) + p.pl3.at(b);
                double scale_q = std::abs(p.q_g.at(b));
                for (const auto& [fname, fr] : fref) {
                    if (fr.fd->to == b) {
                        sp += p.p_flow.at(fname);
                        sq += p.q_flow.at(fname);
                        scale_p += std::abs(p.p_flow.at(fname));
                        scale_q += std::abs(p.q_flow.at(fname));
                    } else if (fr.fd->from == b) {
                        sp -= p.p_flow.at(fname) + fr.fd->r_ohm * p.i_sqr.at(fname) * 1e-3;
                        sq -= p.q_flow.at(fname) + fr.fd->x_ohm * p.i_sqr.at(fname) * 1e-3;
                        scale_p += std::abs(p.p_flow.at(fname)) + fr.fd->r_ohm * p.i_sqr.at(fname) * 1e-3;
                        scale_q += std::abs(p.q_flow.at(fname)) + fr.fd->x_ohm * p.i_sqr.at(fname) * 1e-3;
                    }
                }
                c.num("pbal_p", eb, n, std::abs(sp), scale_p, "active power balance");
                c.num("pbal_q", eb, n, std::abs(sq), scale_q, "reactive power balance");

                // Voltage window.
                double vs = p.v_sqr.at(b);
                c.num("vmin_gate", eb, n, std::max(0.0, v * vmin2 - vs), vmin2);
                c.num("vmax_gate", eb, n, std::max(0.0, vs - v * vmax2), vmax2);
            }

            // Load pickup.
            const Bus* bus = net.find_bus(b);
            double lam_min = bus->lambda_min >= 0 ? bus->lambda_min : cfg.lambda_min_default;
            double par_sum = 0;
            double plv[3] = {p.pl1.at(b), p.pl2.at(b), p.pl3.at(b)};
            double qlv[3] = {p.ql1.at(b), p.ql2.at(b), p.ql3.at(b)};
            for (int cc = 0; cc < 3; ++cc) {
                double par = bus->load_par[cc].p_kw;
                par_sum += par;
                std::string fam = "load_cap" + std::to_string(cc + 1);
                c.num(fam, eb, n, std::max(0.0, plv[cc] - v * par), par);
                c.num(fam, eb, n, std::max(0.0, -plv[cc]), par, "pickup must be non-negative");
                std::string famp = "load_prop" + std::to_string(cc + 1);
                if (par > 0) {
                    double ratio = bus->load_par[cc].q_kvar / par;
                    c.num(famp, eb, n, std::abs(qlv[cc] - ratio * plv[cc]), std::abs(qlv[cc]) + std::abs(plv[cc]));
                } else {
                    c.num(famp, eb, n, std::abs(qlv[cc]), 1.0);
                }
            }
            if (n >= 1 && par_sum > 0 && lam_min > 0)
                c.num("load_min", eb, n, std::max(0.0, v * lam_min * par_sum - (plv[0] + plv[1] + plv[2])),
                      par_sum, "minimum pickup fraction on an in-use bus");

            if (!resource.count(b)) {
                c.num("gen_zero_p", eb, n, std::abs(p.p_g.at(b)), 1.0, "no source at this bus");
                c.num("gen_zero_q", eb, n, std::abs(p.q_g.at(b)), 1.0, "no source at this bus");
            }
        }

        for (const auto& [fname, fr] : fref) {
            int w = p.w.at(fname);
            c.flag("binary", fname + "#w", n, w == 0 || w == 1);
            int vf = p.v.at(fr.fd->from), vt = p.v.at(fr.fd->to);
            c.flag("feeder_ends", fname, n, w == 0 || (vf == 1 && vt == 1),
                   "an in-service feeder needs both endpoints in use");

            if (n >= 1) {
                double fp = p.p_flow.at(fname), fq = p.q_flow.at(fname), is = p.i_sqr.at(fname);
                c.num("pflow_hi", fname, n, std::max(0.0, std::abs(fp) - w * fr.fbar), fr.fbar);
                c.num("qflow_hi", fname, n, std::max(0.0, std::abs(fq) - w * fr.fbar), fr.fbar);
                c.num("isqr_cap", fname, n, std::max(0.0, is - w * fr.fd->i_max_a * fr.fd->i_max_a),
                      fr.fd->i_max_a * fr.fd->i_max_a);
                c.num("isqr_cap", fname, n, std::max(0.0, -is), 1.0,
                      "squared current must be non-negative");

                // Square-term linearization: the squared current equals the chord
                // interpolation of both flow squares on the breakpoint grid.
                double chord = pwl_square_chord(fp, fr.ybar, L) + pwl_square_chord(fq, fr.ybar, L);
                c.num("isqr_def", fname, n, std::abs(vnom2 * is - chord), chord + vnom2 * std::abs(is),
                      "squared current must match the chord interpolation");

                if (w == 1) {
                    // Receiving-end flow convention: sending side covers the loss,
                    // so the square-magnitude term adds to the drop.
                    double vsf = p.v_sqr.at(fr.fd->from), vst = p.v_sqr.at(fr.fd->to);
                    double drop = 2e-3 * (fr.fd->r_ohm * fp + fr.fd->x_ohm * fq) +
                                  1e-6 * (fr.fd->r_ohm * fr.fd->r_ohm + fr.fd->x_ohm * fr.fd->x_ohm) * is;
                    c.num("vdrop_hi", fname, n, std::abs(vsf - vst - drop),
                          std::abs(vsf) + std::abs(vst) + std::abs(drop),
                          "voltage drop along an in-service feeder");
                }
            }
        }

        // Radial-islanding layer.
        for (const auto& [fname, fr] : fref) {
            int a0 = p.arc_use.at(fname + "#d0"), a1 = p.arc_use.at(fname + "#d1");
            c.flag("binary", fname + "#arc", n, (a0 == 0 || a0 == 1) && (a1 == 0 || a1 == 1));
            c.flag("rad_map", fname, n, a0 + a1 == p.w.at(fname),
                   "feeder use must pick exactly one direction");
            double cap = static_cast<double>(obs.buses.size()) + 1.0;
            for (int d = 0; d < 2; ++d) {
                std::string an = fname + "#d" + std::to_string(d);
                double h = p.arc_flow.at(an);
                int au = p.arc_use.at(an);
                c.num("rad_cap", an, n, std::max(0.0, h - cap * au), cap);
                c.num("rad_cap", an, n, std::max(0.0, -h), cap, "connector flow must be non-negative");
            }
        }
        for (BusId b : resource) {
            std::string an = "b" + std::to_string(b) + "#root";
            int au = p.arc_use.at(an);
            double h = p.arc_flow.at(an);
            double cap = static_cast<double>(obs.buses.size()) + 1.0;
            c.flag("binary", an, n, au == 0 || au == 1);
            c.num("rad_cap", an, n, std::max(0.0, h - cap * au), cap);
            c.num("rad_cap", an, n, std::max(0.0, -h), cap);
            c.flag("rad_link", an, n, au == 0 || p.v.at(b) == 1,
                   "a root connector needs its bus in use");
        }
        for (BusId b : obs.buses) {
            std::string eb = "b" + std::to_string(b);
            double bal = -static_cast<double>(p.v.at(b));
            int parents = 0;
            for (const auto& [fname, fr] : fref) {
                if (fr.fd->to == b) {
                    bal += p.arc_flow.at(fname + "#d0") - p.arc_flow.at(fname + "#d1");
                    parents += p.arc_use.at(fname + "#d0");
                } else if (fr.fd->from == b) {
                    bal += p.arc_flow.at(fname + "#d1") - p.arc_flow.at(fname + "#d0");
                    parents += p.arc_use.at(fname + "#d1");
                }
            }
            if (resource.count(b)) {
                bal += p.arc_flow.at(eb + "#root");
                parents += p.arc_use.at(eb + "#root");
            }
            c.num("rad_bal", eb, n, std::abs(bal), obs.buses.size(),
                  "unit of connectivity demand per in-use bus");
            c.flag("rad_parent", eb, n, parents == p.v.at(b),
                   "every in-use bus has exactly one selected incoming connector");
        }
        {
            // Structural cross-check on the undirected in-use subgraph.
            std::set<BusId> on;
            for (BusId b : obs.buses)
                if (p.v.at(b) == 1) on.insert(b);
            std::set<std::string> wired;
            for (const auto& f : obs.feeders)
                if (p.w.at(f) == 1) wired.insert(f);
            RadialityReport rr = is_radial_islanding(net, on, wired, resource);
            c.flag("radial", "islanding", n, rr.ok, rr.diagnostic);
        }

        // DG units.
        for (const auto& [b, ts] : obs.dg_start) {
            const DgUnit* d = net.dg_at(b);
            const auto& pre = presync.at(b);
            std::string eb = "b" + std::to_string(b);
            int v = p.v.at(b);
            double pdg = p.p_dg.at(b), qdg = p.q_dg.at(b);
            c.num("dg_link_p", eb, n, std::abs(p.p_g.at(b) - pdg), std::abs(pdg));
            c.num("dg_link_q", eb, n, std::abs(p.q_g.at(b) - qdg), std::abs(qdg));
            // Capability and synchronization limits apply to planned points;
            // the boundary output is given.
            if (n >= 1) {
                c.num("dg_cap_hi", eb, n, std::max(0.0, pdg - v * d->p_max_kw), d->p_max_kw);
                c.num("dg_cap_lo", eb, n, std::max(0.0, v * d->p_min_kw - pdg), d->p_max_kw);
                c.num("dg_cap_lo", eb, n, std::max(0.0, -pdg), d->p_max_kw,
                      "output must be non-negative");
                if (pre[n])
                    c.num("dg_sync", eb, n, std::abs(pdg), d->p_max_kw, "output before synchronization");
            }
            if (d->p_max_kw > 0) {
                c.num("dg_q_hi", eb, n, std::max(0.0, qdg - (d->q_max_kvar / d->p_max_kw) * pdg),
                      std::abs(d->q_max_kvar));
                c.num("dg_q_lo", eb, n, std::max(0.0, (d->q_min_kvar / d->p_max_kw) * pdg - qdg),
                      std::abs(d->q_min_kvar));
            }
            if (n + 1 <= N && !pre[n] && !pre[n + 1]) {
                double step_kw = d->ramp_kw_per_min * grid.step_min;
                double diff = sch.points[n + 1].p_dg.at(b) - pdg;
                c.num("dg_ramp_up", eb, n, std::max(0.0, diff - step_kw), step_kw);
                c.num("dg_ramp_dn", eb, n, std::max(0.0, -diff - step_kw), step_kw);
            }
        }

        // ES units.
        for (BusId b : obs.es_buses) {
            const EsUnit* e = net.es_at(b);
            std::string eb = "b" + std::to_string(b);
            int v = p.v.at(b);
            double pc = p.p_es_ch.at(b), pd = p.p_es_dis.at(b), qes = p.q_es.at(b);
            int vch = p.es_ch.at(b), vdis = p.es_dis.at(b);
            double base = e->rated_kw();
            c.flag("binary", eb + "#es", n, (vch == 0 || vch == 1) && (vdis == 0 || vdis == 1));
            c.num("es_net_p", eb, n, std::abs(p.p_g.at(b) - (pd - pc)), std::abs(pd) + std::abs(pc));
            c.num("es_net_q", eb, n, std::abs(p.q_g.at(b) - qes), std::abs(qes));
            c.num("es_ch_cap", eb, n, std::max(0.0, pc - vch * e->p_ch_max_kw), e->p_ch_max_kw);
            c.num("es_ch_cap", eb, n, std::max(0.0, -pc), e->p_ch_max_kw);
            c.num("es_dis_cap", eb, n, std::max(0.0, pd - vdis * e->p_dis_max_kw), e->p_dis_max_kw);
            c.num("es_dis_cap", eb, n, std::max(0.0, -pd), e->p_dis_max_kw);
            c.flag("es_mutex", eb, n, vch + vdis <= v,
                   "charge/discharge only one at a time, and only on an in-use bus");

            double mag = pc + pd;  // |net ES power| under charge/discharge exclusivity
            if (!e->q_capability.empty() && cfg.es_q_mode == EsQMode::table_binary) {
                if (v == 0) {
                    c.num("es_q_hi", eb, n, std::abs(qes), base, "no reactive output on a dark bus");
                    c.num("es_band_hi", eb, n, mag, base, "no dispatch on a dark bus");
                } else {
                    bool in_band = false;
                    double btol = tol * std::max(1.0, base);
                    for (const auto& r : e->q_capability) {
                        if (mag >= r.p_lo * base - btol && mag <= r.p_hi * base + btol &&
                            qes >= r.q_min * base - btol && qes <= r.q_max * base + btol) {
                            in_band = true;
                            break;
                        }
                    }
                    c.flag("es_band_pick", eb, n, in_band,
                           "dispatch must sit inside one capability band");
                }
            } else {
                const EsQRow row = e->q_capability.empty() ? EsQRow{0, 1, 0, 0} : e->q_capability.back();
                c.num("es_q_hi", eb, n, std::max(0.0, qes - v * row.q_max * base), base);
                c.num("es_q_lo", eb, n, std::max(0.0, v * row.q_min * base - qes), base);
            }

            double soc = p.soc.at(b);
            if (n >= 1) {
                c.num("soc_window", eb, n, std::max(0.0, e->soc_min - soc), 1.0);
                c.num("soc_window", eb, n, std::max(0.0, soc - e->soc_max), 1.0);
                // Stored energy at a point reflects the activity over the
                // interval that ends there.
                double arrived = soc_after(*e, sch.points[n - 1].soc.at(b), pc, pd, grid.step_min);
                c.num("es_soc", eb, n, std::abs(soc - arrived), 1.0, "state of charge recursion");
            }
        }
    }

    // ---- objective ----------------------------------------------------------
    if (sch.status == SolveStatus::optimal || sch.status == SolveStatus::feasible) {
        double obj = 0;
        for (int n = 1; n <= N; ++n) {
            const SchedulePoint& p = sch.points[n];
            for (BusId b : obs.buses)
                obj += grid.step_min *
                       (cfg.w_l1 * p.pl1.at(b) + cfg.w_l2 * p.pl2.at(b) + cfg.w_l3 * p.pl3.at(b));
        }
        c.num("objective", "total", -1, std::abs(obj - sch.objective), std::abs(obj),
              "reported objective must match the weighted restored energy");
    }

    return rep;
}

}  // namespace gridrestore
