#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "fixtures.hpp"
#include "gridrestore/model_builder.hpp"
#include "gridrestore/solver.hpp"

using namespace gridrestore;
using fixtures::dark_state;
using fixtures::es_net;
using fixtures::pair_net;
using fixtures::tri_net;

namespace {

TimeGrid mk_grid(int t_c, int steps) {
    TimeGrid g;
    g.t_c = t_c;
    g.step_min = 5;
    g.horizon_min = 5 * steps;
    g.control_min = 15;
    return g;
}

MilpConfig small_cfg() {
    MilpConfig cfg;
    cfg.pwl_segments = 1;  // coarse squares keep the tiny models exactly solvable
    return cfg;
}

}  // namespace

TEST_CASE("two-bus build: variable census, bounds, and tags") {
    Network net = pair_net();
    ObservedCcp obs = make_observed(net, dark_state(net), {1, 2});
    BuildResult br = build_model(obs, net, mk_grid(0, 1), small_cfg());
    const MilpInstance& m = br.milp;

    // Hand census for 2 buses, 1 feeder, 1 DG, 1 segment per side, 2 points:
    // v 4, w 2, arc selectors 4+2, arc flows 4+2, flows 6, vsq 4, pg/qg 8,
    // pdg/qdg 4, loads 32, linearization 20.
    CHECK(m.vars.size() == 92);
    CHECK(m.binary_count() == 20);
    CHECK(br.n_points == 1);
    CHECK_FALSE(br.degenerate);

    // Blackout boundary: everything pinned off at the first point.
    for (const char* name : {"v_b1_t0", "v_b2_t0", "w_f1_2_t0", "wfd_f1_2_d0_t0", "wfd0_b1_t0"}) {
        int i = m.find_var(name);
        REQUIRE(i >= 0);
        CHECK(m.vars[i].lb == 0.0);
        CHECK(m.vars[i].ub == 0.0);
    }
    // Boundary electrical quantities are parked at zero: the first point is an
    // initial condition, not a solved operating point.
    for (const char* name : {"fp_f1_2_t0", "fq_f1_2_t0", "isq_f1_2_t0", "vsq_b1_t0", "vsq_b2_t0",
                             "sp_f1_2_s0_t0", "sp_f1_2_s1_t0", "sq_f1_2_s1_t0", "lp_f1_2_k0_t0"}) {
        int i = m.find_var(name);
        REQUIRE(i >= 0);
        CHECK(m.vars[i].ub == 0.0);
    }
    // Later points are free.
    CHECK(m.vars[m.find_var("v_b2_t1")].ub == 1.0);
    CHECK(m.vars[m.find_var("sp_f1_2_s0_t1")].ub == 1.0);
    CHECK(m.vars[m.find_var("vsq_b2_t1")].ub > 0.0);

    // Boundary injection and pickup pinned to the observed (dark) state.
    CHECK(m.vars[m.find_var("pg_b1_t0")].lb == 0.0);
    CHECK(m.vars[m.find_var("pg_b1_t0")].ub == 0.0);
    CHECK(m.vars[m.find_var("pl1_b2_t0")].ub == 0.0);

    // Every tag parses as family:entity:interval with a known family.
    std::set<std::string> families;
    for (const auto& con : m.cons) {
        auto c1 = con.tag.find(':');
        auto c2 = con.tag.rfind(':');
        REQUIRE(c1 != std::string::npos);
        REQUIRE(c2 > c1);
        families.insert(con.tag.substr(0, c1));
        int interval = std::stoi(con.tag.substr(c2 + 1));
        CHECK(interval >= 0);
        CHECK(interval <= 1);
    }
    for (const char* fam :
         {"pbal_p", "pbal_q", "vdrop_hi", "vdrop_lo", "pwl_sum_p", "pwl_y_q", "pwl_seg_p",
          "pwl_adj_q", "isqr_def", "pflow_hi", "qflow_lo", "vmin_gate", "vmax_gate", "isqr_cap",
          "rad_bal", "rad_cap", "rad_link", "rad_map", "rad_parent", "gen_zero_p", "dg_link_p",
          "dg_cap_hi", "dg_q_lo", "dg_ramp_up", "load_sum_p", "load_cap1", "load_prop2", "load_min",
          "keep_l1", "keep_bus", "keep_feeder"})
        CHECK(families.count(fam));

    // Objective covers only scheduled points, never the boundary.
    for (const auto& t : m.objective) {
        const std::string& n = m.vars[t.var].name;
        CHECK(n.find("_t0") == std::string::npos);
    }
}

TEST_CASE("two-bus restoration capped by the DG ramp") {
    // Lossless feeder, ramp 50 kW/min * 5 min = 250 kW reachable at the first
    // scheduled point. Priority order fills class 1 (200), then half of
    // class 2 (50): objective 5 * (1000*200 + 100*50) = 1,025,000.
    Network net = pair_net();
    ObservedCcp obs = make_observed(net, dark_state(net), {1, 2});
    TimeGrid grid = mk_grid(0, 1);
    BuildResult br = build_model(obs, net, grid, small_cfg());

    Solution bb = solve_bb(br.milp);
    REQUIRE(bb.status == SolveStatus::optimal);
    CHECK_THAT(bb.objective, Catch::Matchers::WithinRel(1'025'000.0, 1e-9));

    Solution oracle = enumerate_oracle(br.milp);
    REQUIRE(oracle.status == SolveStatus::optimal);
    CHECK_THAT(oracle.objective, Catch::Matchers::WithinRel(1'025'000.0, 1e-9));

    Schedule sch = extract_schedule(br, bb, grid, net);
    REQUIRE(sch.points.size() == 2);
    const SchedulePoint& p1 = sch.points[1];
    CHECK(p1.v.at(1) == 1);
    CHECK(p1.v.at(2) == 1);
    CHECK(p1.w.at("f1_2") == 1);
    CHECK_THAT(p1.pl1.at(2), Catch::Matchers::WithinAbs(200.0, 1e-7));
    CHECK_THAT(p1.pl2.at(2), Catch::Matchers::WithinAbs(50.0, 1e-7));
    CHECK_THAT(p1.pl3.at(2), Catch::Matchers::WithinAbs(0.0, 1e-7));
    CHECK_THAT(p1.p_dg.at(1), Catch::Matchers::WithinAbs(250.0, 1e-7));
    // Reactive pickup follows the fixed power factor of each class.
    CHECK_THAT(p1.ql1.at(2), Catch::Matchers::WithinAbs(100.0, 1e-7));
    CHECK_THAT(p1.ql2.at(2), Catch::Matchers::WithinAbs(25.0, 1e-7));
}

TEST_CASE("warm boundary: observed operating point carries into the schedule") {
    Network net = pair_net();
    NetworkState st = dark_state(net);
    st.v[1] = st.v[2] = true;
    st.w["f1_2"] = true;
    BusLoadState l;
    l.pl1 = 200.0;
    l.pl2 = 50.0;
    l.ql1 = 100.0;
    l.ql2 = 25.0;
    st.restored[2] = l;
    st.p_g[1] = 250.0;

    ObservedCcp obs = make_observed(net, st, {1, 2});
    TimeGrid grid = mk_grid(30, 1);
    BuildResult br = build_model(obs, net, grid, small_cfg());

    // Ramping on from 250 kW reaches 500 >= full 400 kW load: everything is
    // served at the scheduled point. 5 * (1000*200 + 100*100 + 10*100).
    Solution sol = solve_bb(br.milp);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK_THAT(sol.objective, Catch::Matchers::WithinRel(1'055'000.0, 1e-9));

    Schedule sch = extract_schedule(br, sol, grid, net);
    const SchedulePoint& p0 = sch.points[0];
    CHECK(p0.v.at(1) == 1);
    CHECK(p0.w.at("f1_2") == 1);
    CHECK_THAT(p0.pl1.at(2), Catch::Matchers::WithinAbs(200.0, 1e-9));
    CHECK_THAT(p0.pl2.at(2), Catch::Matchers::WithinAbs(50.0, 1e-9));
    CHECK_THAT(p0.p_g.at(1), Catch::Matchers::WithinAbs(250.0, 1e-9));
    const SchedulePoint& p1 = sch.points[1];
    CHECK_THAT(p1.pl3.at(2), Catch::Matchers::WithinAbs(100.0, 1e-7));
}

TEST_CASE("synchronization delay blocks energization until the DG is ready") {
    Network net = pair_net();
    net.dgs[0].t_start_min = 0;  // starts at the scheduling instant, 10 min to sync
    NetworkState st = dark_state(net);
    st.dg_start[1] = 0;
    ObservedCcp obs = make_observed(net, st, {1, 2});
    TimeGrid grid = mk_grid(0, 2);  // points at 0, 5, 10
    BuildResult br = build_model(obs, net, grid, small_cfg());

    // The unit floor keeps bus 1 dark until the sync point, so nothing can be
    // energized before t=10.
    CHECK(br.milp.vars[br.milp.find_var("v_b1_t1")].ub == 0.0);
    CHECK(br.milp.vars[br.milp.find_var("w_f1_2_t1")].ub == 0.0);

    Solution bb = solve_bb(br.milp);
    REQUIRE(bb.status == SolveStatus::optimal);
    // Full pickup at the one synchronized point (no ramp anchor there):
    // 5 * (1000*200 + 100*100 + 10*100).
    CHECK_THAT(bb.objective, Catch::Matchers::WithinRel(1'055'000.0, 1e-9));

    Solution oracle = enumerate_oracle(br.milp);
    REQUIRE(oracle.status == SolveStatus::optimal);
    CHECK_THAT(oracle.objective, Catch::Matchers::WithinRel(bb.objective, 1e-9));

    Schedule sch = extract_schedule(br, bb, grid, net);
    CHECK(sch.points[1].v.at(2) == 0);
    CHECK(sch.points[2].v.at(2) == 1);
    CHECK_THAT(sch.points[1].p_dg.at(1), Catch::Matchers::WithinAbs(0.0, 1e-9));
}

TEST_CASE("storage schedule tracks the state of charge exactly") {
    Network net = es_net();
    NetworkState st = dark_state(net);
    ObservedCcp obs = make_observed(net, st, {1});
    TimeGrid grid = mk_grid(0, 2);
    MilpConfig cfg = small_cfg();
    BuildResult br = build_model(obs, net, grid, cfg);

    Solution bb = solve_bb(br.milp);
    REQUIRE(bb.status == SolveStatus::optimal);
    // Serving the 40 kW priority-1 load at both scheduled points:
    // 2 * 5 * 1000 * 40.
    CHECK_THAT(bb.objective, Catch::Matchers::WithinRel(400'000.0, 1e-9));

    Solution oracle = enumerate_oracle(br.milp);
    REQUIRE(oracle.status == SolveStatus::optimal);
    CHECK_THAT(oracle.objective, Catch::Matchers::WithinRel(bb.objective, 1e-9));

    Schedule sch = extract_schedule(br, bb, grid, net);
    CHECK(sch.points[1].v.at(1) == 1);
    CHECK(sch.points[1].es_dis.at(1) == 1);
    CHECK(sch.points[1].es_ch.at(1) == 0);
    CHECK_THAT(sch.points[1].p_es_dis.at(1), Catch::Matchers::WithinAbs(40.0, 1e-7));
    // Stored energy at a point reflects the interval ending there: discharging
    // 40 kW for 5 min at a 1.15 draw factor takes out 46 * (1/12) / 200 per
    // interval.
    CHECK_THAT(sch.points[1].soc.at(1), Catch::Matchers::WithinAbs(0.5 - 46.0 / 12.0 / 200.0, 1e-9));
    CHECK_THAT(sch.points[2].soc.at(1),
               Catch::Matchers::WithinAbs(0.5 - 2 * 46.0 / 12.0 / 200.0, 1e-9));
}

TEST_CASE("cycle network must open one feeder to stay radial") {
    Network net = tri_net();
    ObservedCcp obs = make_observed(net, dark_state(net), {1, 2, 3});
    TimeGrid grid = mk_grid(0, 1);
    BuildResult br = build_model(obs, net, grid, small_cfg());

    Solution bb = solve_bb(br.milp);
    REQUIRE(bb.status == SolveStatus::optimal);
    // Both 100 kW priority-1 loads served: 5 * 1000 * 200.
    CHECK_THAT(bb.objective, Catch::Matchers::WithinRel(1'000'000.0, 1e-9));

    Schedule sch = extract_schedule(br, bb, grid, net);
    const SchedulePoint& p1 = sch.points[1];
    CHECK(p1.v.at(1) + p1.v.at(2) + p1.v.at(3) == 3);
    int wired = p1.w.at("f1_2") + p1.w.at("f1_3") + p1.w.at("f2_3");
    CHECK(wired == 2);  // a spanning tree of 3 buses, never the full cycle
    CHECK(p1.arc_use.at("b1#root") == 1);
}

TEST_CASE("part without any resource is flagged and stays dark") {
    Network net = pair_net();
    net.dgs.clear();
    ObservedCcp obs = make_observed(net, dark_state(net), {1, 2});
    TimeGrid grid = mk_grid(0, 1);
    BuildResult br = build_model(obs, net, grid, small_cfg());
    CHECK(br.degenerate);
    CHECK(br.milp.degenerate);

    Solution sol = solve_bb(br.milp);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK_THAT(sol.objective, Catch::Matchers::WithinAbs(0.0, 1e-9));
    Schedule sch = extract_schedule(br, sol, grid, net);
    CHECK(sch.points[1].v.at(1) == 0);
    CHECK(sch.points[1].v.at(2) == 0);
}

TEST_CASE("inconsistent observed state makes the model infeasible") {
    // Bus 2 is reported in use with no pickup recorded, but an in-use bus
    // must carry at least its minimum load fraction - and there is no source.
    Network net = pair_net();
    net.dgs.clear();
    NetworkState st = dark_state(net);
    st.v[2] = true;
    ObservedCcp obs = make_observed(net, st, {1, 2});
    BuildResult br = build_model(obs, net, mk_grid(0, 1), small_cfg());
    Solution sol = solve_bb(br.milp);
    CHECK(sol.status == SolveStatus::infeasible);
}

TEST_CASE("observed part distilled from a reconstructed view") {
    Network net = pair_net();

    CcpView view;
    view.members = {1, 2};
    view.agent_count = 2;
    view.converged = true;
    auto put = [&](int src, const std::string& f, double v) { view.global_state[{src, f}] = v; };
    put(1, "ab", 1);
    put(1, "v", 1);
    put(1, "pg", 250.0);
    put(1, "dg", 1);
    put(1, "dgts", -20);
    put(1, "af:f1_2", 1);
    put(1, "w:f1_2", 1);
    put(2, "ab", 1);
    put(2, "v", 1);
    put(2, "pl1", 200.0);
    put(2, "pl2", 50.0);
    put(2, "ql1", 100.0);
    put(2, "ql2", 25.0);
    put(2, "af:f1_2", 1);
    put(2, "w:f1_2", 0);  // one end still sees the feeder off; either end suffices

    ObservedCcp o = observed_from_view(view, net);
    CHECK(o.buses == std::vector<BusId>{1, 2});
    CHECK(o.feeders == std::vector<std::string>{"f1_2"});
    CHECK(o.bus_on0(1));
    CHECK(o.bus_on0(2));
    CHECK(o.feeder_on0("f1_2"));
    CHECK(o.dg_start.at(1) == -20);
    CHECK(o.pg0_at(1) == 250.0);
    CHECK(o.load0_at(2).pl1 == 200.0);

    SECTION("a damaged bus drops out together with its feeders") {
        put(2, "ab", 0);
        ObservedCcp o2 = observed_from_view(view, net);
        CHECK(o2.buses == std::vector<BusId>{1});
        CHECK(o2.feeders.empty());
    }
    SECTION("a feeder reported unavailable by either end is unusable") {
        put(1, "af:f1_2", 0);
        ObservedCcp o3 = observed_from_view(view, net);
        CHECK(o3.feeders.empty());
    }
}

TEST_CASE("ground-truth observation matches the published-state round trip") {
    Network net = pair_net();
    NetworkState st = dark_state(net);
    st.v[1] = true;
    st.p_g[1] = 60.0;

    ObservedCcp direct = make_observed(net, st, {1, 2});

    CcpView view;
    view.members = {1, 2};
    view.agent_count = 2;
    view.converged = true;
    for (BusId b : {1, 2})
        for (const auto& [field, value] : publish_local_state(net, st, b))
            view.global_state[{b, field}] = value;
    ObservedCcp via_view = observed_from_view(view, net);

    CHECK(direct.buses == via_view.buses);
    CHECK(direct.feeders == via_view.feeders);
    CHECK(direct.v0 == via_view.v0);
    CHECK(direct.w0 == via_view.w0);
    CHECK(direct.pg0 == via_view.pg0);
    CHECK(direct.dg_start == via_view.dg_start);
    CHECK(direct.soc0 == via_view.soc0);
}

TEST_CASE("chord interpolation of squares: exact at breakpoints, above in between") {
    double ybar = 2000.0;
    for (int L : {1, 2, 6}) {
        double h = ybar / L;
        for (int k = -L; k <= L; ++k) {
            double y = k * h;
            CHECK_THAT(pwl_square_chord(y, ybar, L), Catch::Matchers::WithinRel(y * y, 1e-12));
        }
        double mid = h / 2;  // worst case sits mid-segment
        CHECK_THAT(pwl_square_chord(mid, ybar, L) - mid * mid,
                   Catch::Matchers::WithinRel(pwl_square_max_error(ybar, L), 1e-12));
    }
}
