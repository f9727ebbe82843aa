#include <catch2/catch_amalgamated.hpp>

#include "gridrestore/grid.hpp"

using namespace gridrestore;

namespace {

Network triangle_net() {
    Network n;
    n.v_nom_kv = 2.4;
    n.v_min_kv = 2.3;
    n.v_max_kv = 2.5;
    for (int id : {1, 2, 3}) {
        Bus b;
        b.id = id;
        b.load_par[0] = {50, 10};
        n.buses.push_back(b);
    }
    auto feeder = [](int a, int b) {
        Feeder f;
        f.from = a;
        f.to = b;
        f.r_ohm = 0.1;
        f.x_ohm = 0.2;
        f.i_max_a = 200;
        return f;
    };
    n.feeders = {feeder(1, 2), feeder(2, 3), feeder(1, 3)};
    DgUnit d;
    d.bus = 1;
    d.p_max_kw = 100;
    d.p_min_kw = 5;
    d.q_max_kvar = 60;
    d.q_min_kvar = -60;
    d.ramp_kw_per_min = 20;
    n.dgs.push_back(d);
    return n;
}

}  // namespace

TEST_CASE("feeder names are canonical regardless of orientation") {
    CHECK(feeder_name(12, 7) == "f7_12");
    CHECK(feeder_name(7, 12) == "f7_12");
    Feeder f;
    f.from = 9;
    f.to = 4;
    CHECK(f.name() == "f4_9");
}

TEST_CASE("a well-formed network validates cleanly") {
    CHECK(validate_network(triangle_net()).empty());
}

TEST_CASE("validation flags malformed networks") {
    SECTION("duplicate bus id") {
        auto n = triangle_net();
        n.buses.push_back(n.buses[0]);
        CHECK_FALSE(validate_network(n).empty());
    }
    SECTION("self-loop feeder") {
        auto n = triangle_net();
        n.feeders[0].to = n.feeders[0].from;
        CHECK_FALSE(validate_network(n).empty());
    }
    SECTION("feeder to unknown bus") {
        auto n = triangle_net();
        n.feeders[0].to = 99;
        CHECK_FALSE(validate_network(n).empty());
    }
    SECTION("two resources on one bus") {
        auto n = triangle_net();
        EsUnit e;
        e.bus = 1;
        e.capacity_kwh = 100;
        e.p_ch_max_kw = 50;
        e.p_dis_max_kw = 50;
        n.ess.push_back(e);
        CHECK_FALSE(validate_network(n).empty());
    }
    SECTION("inverted voltage band") {
        auto n = triangle_net();
        n.v_min_kv = 3.0;
        CHECK_FALSE(validate_network(n).empty());
    }
    SECTION("non-contiguous ES capability rows") {
        auto n = triangle_net();
        EsUnit e;
        e.bus = 2;
        e.capacity_kwh = 100;
        e.p_ch_max_kw = 50;
        e.p_dis_max_kw = 50;
        e.q_capability = {{0.0, 0.4, -0.2, 0.2}, {0.6, 1.0, 0.0, 0.1}};
        n.ess.push_back(e);
        CHECK_FALSE(validate_network(n).empty());
    }
    SECTION("dg with p_min above p_max") {
        auto n = triangle_net();
        n.dgs[0].p_min_kw = 500;
        CHECK_FALSE(validate_network(n).empty());
    }
}

TEST_CASE("connected components partition the node set deterministically") {
    std::set<int> nodes{1, 2, 3, 4, 5, 6};
    std::vector<std::pair<int, int>> edges{{5, 4}, {1, 2}, {2, 3}};
    auto comps = connected_components(nodes, edges);
    REQUIRE(comps.size() == 3);
    CHECK(comps[0] == std::vector<int>{1, 2, 3});
    CHECK(comps[1] == std::vector<int>{4, 5});
    CHECK(comps[2] == std::vector<int>{6});
}

TEST_CASE("connected components reject dangling edge endpoints") {
    std::set<int> nodes{1, 2};
    CHECK_THROWS_AS(connected_components(nodes, {{1, 7}}), std::invalid_argument);
}

TEST_CASE("radiality check accepts energized trees with a resource") {
    auto n = triangle_net();
    NetworkState st;
    st.v = {{1, true}, {2, true}, {3, true}};
    st.w = {{"f1_2", true}, {"f2_3", true}};
    auto rep = is_radial_islanding(n, st);
    CHECK(rep.ok);
    CHECK(rep.diagnostic.empty());
}

TEST_CASE("radiality check rejects cycles") {
    auto n = triangle_net();
    NetworkState st;
    st.v = {{1, true}, {2, true}, {3, true}};
    st.w = {{"f1_2", true}, {"f2_3", true}, {"f1_3", true}};
    auto rep = is_radial_islanding(n, st);
    CHECK_FALSE(rep.ok);
    CHECK(rep.diagnostic.find("not a tree") != std::string::npos);
}

TEST_CASE("radiality check rejects feeders into de-energized buses") {
    auto n = triangle_net();
    NetworkState st;
    st.v = {{1, true}, {2, false}};
    st.w = {{"f1_2", true}};
    auto rep = is_radial_islanding(n, st);
    CHECK_FALSE(rep.ok);
    CHECK(rep.diagnostic.find("f1_2") != std::string::npos);
}

TEST_CASE("radiality check rejects islands without generation") {
    auto n = triangle_net();
    NetworkState st;
    st.v = {{2, true}, {3, true}};
    st.w = {{"f2_3", true}};
    auto rep = is_radial_islanding(n, st);
    CHECK_FALSE(rep.ok);
    CHECK(rep.diagnostic.find("no generation") != std::string::npos);
}

TEST_CASE("radiality check passes trivially with nothing energized") {
    auto n = triangle_net();
    CHECK(is_radial_islanding(n, NetworkState{}).ok);
}

TEST_CASE("time grid validation") {
    TimeGrid g;
    g.horizon_min = 120;
    g.step_min = 5;
    g.control_min = 30;
    CHECK_NOTHROW(g.validate());
    CHECK(g.intervals() == 24);
    CHECK(g.point_time(3) == 15);

    g.control_min = 7;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g.control_min = 30;
    g.horizon_min = 121;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);

    // the re-scheduling period must leave look-ahead beyond itself
    g.horizon_min = 120;
    g.control_min = 120;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("state validation catches impossible snapshots") {
    auto n = triangle_net();
    NetworkState st;
    st.v = {{1, true}, {2, true}};
    st.w = {{"f1_2", true}};
    st.restored[2] = {30, 0, 0, 6, 0, 0};
    CHECK(validate_state(n, st).empty());

    SECTION("restored load above connected parameter") {
        st.restored[2].pl1 = 80;  // connected class-1 load is 50 kW
        CHECK_FALSE(validate_state(n, st).empty());
    }
    SECTION("energized but damaged bus") {
        st.avail_bus[2] = false;
        CHECK_FALSE(validate_state(n, st).empty());
    }
    SECTION("restored load on a dark bus") {
        st.restored[3] = {10, 0, 0, 0, 0, 0};
        CHECK_FALSE(validate_state(n, st).empty());
    }
    SECTION("feeder in use with a dark endpoint") {
        st.w["f2_3"] = true;
        CHECK_FALSE(validate_state(n, st).empty());
    }
}

TEST_CASE("network state defaults: available but de-energized") {
    NetworkState st;
    CHECK(st.bus_available(42));
    CHECK_FALSE(st.bus_in_use(42));
    CHECK_FALSE(st.feeder_in_use("f1_2"));
    CHECK(st.p_g_at(42) == 0.0);
    CHECK(st.load_at(42).total_p() == 0.0);
}
