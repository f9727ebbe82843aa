#include <catch2/catch_amalgamated.hpp>

#include "gridrestore/consensus.hpp"

using namespace gridrestore;

namespace {

CommGraph path_graph(std::initializer_list<int> ids) {
    CommGraph g;
    int prev = -1;
    for (int id : ids) {
        g.add_agent(id);
        if (prev >= 0) g.add_link(prev, id);
        prev = id;
    }
    return g;
}

}  // namespace

TEST_CASE("metropolis weights on a 3-path") {
    auto g = path_graph({1, 2, 3});
    auto w = metropolis_weights(g);
    CHECK(w.at({1, 2}) == Catch::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(w.at({2, 1}) == Catch::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(w.at({2, 3}) == Catch::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(w.at({1, 1}) == Catch::Approx(2.0 / 3).epsilon(1e-15));
    CHECK(w.at({2, 2}) == Catch::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(w.at({3, 3}) == Catch::Approx(2.0 / 3).epsilon(1e-15));
    // Rows sum to one.
    for (int i : {1, 2, 3}) {
        double row = 0;
        for (const auto& [k, v] : w)
            if (k.first == i) row += v;
        CHECK(row == Catch::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("links touching unavailable agents carry no weight") {
    CommGraph g;
    g.add_agent(1);
    g.add_agent(2);
    g.add_agent(3, false);
    g.add_link(1, 2);
    g.add_link(2, 3);
    CHECK(g.neighbors(2) == std::vector<int>{1});
    auto w = metropolis_weights(g);
    CHECK(w.count({2, 3}) == 0);
    CHECK(w.count({3, 3}) == 0);
    CHECK(w.at({1, 2}) == Catch::Approx(0.5));
}

TEST_CASE("one consensus step averages linked agents") {
    CommGraph g;
    g.add_agent(1);
    g.add_agent(2);
    g.add_link(1, 2);
    auto w = metropolis_weights(g);

    std::map<int, AgentVector> vecs;
    vecs[1].entries[{1, "x"}] = 2.0;
    vecs[1].indicator[1] = 1.0;
    vecs[2].entries[{2, "x"}] = 4.0;
    vecs[2].indicator[2] = 1.0;

    consensus_step(vecs, w);

    // Both see both keys now; values mix toward the average.
    CHECK(vecs[1].entries.at({1, "x"}) == Catch::Approx(1.0));   // 0.5*2 + 0.5*0
    CHECK(vecs[1].entries.at({2, "x"}) == Catch::Approx(2.0));   // 0.5*0 + 0.5*4
    CHECK(vecs[2].entries.at({1, "x"}) == Catch::Approx(1.0));
    CHECK(vecs[2].entries.at({2, "x"}) == Catch::Approx(2.0));
    CHECK(vecs[1].indicator.at(1) == Catch::Approx(0.5));
    CHECK(vecs[1].indicator.at(2) == Catch::Approx(0.5));
}

TEST_CASE("a key both agents already carry is averaged directly") {
    CommGraph g;
    g.add_agent(1);
    g.add_agent(2);
    g.add_link(1, 2);
    auto w = metropolis_weights(g);
    std::map<int, AgentVector> vecs;
    vecs[1].entries[{9, "x"}] = 2.0;
    vecs[2].entries[{9, "x"}] = 4.0;
    consensus_step(vecs, w);
    CHECK(vecs[1].entries.at({9, "x"}) == Catch::Approx(3.0));
    CHECK(vecs[2].entries.at({9, "x"}) == Catch::Approx(3.0));
}

TEST_CASE("entries unseen by every neighbour stay unseen") {
    CommGraph g;
    g.add_agent(1);
    g.add_agent(2);
    g.add_agent(3);
    g.add_link(1, 2);  // 3 is isolated
    auto w = metropolis_weights(g);
    std::map<int, AgentVector> vecs;
    vecs[1].indicator[1] = 1.0;
    vecs[2].indicator[2] = 1.0;
    vecs[3].indicator[3] = 1.0;
    consensus_step(vecs, w);
    CHECK(vecs[3].indicator.size() == 1);
    CHECK(vecs[3].indicator.at(3) == Catch::Approx(1.0));
    CHECK(vecs[1].indicator.count(3) == 0);
}

TEST_CASE("discovery splits the network into the right parts") {
    CommGraph g;
    for (int i : {1, 2, 3, 4, 5}) g.add_agent(i);
    g.add_link(1, 2);
    g.add_link(2, 3);
    g.add_link(4, 5);

    std::map<int, std::map<std::string, double>> local;
    for (int i : {1, 2, 3, 4, 5}) local[i] = {{"pl1", 10.0 * i}};

    auto res = run_idp(g, local);
    REQUIRE(res.converged);
    REQUIRE(res.views.size() == 5);

    for (int i : {1, 2, 3}) {
        const auto& v = res.views.at(i);
        CHECK(v.converged);
        CHECK(v.members == std::vector<int>{1, 2, 3});
        CHECK(v.agent_count == 3);
        CHECK(v.sum("pl1") == Catch::Approx(60.0).margin(1e-6));
        CHECK(v.get(2, "pl1") == Catch::Approx(20.0).margin(1e-6));
        CHECK_FALSE(v.has(4, "pl1"));  // the other part stays invisible
        CHECK(v.elapsed_ms == Catch::Approx(1.0 * v.rounds_used));
    }
    for (int i : {4, 5}) {
        const auto& v = res.views.at(i);
        CHECK(v.members == std::vector<int>{4, 5});
        CHECK(v.agent_count == 2);
        CHECK(v.sum("pl1") == Catch::Approx(90.0).margin(1e-6));
        CHECK_FALSE(v.has(1, "pl1"));
    }
}

TEST_CASE("a singleton agent converges immediately to a view of itself") {
    CommGraph g;
    g.add_agent(7);
    auto res = run_idp(g, {{7, {{"pl1", 42.0}}}});
    REQUIRE(res.converged);
    const auto& v = res.views.at(7);
    CHECK(v.members == std::vector<int>{7});
    CHECK(v.agent_count == 1);
    CHECK(v.get(7, "pl1") == Catch::Approx(42.0).margin(1e-12));
    CHECK(res.rounds == 1);  // the first round shows zero change
}

TEST_CASE("integer-valued fields are reconstructed exactly") {
    CommGraph g;
    for (int i : {1, 2, 3, 4}) g.add_agent(i);
    g.add_link(1, 2);
    g.add_link(2, 3);
    g.add_link(3, 4);
    g.add_link(1, 4);

    std::map<int, std::map<std::string, double>> local;
    local[1] = {{"ab", 1}, {"v", 0}, {"dg", 1}, {"dgts", 15}, {"w:f1_2", 1}, {"pl1", 33.3}};
    local[2] = {{"ab", 1}, {"v", 1}};
    local[3] = {{"ab", 0}, {"v", 0}};
    local[4] = {{"ab", 1}, {"v", 1}, {"es", 1}};

    auto res = run_idp(g, local);
    REQUIRE(res.converged);
    const auto& v = res.views.at(3);
    CHECK(v.get(1, "ab") == 1.0);
    CHECK(v.get(1, "dgts") == 15.0);
    CHECK(v.get(1, "w:f1_2") == 1.0);
    CHECK(v.get(3, "ab") == 0.0);
    CHECK(v.get(4, "es") == 1.0);
    // Non-integer fields keep consensus noise below the reconstruction bound.
    CHECK(v.get(1, "pl1") == Catch::Approx(33.3).margin(1e-6));
}

TEST_CASE("round cap produces an explicit non-converged result") {
    CommGraph g;
    for (int i = 0; i < 8; ++i) g.add_agent(i);
    for (int i = 0; i + 1 < 8; ++i) g.add_link(i, i + 1);
    IdpConfig cfg;
    cfg.k_max = 3;
    auto res = run_idp(g, {}, cfg);
    CHECK_FALSE(res.converged);
    CHECK(res.rounds == 3);
    for (const auto& [id, v] : res.views) CHECK_FALSE(v.converged);
}

TEST_CASE("size-estimate trace starts at 1 and converges to the part size") {
    auto g = path_graph({1, 2, 3, 4});
    auto res = run_idp(g, {});
    REQUIRE(res.converged);
    const auto& series = res.size_estimate.at(1);
    REQUIRE(static_cast<int>(series.size()) == res.rounds + 1);
    CHECK(series.front() == Catch::Approx(1.0));
    CHECK(series.back() == Catch::Approx(4.0).margin(1e-6));

    auto rows = convergence_trace(res);
    CHECK(rows.size() == static_cast<std::size_t>(4 * (res.rounds + 1)));
    CHECK(rows[0].round == 0);
    CHECK(rows[0].agent_id == 1);
    CHECK(rows[3].agent_id == 4);
}

TEST_CASE("elapsed time is rounds times the configured per-round latency") {
    auto g = path_graph({1, 2, 3});
    IdpConfig cfg;
    cfg.iteration_latency_ms = 2.5;
    auto res = run_idp(g, {}, cfg);
    CHECK(res.elapsed_ms == Catch::Approx(2.5 * res.rounds));
}

TEST_CASE("discovery runs are bit-reproducible") {
    CommGraph g;
    for (int i : {1, 2, 3, 4, 5, 6}) g.add_agent(i);
    g.add_link(1, 2);
    g.add_link(2, 3);
    g.add_link(3, 1);
    g.add_link(4, 5);
    g.add_link(5, 6);
    std::map<int, std::map<std::string, double>> local;
    for (int i = 1; i <= 6; ++i) local[i] = {{"pl1", 3.7 * i}, {"pg", 0.1 * i * i}};

    auto a = run_idp(g, local);
    auto b = run_idp(g, local);
    REQUIRE(a.rounds == b.rounds);
    for (const auto& [id, va] : a.views) {
        const auto& vb = b.views.at(id);
        REQUIRE(va.global_state.size() == vb.global_state.size());
        for (const auto& [k, x] : va.global_state) CHECK(x == vb.global_state.at(k));
    }
    for (const auto& [id, sa] : a.size_estimate) CHECK(sa == b.size_estimate.at(id));
}

TEST_CASE("state for unavailable agents is rejected") {
    CommGraph g;
    g.add_agent(1);
    g.add_agent(2, false);
    CHECK_THROWS_AS(run_idp(g, {{2, {{"pl1", 1.0}}}}), std::invalid_argument);
}
