#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "gridrestore/consensus.hpp"
#include "gridrestore/model_builder.hpp"
#include "gridrestore/scenario.hpp"

using namespace gridrestore;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path temp_file(const std::string& stem) {
    return std::filesystem::temp_directory_path() / ("gridrestore_test_" + stem + ".json");
}

// Discovery partition of a scenario's communication graph: the distinct member
// sets reconstructed by the agents themselves.
std::set<std::vector<int>> discovered_parts(const Scenario& s) {
    std::map<int, std::map<std::string, double>> local;
    for (int id : s.comm.available_agents())
        if (s.net.find_bus(id)) local[id] = publish_local_state(s.net, s.state, id);
    IdpResult res = run_idp(s.comm, local, s.idp);
    std::set<std::vector<int>> parts;
    for (const auto& [id, view] : res.views) {
        CHECK(view.converged);
        parts.insert(view.members);
    }
    return parts;
}

}  // namespace

TEST_CASE("every built-in scenario loads, validates, and round-trips byte-for-byte") {
    for (const auto& name : builtin_scenario_names()) {
        INFO("scenario " << name);
        Scenario s = load_scenario(name);
        CHECK(s.name == name);
        CHECK(scenario_errors(s).empty());

        std::string once = scenario_to_string(s);
        std::vector<std::string> errs;
        Scenario back = scenario_from_string(once, errs);
        CHECK(errs.empty());
        CHECK(scenario_to_string(back) == once);
    }
}

TEST_CASE("bundled scenario files match the built-in definitions byte-for-byte") {
    for (const auto& name : builtin_scenario_names()) {
        INFO("scenario " << name);
        std::string bundled = slurp(std::string(GRIDRESTORE_SOURCE_DIR) + "/scenarios/" + name + ".json");
        CHECK(bundled == scenario_to_string(*builtin_scenario(name)));
    }
}

TEST_CASE("scenarios load from explicit file paths") {
    auto path = temp_file("pair2_copy");
    save_scenario(*builtin_scenario("pair2"), path.string());
    Scenario s = load_scenario(path.string());
    CHECK(s.name == "pair2");
    CHECK(s.net.buses.size() == 2);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(load_scenario("no_such_scenario_anywhere"), ScenarioError);
}

TEST_CASE("unknown keys are rejected with their location") {
    auto doc = scenario_to_json(*builtin_scenario("pair2"));

    SECTION("top level") {
        doc["surprise"] = 1;
        std::vector<std::string> errs;
        scenario_from_json(doc, errs);
        REQUIRE_FALSE(errs.empty());
        CHECK(errs.front().find("surprise") != std::string::npos);
    }
    SECTION("inside a bus record") {
        doc["network"]["buses"][0]["colour"] = "red";
        std::vector<std::string> errs;
        scenario_from_json(doc, errs);
        REQUIRE_FALSE(errs.empty());
        CHECK(errs.front().find("colour") != std::string::npos);
        CHECK(errs.front().find("buses[0]") != std::string::npos);
    }
    SECTION("inside config") {
        doc["config"]["fancy_mode"] = true;
        std::vector<std::string> errs;
        scenario_from_json(doc, errs);
        REQUIRE_FALSE(errs.empty());
        CHECK(errs.front().find("fancy_mode") != std::string::npos);
    }
}

TEST_CASE("unsupported schema versions are rejected") {
    auto doc = scenario_to_json(*builtin_scenario("pair2"));
    doc["version"] = 2;
    std::vector<std::string> errs;
    scenario_from_json(doc, errs);
    REQUIRE_FALSE(errs.empty());
    CHECK(errs.front().find("version") != std::string::npos);
}

TEST_CASE("structural integrity errors carry context") {
    SECTION("feeder endpoint missing from the bus list") {
        auto doc = scenario_to_json(*builtin_scenario("pair2"));
        doc["network"]["feeders"][0]["to"] = 99;
        std::vector<std::string> errs;
        scenario_from_json(doc, errs);
        CHECK_FALSE(errs.empty());
    }
    SECTION("event at an unknown bus") {
        auto doc = scenario_to_json(*builtin_scenario("ieee123_mod"));
        doc["events"][0]["dg"]["bus"] = 999;
        std::vector<std::string> errs;
        scenario_from_json(doc, errs);
        CHECK_FALSE(errs.empty());
    }
    SECTION("end instant not aligned to the step") {
        auto doc = scenario_to_json(*builtin_scenario("pair2"));
        doc["config"]["time"]["end_min"] = 17;
        std::vector<std::string> errs;
        scenario_from_json(doc, errs);
        CHECK_FALSE(errs.empty());
    }
}

TEST_CASE("the 123-bus case partitions into three parts of 13, 10, and 6 agents") {
    Scenario s = load_scenario("ieee123_mod");
    CHECK(validate_network(s.net).empty());
    CHECK(s.net.buses.size() == 123);

    auto parts = discovered_parts(s);
    REQUIRE(parts.size() == 3);
    std::multiset<std::size_t> sizes;
    for (const auto& p : parts) sizes.insert(p.size());
    CHECK(sizes == std::multiset<std::size_t>{6, 10, 13});

    // Each discovered part hosts exactly one of the pre-positioned resources.
    std::set<BusId> resource_buses = {8, 57, 61, 105};
    for (const auto& p : parts) {
        int hits = 0;
        for (int b : p)
            if (resource_buses.count(b)) ++hits;
        CHECK(hits >= 1);
    }
}

TEST_CASE("the seven-agent line with broken links splits into the documented parts") {
    Scenario s = load_scenario("fig3_mas");
    auto avail = s.comm.available_agents();
    CHECK(std::find(avail.begin(), avail.end(), 7) == avail.end());

    auto parts = discovered_parts(s);
    REQUIRE(parts.size() == 2);
    CHECK(parts.count({1, 2, 3, 4}) == 1);
    CHECK(parts.count({5, 6}) == 1);
}

TEST_CASE("generator and storage data survive the round trip") {
    Scenario s = load_scenario("ieee123_mod");

    const EsUnit* es = s.net.es_at(61);
    REQUIRE(es != nullptr);
    CHECK(es->capacity_kwh == 200.0);
    CHECK(es->p_ch_max_kw == 50.0);
    CHECK(es->p_dis_max_kw == 50.0);
    CHECK(es->eta_ch == 0.85);
    CHECK(es->eta_dis == 1.15);
    CHECK(es->soc_min == 0.05);
    CHECK(es->soc_max == 0.95);
    CHECK(es->q_capability.size() == 5);
    CHECK(s.state.soc.at(61) == 0.8);

    const DgUnit* dg = s.net.dg_at(57);
    REQUIRE(dg != nullptr);
    CHECK(dg->p_max_kw == 300.0);
    CHECK(dg->t_syn_min == 15);
    CHECK(s.state.dg_start.at(57) == 0);

    std::map<int, std::vector<BusId>> discovered_at;
    for (const auto& ev : s.events)
        if (ev.kind == EventKind::dg_discovered) discovered_at[ev.time].push_back(ev.dg.bus);
    REQUIRE(discovered_at.size() == 2);
    CHECK(discovered_at.at(30) == std::vector<BusId>{44});
    std::vector<BusId> later = discovered_at.at(60);
    std::sort(later.begin(), later.end());
    CHECK(later == std::vector<BusId>{23, 78, 89});

    std::vector<std::string> errs;
    Scenario back = scenario_from_string(scenario_to_string(s), errs);
    REQUIRE(errs.empty());
    const EsUnit* es2 = back.net.es_at(61);
    REQUIRE(es2 != nullptr);
    CHECK(es2->q_capability.size() == 5);
    CHECK(back.events.size() == s.events.size());
}

TEST_CASE("serialized form omits per-bus defaults") {
    auto doc = scenario_to_json(*builtin_scenario("pair2"));
    const auto& bus0 = doc["network"]["buses"][0];
    CHECK_FALSE(bus0.contains("priority_class"));
    CHECK_FALSE(bus0.contains("lambda_min"));
    CHECK_FALSE(bus0.contains("has_agent"));
    CHECK(doc.contains("config"));
    CHECK(doc["version"] == kScenarioVersion);
}

TEST_CASE("run options inherit the scenario's clock and solver settings") {
    Scenario s = load_scenario("path13");
    RunOptions opt = run_options_for(s);
    CHECK(opt.grid.t_c == 0);
    CHECK(opt.grid.step_min == 15);
    CHECK(opt.grid.horizon_min == 60);
    CHECK(opt.end_min == 60);
    CHECK(opt.milp.pwl_segments == 1);
}
