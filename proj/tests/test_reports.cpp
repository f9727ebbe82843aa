#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gridrestore/reports.hpp"
#include "gridrestore/scenario.hpp"

using namespace gridrestore;

namespace {

Timeline run_builtin(const std::string& name) {
    Scenario s = load_scenario(name);
    return run_simulation(s.net, s.state, s.comm, s.events, run_options_for(s));
}

const Timeline& pair2_timeline() {
    static Timeline tl = run_builtin("pair2");
    return tl;
}

std::string content_of(const std::vector<RenderedReport>& reports, const std::string& name) {
    for (const auto& r : reports)
        if (r.name == name) return r.content;
    FAIL("report " << name << " not rendered");
    return {};
}

}  // namespace

TEST_CASE("numbers render compactly with no negative zero") {
    CHECK(fmt_num(0.0) == "0");
    CHECK(fmt_num(-0.0) == "0");
    CHECK(fmt_num(400.55) == "400.55");
    CHECK(fmt_num(-12.5) == "-12.5");
    CHECK(fmt_num(1e-9) == "1e-09");
    // Ten significant digits survive a round trip at report precision.
    CHECK(std::stod(fmt_num(123.4567891)) == Catch::Approx(123.4567891).epsilon(1e-12));
}

TEST_CASE("an empty timeline renders headers only") {
    Timeline tl;
    auto reports = render_reports(tl);

    CHECK(content_of(reports, "timeline.csv") == "t_min,sum_pg_kw,sum_pl1_kw,sum_pl2_kw,sum_pl3_kw\n");
    CHECK(content_of(reports, "steps.csv") == "t_min,sum_pg_kw,sum_pl1_kw,sum_pl2_kw,sum_pl3_kw\n");
    CHECK(content_of(reports, "consensus_cost.csv") == "t_c_min,iterations,elapsed_ms,converged\n");
    for (const auto& r : reports) CHECK(r.name.rfind("consensus_trace_", 0) != 0);

    auto doc = nlohmann::json::parse(content_of(reports, "summary.json"));
    CHECK(doc["moments"].empty());
    CHECK(doc["aggregates"].empty());
    CHECK(doc["warnings"].empty());
}

TEST_CASE("rendering is a pure function of the timeline") {
    const Timeline& tl = pair2_timeline();
    auto a = render_reports(tl);
    auto b = render_reports(tl);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].name == b[i].name);
        CHECK(a[i].content == b[i].content);
    }
}

TEST_CASE("a run on a dark system reports zero aggregates at the first moment") {
    const Timeline& tl = pair2_timeline();
    auto reports = render_reports(tl);

    std::istringstream in(content_of(reports, "timeline.csv"));
    std::string header, first;
    REQUIRE(std::getline(in, header));
    REQUIRE(std::getline(in, first));
    CHECK(first == "0,0,0,0,0");

    auto doc = nlohmann::json::parse(content_of(reports, "summary.json"));
    REQUIRE_FALSE(doc["aggregates"].empty());
    CHECK(doc["aggregates"][0]["total_restored_kw"] == 0.0);
    CHECK(doc["final"]["total_restored_kw"].get<double>() > 0.0);
}

TEST_CASE("every scheduling moment leaves one trace file and one cost row") {
    const Timeline& tl = pair2_timeline();
    auto reports = render_reports(tl);

    std::size_t traces = 0;
    for (const auto& r : reports)
        if (r.name.rfind("consensus_trace_", 0) == 0) ++traces;
    CHECK(traces == tl.moments.size());

    std::istringstream in(content_of(reports, "consensus_cost.csv"));
    std::string line;
    std::size_t rows = 0;
    std::getline(in, line);  // header
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == tl.moments.size());
}

TEST_CASE("emitted files hit the disk byte-for-byte") {
    const Timeline& tl = pair2_timeline();
    auto dir = std::filesystem::temp_directory_path() / "gridrestore_test_reports";
    std::filesystem::remove_all(dir);
    emit_reports(tl, dir.string());

    for (const auto& r : render_reports(tl)) {
        std::vector<std::string> errs;
        std::string disk = read_text_file((dir / r.name).string(), errs);
        CHECK(errs.empty());
        CHECK(disk == r.content);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("timeline csv parses back to the same rows") {
    std::vector<AggregateRow> rows = {{0, 0, 0, 0, 0}, {10, 400.55, 200, 100, 100}, {30, 12.125, 0, 6.5, 5.625}};
    std::vector<std::string> errs;
    auto back = parse_timeline_csv(render_timeline_csv(rows), errs);
    REQUIRE(errs.empty());
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].t == rows[i].t);
        CHECK(back[i].sum_pg == rows[i].sum_pg);
        CHECK(back[i].sum_pl1 == rows[i].sum_pl1);
        CHECK(back[i].sum_pl2 == rows[i].sum_pl2);
        CHECK(back[i].sum_pl3 == rows[i].sum_pl3);
    }

    errs.clear();
    parse_timeline_csv("not,a,timeline\n", errs);
    CHECK_FALSE(errs.empty());
}

TEST_CASE("comparison block carries both runs and the advantage of the first") {
    AggregateRow a{90, 500, 300, 150, 50};
    AggregateRow b{90, 400, 250, 120, 30};
    auto block = comparison_block(90, a, b);
    CHECK(block["at_min"] == 90);
    REQUIRE(block["runs"].size() == 2);
    CHECK(block["runs"][0]["total_restored_kw"] == 500.0);
    CHECK(block["runs"][1]["total_restored_kw"] == 400.0);
    CHECK(block["delta_total_kw"] == 100.0);

    const Timeline& tl = pair2_timeline();
    auto summary = render_summary_json(tl, &block);
    auto doc = nlohmann::json::parse(summary);
    CHECK(doc["comparison"]["delta_total_kw"] == 100.0);
}
