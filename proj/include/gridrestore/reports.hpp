#pragma once

// Report emission: turns a finished Timeline into CSV/JSON files for plotting
// and inspection. Rendering is a pure function of the timeline — identical
// runs produce byte-identical files — with fixed column order, fixed number
// formatting, and newline-terminated lines throughout.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gridrestore/rolling.hpp"

namespace gridrestore {

// Shortest exact-looking decimal rendering: integers stay integers, fractions
// keep up to ten significant digits. Used for every number in CSV output.
inline std::string fmt_num(double v) {
    if (v == 0) v = 0;  // normalize -0
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

struct RenderedReport {
    std::string name;
    std::string content;
};

inline std::string render_timeline_csv(const std::vector<AggregateRow>& rows) {
    std::string out = "t_min,sum_pg_kw,sum_pl1_kw,sum_pl2_kw,sum_pl3_kw\n";
    for (const auto& r : rows)
        out += std::to_string(r.t) + "," + fmt_num(r.sum_pg) + "," + fmt_num(r.sum_pl1) + "," +
               fmt_num(r.sum_pl2) + "," + fmt_num(r.sum_pl3) + "\n";
    return out;
}

inline std::string render_consensus_cost_csv(const Timeline& tl) {
    std::string out = "t_c_min,iterations,elapsed_ms,converged\n";
    for (const auto& m : tl.moments)
        out += std::to_string(m.cost.t_c) + "," + std::to_string(m.cost.iterations) + "," +
               fmt_num(m.cost.elapsed_ms) + "," + (m.cost.converged ? "1" : "0") + "\n";
    return out;
}

inline std::string render_trace_csv(const std::vector<TraceRow>& trace) {
    std::string out = "round,agent_id,inverse_indicator\n";
    for (const auto& r : trace)
        out += std::to_string(r.round) + "," + std::to_string(r.agent_id) + "," +
               fmt_num(r.size_estimate) + "\n";
    return out;
}

inline nlohmann::ordered_json aggregate_to_json(const AggregateRow& r) {
    nlohmann::ordered_json o;
    o["t_min"] = r.t;
    o["sum_pg_kw"] = r.sum_pg;
    o["sum_pl1_kw"] = r.sum_pl1;
    o["sum_pl2_kw"] = r.sum_pl2;
    o["sum_pl3_kw"] = r.sum_pl3;
    o["total_restored_kw"] = r.sum_pl1 + r.sum_pl2 + r.sum_pl3;
    return o;
}

// Side-by-side restored-load comparison of two runs at one instant: per-class
// sums, totals, and the first run's advantage.
inline nlohmann::ordered_json comparison_block(int at_min, const AggregateRow& a,
                                               const AggregateRow& b) {
    nlohmann::ordered_json o;
    o["at_min"] = at_min;
    o["runs"] = nlohmann::ordered_json::array({aggregate_to_json(a), aggregate_to_json(b)});
    double ta = a.sum_pl1 + a.sum_pl2 + a.sum_pl3;
    double tb = b.sum_pl1 + b.sum_pl2 + b.sum_pl3;
    o["delta_total_kw"] = ta - tb;
    return o;
}

inline std::optional<AggregateRow> aggregate_at(const Timeline& tl, int t) {
    for (const auto& r : tl.steps)
        if (r.t == t) return r;
    for (const auto& r : tl.rows)
        if (r.t == t) return r;
    return std::nullopt;
}

inline std::string render_summary_json(const Timeline& tl,
                                       const nlohmann::ordered_json* comparison = nullptr) {
    nlohmann::ordered_json doc;
    nlohmann::ordered_json moments = nlohmann::ordered_json::array();
    for (const auto& m : tl.moments) {
        nlohmann::ordered_json mo;
        mo["t_c"] = m.t_c;
        mo["consensus"] = nlohmann::ordered_json{{"iterations", m.cost.iterations},
                                                 {"elapsed_ms", m.cost.elapsed_ms},
                                                 {"converged", m.cost.converged}};
        nlohmann::ordered_json ccps = nlohmann::ordered_json::array();
        for (const auto& c : m.ccps) {
            nlohmann::ordered_json co;
            co["index"] = c.index;
            co["members"] = c.members;
            co["scheduler"] = c.scheduler;
            co["scheduled"] = c.scheduled;
            co["idle"] = c.idle;
            co["extended"] = c.extended;
            co["verify_violations"] = c.verify_violations;
            if (!c.note.empty()) co["note"] = c.note;
            ccps.push_back(std::move(co));
        }
        mo["ccps"] = std::move(ccps);
        moments.push_back(std::move(mo));
    }
    doc["moments"] = std::move(moments);
    nlohmann::ordered_json aggs = nlohmann::ordered_json::array();
    for (const auto& r : tl.rows) aggs.push_back(aggregate_to_json(r));
    doc["aggregates"] = std::move(aggs);
    if (!tl.rows.empty()) doc["final"] = aggregate_to_json(tl.rows.back());
    doc["warnings"] = tl.warnings;
    if (comparison) doc["comparison"] = *comparison;
    return doc.dump(2) + "\n";
}

// Every file a run produces, in a fixed order. Passing a second timeline adds
// its restored-load comparison at `compare_at_min` to summary.json.
inline std::vector<RenderedReport> render_reports(const Timeline& tl,
                                                  const Timeline* other = nullptr,
                                                  int compare_at_min = 0) {
    std::vector<RenderedReport> files;
    files.push_back({"timeline.csv", render_timeline_csv(tl.rows)});
    files.push_back({"steps.csv", render_timeline_csv(tl.steps)});
    files.push_back({"consensus_cost.csv", render_consensus_cost_csv(tl)});
    for (const auto& m : tl.moments)
        if (!m.trace.empty())
            files.push_back({"consensus_trace_" + std::to_string(m.t_c) + ".csv",
                             render_trace_csv(m.trace)});
    nlohmann::ordered_json cmp;
    bool have_cmp = false;
    if (other) {
        auto a = aggregate_at(tl, compare_at_min);
        auto b = aggregate_at(*other, compare_at_min);
        if (a && b) {
            cmp = comparison_block(compare_at_min, *a, *b);
            have_cmp = true;
        }
    }
    files.push_back({"summary.json", render_summary_json(tl, have_cmp ? &cmp : nullptr)});
    return files;
}

inline void emit_reports(const Timeline& tl, const std::string& dir,
                         const Timeline* other = nullptr, int compare_at_min = 0) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    for (const auto& f : render_reports(tl, other, compare_at_min)) {
        std::string path = (std::filesystem::path(dir) / f.name).string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("emit_reports: cannot write " + path);
        out << f.content;
        if (!out) throw std::runtime_error("emit_reports: write failed for " + path);
    }
}

// ---------------------------------------------------------------------------
// Reading emitted files back (used by the result-checking commands).

inline std::vector<AggregateRow> parse_timeline_csv(const std::string& text,
                                                    std::vector<std::string>& errs) {
    std::vector<AggregateRow> rows;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        errs.push_back("timeline: empty file");
        return rows;
    }
    if (line != "t_min,sum_pg_kw,sum_pl1_kw,sum_pl2_kw,sum_pl3_kw")
        errs.push_back("timeline: unexpected header '" + line + "'");
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        AggregateRow r;
        double t = 0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &t, &r.sum_pg, &r.sum_pl1, &r.sum_pl2,
                        &r.sum_pl3) != 5) {
            errs.push_back("timeline: malformed line " + std::to_string(lineno));
            continue;
        }
        r.t = static_cast<int>(t);
        rows.push_back(r);
    }
    return rows;
}

inline std::string read_text_file(const std::string& path, std::vector<std::string>& errs) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        errs.push_back("cannot open " + path);
        return {};
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace gridrestore
