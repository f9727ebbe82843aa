#pragma once

// Command-line front end. Subcommands:
//   run        simulate a scenario end to end and emit reports
//   idp        run the discovery protocol once and report the parts
//   solve-ccp  build (and solve, or export as LP) one part's scheduling problem
//   verify     replay a result directory and re-check it byte for byte
//   compare    restored-load comparison of two result directories at one instant
//
// Exit codes: 0 success, 1 input error, 2 solver failure, 3 verification
// violations. Diagnostics go to standard error; machine-readable output goes
// to standard out.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridrestore/consensus.hpp"
#include "gridrestore/lp_format.hpp"
#include "gridrestore/model_builder.hpp"
#include "gridrestore/reports.hpp"
#include "gridrestore/rolling.hpp"
#include "gridrestore/scenario.hpp"
#include "gridrestore/solver.hpp"
#include "gridrestore/verify.hpp"

namespace gridrestore {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitVerify = 3;

namespace clidetail {

// Initial sim state advanced to `at_min`: every event due by then is applied
// and cut-off generators get their self-start, exactly as the rolling loop
// would do at that moment.
inline SimState state_at(const Scenario& sc, int at_min, std::vector<std::string>& warnings) {
    SimState s;
    s.clock = at_min;
    s.net = sc.net;
    s.state = sc.state;
    s.state.time_min = at_min;
    s.comm = sc.comm;
    s.pending = sc.events;
    std::stable_sort(s.pending.begin(), s.pending.end(),
                     [](const Event& a, const Event& b) { return a.time < b.time; });
    apply_due_events(s, warnings);
    isolated_dg_autostart(s);
    return s;
}

inline IdpResult discover(const SimState& s, const IdpConfig& cfg) {
    std::map<int, std::map<std::string, double>> local;
    for (int id : s.comm.available_agents())
        if (s.net.find_bus(id)) local[id] = publish_local_state(s.net, s.state, id);
    return run_idp(s.comm, local, cfg);
}

struct SolverFlags {
    std::string kind = "builtin";
    std::string cmd;

    // The environment variable wins over the flag so a deployment can retarget
    // every invocation without touching scripts.
    SolverChoice choice(std::vector<std::string>& errs) const {
        SolverChoice c;
        std::string env = external_command_from_env();
        std::string tmpl = env.empty() ? cmd : env;
        if (kind == "external") {
            if (tmpl.empty()) {
                errs.push_back("external solver selected but no command given (use --solver-cmd or " +
                               std::string(kSolverCmdEnvVar) + ")");
                return c;
            }
            c.kind = SolverChoice::Kind::external;
            c.external.command_template = tmpl;
        }
        return c;
    }
};

inline void add_solver_flags(CLI::App* cmd, SolverFlags& f) {
    cmd->add_option("--solver", f.kind, "MILP backend: builtin or external")
        ->check(CLI::IsMember({"builtin", "external"}));
    cmd->add_option("--solver-cmd", f.cmd,
                    "external solver command template with {lp} and {sol} placeholders");
}

inline std::string json_line(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

inline nlohmann::ordered_json run_record(const Scenario& sc, const SolverFlags& sf, unsigned seed) {
    nlohmann::ordered_json rec;
    rec["scenario"] = scenario_to_json(sc);
    rec["options"] = nlohmann::ordered_json{{"solver", sf.kind}, {"solver_cmd", sf.cmd}, {"seed", seed}};
    return rec;
}

inline int tally_violations(const Timeline& tl) {
    int n = 0;
    for (const auto& m : tl.moments)
        for (const auto& c : m.ccps) n += c.verify_violations;
    return n;
}

inline bool any_solver_failure(const Timeline& tl, bool& any_scheduled) {
    bool failed = false;
    any_scheduled = false;
    for (const auto& m : tl.moments)
        for (const auto& c : m.ccps) {
            if (c.scheduled) any_scheduled = true;
            if (c.note.rfind("solve", 0) == 0) failed = true;
        }
    return failed;
}

// ---- run ------------------------------------------------------------------

struct RunArgs {
    std::string scenario;
    int horizon_min = -1, control_min = -1, step_min = -1, end_min = -1;
    SolverFlags solver;
    std::string out;
    unsigned seed = 0;
};

inline int cmd_run(const RunArgs& a) {
    Scenario sc;
    try {
        sc = load_scenario(a.scenario);
    } catch (const ScenarioError& e) {
        for (const auto& m : e.errors) std::cerr << "error: " << m << "\n";
        return kExitInput;
    }
    if (a.horizon_min > 0) sc.grid.horizon_min = a.horizon_min;
    if (a.control_min > 0) sc.grid.control_min = a.control_min;
    if (a.step_min > 0) sc.grid.step_min = a.step_min;
    if (a.end_min > 0) sc.end_min = a.end_min;

    std::vector<std::string> errs;
    RunOptions opt = run_options_for(sc);
    opt.limits.seed = a.seed;
    opt.solver = a.solver.choice(errs);
    if (!errs.empty()) {
        for (const auto& m : errs) std::cerr << "error: " << m << "\n";
        return kExitInput;
    }

    Timeline tl;
    try {
        tl = run_simulation(sc.net, sc.state, sc.comm, sc.events, opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }

    if (!a.out.empty()) {
        try {
            emit_reports(tl, a.out);
            std::ofstream rj(std::filesystem::path(a.out) / "run.json", std::ios::binary);
            if (!rj) throw std::runtime_error("cannot write run.json");
            rj << json_line(run_record(sc, a.solver, a.seed));
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitInput;
        }
    }

    bool any_scheduled = false;
    bool failed = any_solver_failure(tl, any_scheduled);
    int violations = tally_violations(tl);

    nlohmann::ordered_json out;
    out["scenario"] = sc.name;
    out["moments"] = tl.moments.size();
    out["warnings"] = tl.warnings.size();
    out["verify_violations"] = violations;
    if (!tl.rows.empty()) out["final"] = aggregate_to_json(tl.rows.back());
    if (!a.out.empty()) out["out"] = a.out;
    std::cout << json_line(out);
    for (const auto& w : tl.warnings) std::cerr << "warning: " << w << "\n";

    if (violations > 0) return kExitVerify;
    if (failed && !any_scheduled) return kExitSolver;
    return kExitOk;
}

// ---- idp ------------------------------------------------------------------

struct IdpArgs {
    std::string scenario;
    int at_min = std::numeric_limits<int>::min();
    double tol = -1;
    int max_iter = -1;
    std::string out;
};

inline int cmd_idp(const IdpArgs& a) {
    Scenario sc;
    try {
        sc = load_scenario(a.scenario);
    } catch (const ScenarioError& e) {
        for (const auto& m : e.errors) std::cerr << "error: " << m << "\n";
        return kExitInput;
    }
    int at = a.at_min == std::numeric_limits<int>::min() ? sc.grid.t_c : a.at_min;
    IdpConfig cfg = sc.idp;
    if (a.tol > 0) cfg.tol = a.tol;
    if (a.max_iter > 0) cfg.k_max = a.max_iter;

    std::vector<std::string> warnings;
    SimState s;
    IdpResult idp;
    try {
        s = state_at(sc, at, warnings);
        idp = discover(s, cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }

    std::set<std::vector<int>> parts;
    for (const auto& [id, view] : idp.views) parts.insert(view.members);

    nlohmann::ordered_json out;
    out["t_c"] = at;
    out["iterations"] = idp.rounds;
    out["elapsed_ms"] = idp.elapsed_ms;
    out["converged"] = idp.converged;
    nlohmann::ordered_json ccps = nlohmann::ordered_json::array();
    for (const auto& members : parts) {
        const CcpView* view = nullptr;
        for (const auto& [id, v] : idp.views)
            if (v.members == members) {
                view = &v;
                break;
            }
        ccps.push_back(nlohmann::ordered_json{{"members", members},
                                              {"agent_count", view ? view->agent_count : 0}});
    }
    out["ccps"] = std::move(ccps);
    std::cout << json_line(out);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

    if (!a.out.empty()) {
        try {
            std::filesystem::create_directories(a.out);
            auto write = [&](const std::string& name, const std::string& content) {
                std::ofstream f(std::filesystem::path(a.out) / name, std::ios::binary);
                if (!f) throw std::runtime_error("cannot write " + name);
                f << content;
            };
            std::string cost = "t_c_min,iterations,elapsed_ms,converged\n" + std::to_string(at) + "," +
                               std::to_string(idp.rounds) + "," + fmt_num(idp.elapsed_ms) + "," +
                               (idp.converged ? "1" : "0") + "\n";
            write("consensus_cost.csv", cost);
            write("consensus_trace_" + std::to_string(at) + ".csv",
                  render_trace_csv(convergence_trace(idp)));
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitInput;
        }
    }
    return kExitOk;
}

// ---- solve-ccp ------------------------------------------------------------

struct SolveCcpArgs {
    std::string scenario;
    int at_min = std::numeric_limits<int>::min();
    int ccp = 0;
    std::string export_lp;
    SolverFlags solver;
};

inline int cmd_solve_ccp(const SolveCcpArgs& a) {
    Scenario sc;
    try {
        sc = load_scenario(a.scenario);
    } catch (const ScenarioError& e) {
        for (const auto& m : e.errors) std::cerr << "error: " << m << "\n";
        return kExitInput;
    }
    int at = a.at_min == std::numeric_limits<int>::min() ? sc.grid.t_c : a.at_min;

    std::vector<std::string> warnings;
    SimState s;
    IdpResult idp;
    try {
        s = state_at(sc, at, warnings);
        idp = discover(s, sc.idp);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    auto groups = rollingdetail::group_ccps(idp);
    if (a.ccp < 0 || a.ccp >= static_cast<int>(groups.size())) {
        std::cerr << "error: part index " << a.ccp << " out of range (discovery found "
                  << groups.size() << " parts)\n";
        return kExitInput;
    }

    TimeGrid grid = sc.grid;
    grid.t_c = at;
    ObservedCcp obs = observed_from_view(*groups[a.ccp].second, s.net);
    BuildResult br;
    try {
        br = build_model(obs, s.net, grid, sc.milp);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }

    nlohmann::ordered_json out;
    out["t_c"] = at;
    out["ccp"] = a.ccp;
    out["members"] = groups[a.ccp].first;
    out["buses"] = br.buses.size();
    out["variables"] = br.milp.vars.size();
    out["rows"] = br.milp.cons.size();

    if (!a.export_lp.empty()) {
        std::ofstream f(a.export_lp, std::ios::binary);
        if (!f) {
            std::cerr << "error: cannot write " << a.export_lp << "\n";
            return kExitInput;
        }
        f << write_lp(br.milp);
        out["lp"] = a.export_lp;
        std::cout << json_line(out);
        return kExitOk;
    }

    std::vector<std::string> errs;
    SolverChoice choice = a.solver.choice(errs);
    if (!errs.empty()) {
        for (const auto& m : errs) std::cerr << "error: " << m << "\n";
        return kExitInput;
    }
    Solution sol;
    try {
        sol = solve(br.milp, {}, choice);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
    out["status"] = to_string(sol.status);
    if (sol.status != SolveStatus::optimal && sol.status != SolveStatus::feasible) {
        std::cout << json_line(out);
        std::cerr << "error: no plan (solver status " << to_string(sol.status) << ")\n";
        return kExitSolver;
    }

    Schedule sch = extract_schedule(br, sol, grid, s.net);
    auto rep = verify_schedule(sch, obs, s.net, grid, sc.milp);
    out["objective"] = sol.objective;
    out["points"] = sch.points.size();
    out["violations"] = rep.violations.size();
    if (!sch.points.empty()) out["final_restored_kw"] = sch.points.back().total_pl();
    std::cout << json_line(out);
    for (const auto& v : rep.violations) std::cerr << "violation: " << v.where() << "\n";
    return rep.ok() ? kExitOk : kExitVerify;
}

// ---- verify ---------------------------------------------------------------

struct VerifyArgs {
    std::string result;
};

inline int cmd_verify(const VerifyArgs& a) {
    namespace fs = std::filesystem;
    std::vector<std::string> errs;
    std::string rec_text = read_text_file((fs::path(a.result) / "run.json").string(), errs);
    if (!errs.empty()) {
        for (const auto& m : errs) std::cerr << "error: " << m << "\n";
        return kExitInput;
    }
    nlohmann::ordered_json rec;
    try {
        rec = nlohmann::ordered_json::parse(rec_text);
    } catch (const std::exception& e) {
        std::cerr << "error: run.json: " << e.what() << "\n";
        return kExitInput;
    }
    if (!rec.is_object() || !rec.contains("scenario") || !rec.contains("options")) {
        std::cerr << "error: run.json: missing scenario/options\n";
        return kExitInput;
    }
    Scenario sc = scenario_from_json(rec.at("scenario"), errs);
    if (!errs.empty()) {
        for (const auto& m : errs) std::cerr << "error: run.json: " << m << "\n";
        return kExitInput;
    }

    SolverFlags sf;
    unsigned seed = 0;
    try {
        const auto& o = rec.at("options");
        sf.kind = o.value("solver", "builtin");
        sf.cmd = o.value("solver_cmd", "");
        seed = o.value("seed", 0u);
    } catch (const std::exception& e) {
        std::cerr << "error: run.json options: " << e.what() << "\n";
        return kExitInput;
    }
    RunOptions opt = run_options_for(sc);
    opt.limits.seed = seed;
    opt.solver = sf.choice(errs);
    if (!errs.empty()) {
        for (const auto& m : errs) std::cerr << "error: " << m << "\n";
        return kExitInput;
    }

    Timeline tl;
    try {
        tl = run_simulation(sc.net, sc.state, sc.comm, sc.events, opt);
    } catch (const std::exception& e) {
        std::cerr << "error: replay failed: " << e.what() << "\n";
        return kExitInput;
    }

    int mismatches = 0;
    for (const auto& f : render_reports(tl)) {
        std::vector<std::string> ferrs;
        std::string on_disk = read_text_file((fs::path(a.result) / f.name).string(), ferrs);
        if (!ferrs.empty()) {
            std::cerr << "mismatch: " << f.name << ": missing from the result directory\n";
            ++mismatches;
        } else if (on_disk != f.content) {
            std::cerr << "mismatch: " << f.name << ": differs from the replayed run\n";
            ++mismatches;
        }
    }
    int violations = tally_violations(tl);

    nlohmann::ordered_json out;
    out["result"] = a.result;
    out["files_checked"] = render_reports(tl).size();
    out["mismatches"] = mismatches;
    out["verify_violations"] = violations;
    std::cout << json_line(out);
    return (mismatches == 0 && violations == 0) ? kExitOk : kExitVerify;
}

// ---- compare --------------------------------------------------------------

struct CompareArgs {
    std::vector<std::string> results;
    int at_min = 0;
};

inline int cmd_compare(const CompareArgs& a) {
    namespace fs = std::filesystem;
    std::vector<AggregateRow> rows[2];
    for (int i = 0; i < 2; ++i) {
        std::vector<std::string> errs;
        std::string text = read_text_file((fs::path(a.results[i]) / "timeline.csv").string(), errs);
        auto parsed = parse_timeline_csv(text, errs);
        if (!errs.empty()) {
            for (const auto& m : errs) std::cerr << "error: " << a.results[i] << ": " << m << "\n";
            return kExitInput;
        }
        rows[i] = std::move(parsed);
    }
    std::optional<AggregateRow> at[2];
    for (int i = 0; i < 2; ++i) {
        for (const auto& r : rows[i])
            if (r.t == a.at_min) at[i] = r;
        if (!at[i]) {
            std::cerr << "error: " << a.results[i] << ": no timeline row at minute " << a.at_min
                      << "\n";
            return kExitInput;
        }
    }
    std::cout << json_line(comparison_block(a.at_min, *at[0], *at[1]));
    return kExitOk;
}

}  // namespace clidetail

inline int cli_main(int argc, const char* const* argv) {
    CLI::App app{"decentralized blackout-restoration simulator"};
    app.require_subcommand(1);

    clidetail::RunArgs run_args;
    auto* run = app.add_subcommand("run", "simulate a scenario and emit reports");
    run->add_option("--scenario", run_args.scenario, "scenario file or built-in name")->required();
    run->add_option("--horizon-min", run_args.horizon_min, "override the look-ahead horizon");
    run->add_option("--control-min", run_args.control_min, "override the re-scheduling period");
    run->add_option("--step-min", run_args.step_min, "override the interval length");
    run->add_option("--end-min", run_args.end_min, "override the simulation end");
    clidetail::add_solver_flags(run, run_args.solver);
    run->add_option("--out", run_args.out, "directory for reports");
    run->add_option("--seed", run_args.seed, "solver seed recorded for reproducibility");

    clidetail::IdpArgs idp_args;
    auto* idp = app.add_subcommand("idp", "run the discovery protocol once");
    idp->add_option("--scenario", idp_args.scenario, "scenario file or built-in name")->required();
    idp->add_option("--at-min", idp_args.at_min, "instant to discover at (default: scenario start)");
    idp->add_option("--tol", idp_args.tol, "convergence threshold override");
    idp->add_option("--max-iter", idp_args.max_iter, "round cap override");
    idp->add_option("--out", idp_args.out, "directory for discovery CSV files");

    clidetail::SolveCcpArgs solve_args;
    auto* scc = app.add_subcommand("solve-ccp", "schedule one discovered part");
    scc->add_option("--scenario", solve_args.scenario, "scenario file or built-in name")->required();
    scc->add_option("--at-min", solve_args.at_min, "instant to schedule at (default: scenario start)");
    scc->add_option("--ccp", solve_args.ccp, "part index, ordered by smallest member (default 0)");
    scc->add_option("--export-lp", solve_args.export_lp, "write the model as an LP file and stop");
    clidetail::add_solver_flags(scc, solve_args.solver);

    clidetail::VerifyArgs verify_args;
    auto* ver = app.add_subcommand("verify", "replay a result directory and re-check it");
    ver->add_option("--result", verify_args.result, "result directory written by run --out")->required();

    clidetail::CompareArgs cmp_args;
    auto* cmp = app.add_subcommand("compare", "compare two result directories at one instant");
    cmp->add_option("--result", cmp_args.results, "two result directories")->expected(2)->required();
    cmp->add_option("--at-min", cmp_args.at_min, "instant to compare at")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInput;
    }

    if (run->parsed()) return clidetail::cmd_run(run_args);
    if (idp->parsed()) return clidetail::cmd_idp(idp_args);
    if (scc->parsed()) return clidetail::cmd_solve_ccp(solve_args);
    if (ver->parsed()) return clidetail::cmd_verify(verify_args);
    if (cmp->parsed()) return clidetail::cmd_compare(cmp_args);
    return kExitInput;
}

}  // namespace gridrestore
