#pragma once

// MILP solving strategies over MilpInstance:
//  - solve_bb: exact best-first branch and bound on binary variables over the
//    built-in simplex. Intended for small instances; guarded by a binary cap.
//  - enumerate_oracle: brute force over every assignment of the free binaries.
//    The reference answer for cross-checking solve_bb on tiny instances.
//  - solve_external: writes the LP file, shells out to a user-supplied solver
//    command, parses the solution file back, and re-validates every row.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

#include "gridrestore/lp_format.hpp"
#include "gridrestore/milp.hpp"
#include "gridrestore/simplex.hpp"

namespace gridrestore {

enum class SolveStatus { optimal, feasible, infeasible, unbounded, limit };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::feasible: return "feasible";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::limit: return "limit";
    }
    return "?";
}

struct Solution {
    SolveStatus status = SolveStatus::limit;
    double objective = 0.0;
    std::vector<double> x;  // by variable index; empty unless a point exists
    double gap = 0.0;
    long nodes = 0;
    double solve_seconds = 0.0;
    std::string message;

    double value(const MilpInstance& m, const std::string& name) const {
        int i = m.find_var(name);
        if (i < 0 || i >= static_cast<int>(x.size())) return 0.0;
        return x[i];
    }
};

struct SolverLimits {
    double time_limit_s = 600.0;
    long node_limit = 5'000'000;
    double mip_gap = 1e-6;
    unsigned seed = 0;        // recorded for reproducibility; the algorithms are deterministic
    int max_binaries = 60;    // solve_bb declines instances with more free binaries
    double int_tol = 1e-6;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace solverdetail {

inline std::vector<int> free_binaries(const MilpInstance& m) {
    std::vector<int> out;
    for (int j = 0; j < static_cast<int>(m.vars.size()); ++j)
        if (m.vars[j].kind == VarKind::binary && m.vars[j].lb < m.vars[j].ub) out.push_back(j);
    return out;
}

inline double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace solverdetail

// ---------------------------------------------------------------------------
// Exact branch and bound.

inline Solution solve_bb(const MilpInstance& m, const SolverLimits& lim = {}) {
    auto t0 = std::chrono::steady_clock::now();
    Solution sol;
    auto bins = solverdetail::free_binaries(m);
    if (static_cast<int>(bins.size()) > lim.max_binaries)
        throw std::invalid_argument("solve_bb: instance has " + std::to_string(bins.size()) +
                                    " free binaries, above the cap of " + std::to_string(lim.max_binaries));

    std::vector<double> lb0(m.vars.size()), ub0(m.vars.size());
    for (std::size_t j = 0; j < m.vars.size(); ++j) {
        lb0[j] = m.vars[j].lb;
        ub0[j] = m.vars[j].ub;
    }

    struct Node {
        double bound = 0.0;            // LP relaxation objective (upper bound)
        long id = 0;
        std::vector<std::pair<int, char>> fixes;
        std::vector<double> x;         // relaxation point
    };
    struct NodeOrder {
        bool operator()(const Node& a, const Node& b) const {
            if (a.bound != b.bound) return a.bound < b.bound;  // larger bound first
            return a.id > b.id;                                // then older node first
        }
    };

    auto solve_node = [&](const std::vector<std::pair<int, char>>& fixes, LpResult& out) {
        std::vector<double> lb = lb0, ub = ub0;
        for (auto [v, val] : fixes) {
            lb[v] = val;
            ub[v] = val;
        }
        out = solve_lp(m, lb, ub);
    };

    LpResult root;
    solve_node({}, root);
    if (root.status == LpStatus::infeasible) {
        sol.status = SolveStatus::infeasible;
        sol.solve_seconds = solverdetail::elapsed_s(t0);
        return sol;
    }
    if (root.status == LpStatus::unbounded) {
        sol.status = SolveStatus::unbounded;
        sol.solve_seconds = solverdetail::elapsed_s(t0);
        return sol;
    }
    if (root.status == LpStatus::iter_limit) {
        sol.status = SolveStatus::limit;
        sol.message = "root relaxation: " + root.message;
        sol.solve_seconds = solverdetail::elapsed_s(t0);
        return sol;
    }

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    long next_id = 0;
    open.push({root.objective, next_id++, {}, root.x});

    bool have_incumbent = false;
    double best_obj = -kInf;
    std::vector<double> best_x;
    bool limit_hit = false;
    std::string limit_msg;
    long nodes = 0;

    // Most-fractional branching; scanning ascending with a strict improvement
    // test leaves ties with the lowest variable index.
    auto fractional_binary = [&](const std::vector<double>& x) {
        int pick = -1;
        double best_frac = lim.int_tol;
        for (int j : bins) {
            double f = std::abs(x[j] - std::round(x[j]));
            if (f > best_frac + 1e-15) {
                best_frac = f;
                pick = j;
            }
        }
        return pick;
    };

    while (!open.empty()) {
        if (solverdetail::elapsed_s(t0) > lim.time_limit_s) {
            limit_hit = true;
            limit_msg = "time limit";
            break;
        }
        if (nodes >= lim.node_limit) {
            limit_hit = true;
            limit_msg = "node limit";
            break;
        }
        Node node = open.top();
        open.pop();
        ++nodes;

        double gap_abs = node.bound - best_obj;
        if (have_incumbent && gap_abs <= lim.mip_gap * std::max(1.0, std::abs(best_obj))) break;

        int branch_var = fractional_binary(node.x);
        if (branch_var < 0) {
            // Integral relaxation: polish by re-solving with binaries pinned to
            // their rounded values, which yields a clean vertex.
            auto fixes = node.fixes;
            for (int j : bins) fixes.push_back({j, static_cast<char>(std::round(node.x[j]))});
            LpResult pol;
            solve_node(fixes, pol);
            double obj = pol.status == LpStatus::optimal ? pol.objective : node.bound;
            const std::vector<double>& px = pol.status == LpStatus::optimal ? pol.x : node.x;
            if (!have_incumbent || obj > best_obj + 1e-12) {
                have_incumbent = true;
                best_obj = obj;
                best_x = px;
            }
            continue;
        }

        for (char val : {static_cast<char>(0), static_cast<char>(1)}) {
            auto fixes = node.fixes;
            fixes.push_back({branch_var, val});
            LpResult child;
            solve_node(fixes, child);
            if (child.status == LpStatus::infeasible) continue;
            if (child.status == LpStatus::unbounded) {
                sol.status = SolveStatus::unbounded;
                sol.solve_seconds = solverdetail::elapsed_s(t0);
                sol.nodes = nodes;
                return sol;
            }
            if (child.status == LpStatus::iter_limit) {
                limit_hit = true;
                limit_msg = "node relaxation: " + child.message;
                continue;
            }
            if (have_incumbent &&
                child.objective - best_obj <= lim.mip_gap * std::max(1.0, std::abs(best_obj)))
                continue;  // cannot beat the incumbent
            open.push({child.objective, next_id++, std::move(fixes), std::move(child.x)});
        }
    }

    sol.nodes = nodes;
    sol.solve_seconds = solverdetail::elapsed_s(t0);
    if (have_incumbent) {
        double upper = best_obj;
        if (limit_hit && !open.empty()) upper = std::max(upper, open.top().bound);
        sol.objective = best_obj;
        sol.x = best_x;
        sol.gap = std::max(0.0, (upper - best_obj) / std::max(1.0, std::abs(best_obj)));
        sol.status = limit_hit ? SolveStatus::feasible : SolveStatus::optimal;
        sol.message = limit_hit ? limit_msg : "";
        if (!limit_hit) sol.gap = 0.0;
    } else if (limit_hit) {
        sol.status = SolveStatus::limit;
        sol.message = limit_msg;
    } else {
        sol.status = SolveStatus::infeasible;
    }
    return sol;
}

// ---------------------------------------------------------------------------
// Brute-force oracle.

inline Solution enumerate_oracle(const MilpInstance& m, int max_binaries = 20) {
    auto t0 = std::chrono::steady_clock::now();
    auto bins = solverdetail::free_binaries(m);
    if (static_cast<int>(bins.size()) > max_binaries)
        throw std::invalid_argument("enumerate_oracle: " + std::to_string(bins.size()) +
                                    " free binaries exceed the oracle cap of " + std::to_string(max_binaries));

    std::vector<double> lb0(m.vars.size()), ub0(m.vars.size());
    for (std::size_t j = 0; j < m.vars.size(); ++j) {
        lb0[j] = m.vars[j].lb;
        ub0[j] = m.vars[j].ub;
    }

    // Rows whose support is entirely fixed-or-enumerated binaries can be
    // checked exactly from the assignment alone, skipping the LP solve.
    std::vector<const Constraint*> binary_rows;
    {
        std::vector<char> is_bin(m.vars.size(), 0);
        for (std::size_t j = 0; j < m.vars.size(); ++j)
            is_bin[j] = m.vars[j].kind == VarKind::binary ||
                        (m.vars[j].lb == m.vars[j].ub);
        for (const auto& c : m.cons) {
            bool all_bin = true;
            for (const auto& t : c.terms)
                if (!is_bin[t.var]) {
                    all_bin = false;
                    break;
                }
            if (all_bin) binary_rows.push_back(&c);
        }
    }

    Solution sol;
    bool any = false;
    double best_obj = -kInf;
    std::vector<double> best_x;
    const std::uint64_t total = 1ull << bins.size();
    std::vector<double> lb = lb0, ub = ub0;

    for (std::uint64_t mask = 0; mask < total; ++mask) {
        for (std::size_t k = 0; k < bins.size(); ++k) {
            double v = (mask >> k) & 1 ? 1.0 : 0.0;
            lb[bins[k]] = v;
            ub[bins[k]] = v;
        }
        // Exact prefilter on pure-binary rows.
        bool ok = true;
        for (const Constraint* c : binary_rows) {
            double lhs = 0;
            for (const auto& t : c->terms) lhs += t.coef * lb[t.var];
            bool sat = c->rel == Rel::le   ? lhs <= c->rhs + 1e-9
                       : c->rel == Rel::ge ? lhs >= c->rhs - 1e-9
                                           : std::abs(lhs - c->rhs) <= 1e-9;
            if (!sat) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;

        LpResult r = solve_lp(m, lb, ub);
        if (r.status == LpStatus::unbounded) {
            sol.status = SolveStatus::unbounded;
            sol.solve_seconds = solverdetail::elapsed_s(t0);
            return sol;
        }
        if (r.status != LpStatus::optimal) continue;
        any = true;
        if (r.objective > best_obj + 1e-12) {  // strict improvement keeps the lowest mask on ties
            best_obj = r.objective;
            best_x = r.x;
        }
    }

    sol.solve_seconds = solverdetail::elapsed_s(t0);
    sol.nodes = static_cast<long>(total);
    if (!any) {
        sol.status = SolveStatus::infeasible;
        return sol;
    }
    sol.status = SolveStatus::optimal;
    sol.objective = best_obj;
    sol.x = best_x;
    return sol;
}

// ---------------------------------------------------------------------------
// External solver bridge.

struct ExternalSolverConfig {
    std::string command_template;  // must contain {lp} and {sol} placeholders
    std::string workdir;           // empty -> system temp directory
    bool keep_files = false;
};

// The environment variable overrides any command configured elsewhere.
inline constexpr const char* kSolverCmdEnvVar = "GRIDRESTORE_SOLVER_CMD";

inline std::string external_command_from_env() {
    const char* v = std::getenv(kSolverCmdEnvVar);
    return v ? std::string(v) : std::string();
}

inline Solution solve_external(const MilpInstance& m, const ExternalSolverConfig& cfg,
                               const SolverLimits& lim = {}) {
    auto t0 = std::chrono::steady_clock::now();
    if (cfg.command_template.find("{lp}") == std::string::npos ||
        cfg.command_template.find("{sol}") == std::string::npos)
        throw std::invalid_argument("external solver command must contain {lp} and {sol} placeholders");

    namespace fs = std::filesystem;
    fs::path dir = cfg.workdir.empty() ? fs::temp_directory_path() : fs::path(cfg.workdir);
    fs::create_directories(dir);
    static std::atomic<unsigned long> counter{0};
    unsigned long serial = counter++;
    std::string stem = "gridrestore_" + std::to_string(static_cast<unsigned long>(::getpid())) + "_" +
                       std::to_string(serial);
    fs::path lp_path = dir / (stem + ".lp");
    fs::path sol_path = dir / (stem + ".sol");

    {
        std::ofstream f(lp_path);
        if (!f) throw SolverError("cannot write LP file " + lp_path.string());
        f << write_lp(m);
    }

    std::string cmd = cfg.command_template;
    auto replace_all = [](std::string& s, const std::string& from, const std::string& to) {
        std::size_t p = 0;
        while ((p = s.find(from, p)) != std::string::npos) {
            s.replace(p, from.size(), to);
            p += to.size();
        }
    };
    replace_all(cmd, "{lp}", lp_path.string());
    replace_all(cmd, "{sol}", sol_path.string());

    int rc = std::system(cmd.c_str());
    auto cleanup = [&]() {
        if (!cfg.keep_files) {
            std::error_code ec;
            fs::remove(lp_path, ec);
            fs::remove(sol_path, ec);
        }
    };
    if (rc != 0) {
        cleanup();
        throw SolverError("external solver command failed (exit " + std::to_string(rc) + "): " + cmd);
    }

    std::ifstream f(sol_path);
    if (!f) {
        cleanup();
        throw SolverError("external solver produced no solution file " + sol_path.string());
    }
    std::stringstream buf;
    buf << f.rdbuf();
    SolutionFile sf = parse_solution(buf.str());
    cleanup();

    Solution sol;
    sol.solve_seconds = solverdetail::elapsed_s(t0);
    if (sf.status == "infeasible") {
        sol.status = SolveStatus::infeasible;
        return sol;
    }
    if (sf.status == "unbounded") {
        sol.status = SolveStatus::unbounded;
        return sol;
    }
    if (sf.status != "optimal" && sf.status != "feasible") {
        sol.status = SolveStatus::limit;
        sol.message = "external status: " + sf.status;
        return sol;
    }

    sol.x.assign(m.vars.size(), 0.0);
    for (std::size_t j = 0; j < m.vars.size(); ++j) {
        auto it = sf.values.find(m.vars[j].name);
        double v = it != sf.values.end() ? it->second : 0.0;
        if (m.vars[j].kind == VarKind::binary) v = std::round(v);
        v = std::max(v, m.vars[j].lb);
        v = std::min(v, m.vars[j].ub);
        sol.x[j] = v;
    }
    double viol = m.max_violation(sol.x);
    if (viol > 1e-6)
        throw SolverError("external solution violates the model by " + std::to_string(viol));
    sol.objective = m.objective_value(sol.x);
    sol.status = sf.status == "optimal" ? SolveStatus::optimal : SolveStatus::feasible;
    (void)lim;
    return sol;
}

// ---------------------------------------------------------------------------
// Unified entry point.

struct SolverChoice {
    enum class Kind { builtin, external } kind = Kind::builtin;
    ExternalSolverConfig external;
};

inline Solution solve(const MilpInstance& m, const SolverLimits& lim = {},
                      const SolverChoice& choice = {}) {
    if (choice.kind == SolverChoice::Kind::external) return solve_external(m, choice.external, lim);
    return solve_bb(m, lim);
}

}  // namespace gridrestore
