#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "gridrestore/simplex.hpp"

using namespace gridrestore;

namespace {

// Largest violation of rows and bounds by x (integrality ignored).
double lp_violation(const MilpInstance& m, const std::vector<double>& x) {
    double worst = 0;
    for (std::size_t j = 0; j < m.vars.size(); ++j) {
        if (std::isfinite(m.vars[j].lb)) worst = std::max(worst, m.vars[j].lb - x[j]);
        if (std::isfinite(m.vars[j].ub)) worst = std::max(worst, x[j] - m.vars[j].ub);
    }
    for (const auto& c : m.cons) {
        double lhs = 0;
        for (const auto& t : c.terms) lhs += t.coef * x[t.var];
        if (c.rel == Rel::le) worst = std::max(worst, lhs - c.rhs);
        if (c.rel == Rel::ge) worst = std::max(worst, c.rhs - lhs);
        if (c.rel == Rel::eq) worst = std::max(worst, std::abs(lhs - c.rhs));
    }
    return worst;
}

}  // namespace

TEST_CASE("one-variable maximization hits the upper bound") {
    MilpInstance m;
    m.add_var("x", VarKind::continuous, 0, 4);
    m.objective = {{0, 1.0}};
    auto r = solve_lp(m);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == Catch::Approx(4.0).margin(1e-9));
}

TEST_CASE("classic two-variable program") {
    // max 3x + 5y subject to x <= 4, 2y <= 12, 3x + 2y <= 18
    MilpInstance m;
    int x = m.add_var("x", VarKind::continuous, 0, kInf);
    int y = m.add_var("y", VarKind::continuous, 0, kInf);
    m.objective = {{x, 3.0}, {y, 5.0}};
    m.add_con("r1", {{x, 1.0}}, Rel::le, 4);
    m.add_con("r2", {{y, 2.0}}, Rel::le, 12);
    m.add_con("r3", {{x, 3.0}, {y, 2.0}}, Rel::le, 18);
    auto r = solve_lp(m);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == Catch::Approx(36.0).margin(1e-8));
    CHECK(r.x[0] == Catch::Approx(2.0).margin(1e-8));
    CHECK(r.x[1] == Catch::Approx(6.0).margin(1e-8));
}

TEST_CASE("equality constraints with finite boxes") {
    MilpInstance m;
    int x = m.add_var("x", VarKind::continuous, 0, 3);
    int y = m.add_var("y", VarKind::continuous, 0, 3);
    m.objective = {{x, 1.0}, {y, 1.0}};
    m.add_con("sum", {{x, 1.0}, {y, 1.0}}, Rel::eq, 5);
    auto r = solve_lp(m);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == Catch::Approx(5.0).margin(1e-9));
    CHECK(lp_violation(m, r.x) < 1e-9);
}

TEST_CASE("negative domains work") {
    MilpInstance m;
    int x = m.add_var("x", VarKind::continuous, -3, 7);
    m.objective = {{x, -1.0}};
    auto r = solve_lp(m);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == Catch::Approx(3.0).margin(1e-9));
    CHECK(r.x[0] == Catch::Approx(-3.0).margin(1e-9));
}

TEST_CASE("free variables settle on the optimal face") {
    MilpInstance m;
    int x = m.add_var("x", VarKind::continuous, -kInf, kInf);
    int y = m.add_var("y", VarKind::continuous, -kInf, kInf);
    m.objective = {{x, 1.0}, {y, -1.0}};
    m.add_con("gap", {{x, 1.0}, {y, -1.0}}, Rel::le, 2);
    auto r = solve_lp(m);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == Catch::Approx(2.0).margin(1e-9));
}

TEST_CASE("row-level contradictions are infeasible") {
    MilpInstance m;
    int x = m.add_var("x", VarKind::continuous, 0, 10);
    m.objective = {{x, 1.0}};
    m.add_con("hi", {{x, 1.0}}, Rel::ge, 5);
    m.add_con("lo", {{x, 1.0}}, Rel::le, 1);
    CHECK(solve_lp(m).status == LpStatus::infeasible);
}

TEST_CASE("empty variable domain is infeasible") {
    MilpInstance m;
    m.add_var("x", VarKind::continuous, 0, 10);
    m.objective = {{0, 1.0}};
    std::vector<double> lb{5}, ub{1};
    CHECK(solve_lp(m, lb, ub).status == LpStatus::infeasible);
}

TEST_CASE("unbounded rays are detected") {
    MilpInstance m;
    int x = m.add_var("x", VarKind::continuous, 0, kInf);
    int y = m.add_var("y", VarKind::continuous, 0, kInf);
    m.objective = {{x, 1.0}, {y, 1.0}};
    m.add_con("only_y", {{y, 1.0}}, Rel::le, 3);
    CHECK(solve_lp(m).status == LpStatus::unbounded);
}

TEST_CASE("redundant constraints and degenerate vertices are handled") {
    MilpInstance m;
    int x = m.add_var("x", VarKind::continuous, 0, kInf);
    int y = m.add_var("y", VarKind::continuous, 0, kInf);
    m.objective = {{x, 1.0}, {y, 1.0}};
    m.add_con("a", {{x, 1.0}}, Rel::le, 1);
    m.add_con("b", {{y, 1.0}}, Rel::le, 1);
    m.add_con("c", {{x, 1.0}, {y, 1.0}}, Rel::le, 2);   // redundant
    m.add_con("d", {{x, 1.0}, {y, 1.0}}, Rel::le, 2);   // duplicated
    m.add_con("e", {{x, 1.0}, {y, -1.0}}, Rel::eq, 0);  // ties them together
    auto r = solve_lp(m);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == Catch::Approx(2.0).margin(1e-9));
}

TEST_CASE("equality systems whose rows are dependent still solve") {
    MilpInstance m;
    int x = m.add_var("x", VarKind::continuous, 0, 10);
    int y = m.add_var("y", VarKind::continuous, 0, 10);
    m.objective = {{x, 2.0}, {y, 1.0}};
    m.add_con("r1", {{x, 1.0}, {y, 1.0}}, Rel::eq, 6);
    m.add_con("r2", {{x, 2.0}, {y, 2.0}}, Rel::eq, 12);  // same hyperplane
    auto r = solve_lp(m);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == Catch::Approx(12.0).margin(1e-8));  // x=6, y=0
}

TEST_CASE("random inequality programs: optimal beats a known feasible point") {
    std::mt19937 rng(20240817u);
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    std::uniform_real_distribution<double> pos(0.2, 2.0);
    std::uniform_int_distribution<int> nd(2, 8), md(1, 12);

    for (int trial = 0; trial < 30; ++trial) {
        int n = nd(rng), mm = md(rng);
        MilpInstance m;
        std::vector<double> x0(n);
        for (int j = 0; j < n; ++j) {
            double lo = -pos(rng) * 5, hi = pos(rng) * 5;
            m.add_var("x" + std::to_string(j), VarKind::continuous, lo, hi);
            std::uniform_real_distribution<double> inside(lo, hi);
            x0[j] = inside(rng);
        }
        for (int j = 0; j < n; ++j) m.objective.push_back({j, coef(rng)});
        for (int i = 0; i < mm; ++i) {
            std::vector<LinTerm> terms;
            double lhs0 = 0;
            for (int j = 0; j < n; ++j) {
                double a = coef(rng);
                if (std::abs(a) < 0.3) continue;
                terms.push_back({j, a});
                lhs0 += a * x0[j];
            }
            if (terms.empty()) continue;
            m.add_con("r" + std::to_string(i), std::move(terms), Rel::le, lhs0 + pos(rng));
        }
        auto r = solve_lp(m);
        REQUIRE(r.status == LpStatus::optimal);  // x0 is feasible by construction
        CHECK(lp_violation(m, r.x) < 1e-7);
        double obj0 = m.objective_value(x0);
        CHECK(r.objective >= obj0 - 1e-7);
    }
}

TEST_CASE("random equality programs stay feasible and optimal") {
    std::mt19937 rng(7u);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 6, mm = 3;
        MilpInstance m;
        std::vector<double> x0(n);
        for (int j = 0; j < n; ++j) {
            m.add_var("x" + std::to_string(j), VarKind::continuous, -4, 4);
            x0[j] = coef(rng);
        }
        for (int j = 0; j < n; ++j) m.objective.push_back({j, coef(rng)});
        for (int i = 0; i < mm; ++i) {
            std::vector<LinTerm> terms;
            double lhs0 = 0;
            for (int j = 0; j < n; ++j) {
                double a = coef(rng);
                terms.push_back({j, a});
                lhs0 += a * x0[j];
            }
            m.add_con("eq" + std::to_string(i), std::move(terms), Rel::eq, lhs0);
        }
        auto r = solve_lp(m);
        REQUIRE(r.status == LpStatus::optimal);
        CHECK(lp_violation(m, r.x) < 1e-7);
        CHECK(r.objective >= m.objective_value(x0) - 1e-7);
    }
}

TEST_CASE("solutions are bit-reproducible") {
    MilpInstance m;
    int x = m.add_var("x", VarKind::continuous, 0, 9);
    int y = m.add_var("y", VarKind::continuous, 0, 9);
    m.objective = {{x, 1.7}, {y, 2.9}};
    m.add_con("r", {{x, 1.3}, {y, 2.1}}, Rel::le, 10);
    auto a = solve_lp(m), b = solve_lp(m);
    CHECK(a.objective == b.objective);
    CHECK(a.x == b.x);
    CHECK(a.iterations == b.iterations);
}
