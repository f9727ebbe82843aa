#pragma once

// Dense bounded-variable primal simplex with an explicit basis inverse.
// Phase 1 starts from an all-artificial basis (B = diag(+/-1)) and minimizes
// total artificial mass; phase 2 optimizes the real objective with the
// artificials pinned to zero. Entering variables are picked by Dantzig
// pricing with a Bland fallback after a run of degenerate steps, and all
// tie-breaks are index-ordered, so runs are bit-reproducible.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gridrestore/milp.hpp"

namespace gridrestore {

enum class LpStatus { optimal, infeasible, unbounded, iter_limit };

struct LpOptions {
    double feas_tol = 1e-7;   // phase-1 residual threshold (scaled by rhs magnitude)
    double opt_tol = 1e-9;    // reduced-cost tolerance
    double pivot_tol = 1e-8;  // smallest acceptable pivot element
    int max_iters = 0;        // 0 -> automatic from problem size
    bool bland = false;       // least-index pricing throughout: slow but stall-proof
};

struct LpResult {
    LpStatus status = LpStatus::iter_limit;
    double objective = 0.0;  // maximize sense
    std::vector<double> x;   // structural variables only
    int iterations = 0;
    std::string message;
};

namespace simplexdetail {

struct SparseCol {
    std::vector<int> row;
    std::vector<double> val;
};

class BoundedSimplex {
public:
    BoundedSimplex(const MilpInstance& m, const std::vector<double>& lbv,
                   const std::vector<double>& ubv, const LpOptions& opt)
        : opt_(opt) {
        n_ = static_cast<int>(m.vars.size());
        rows_ = static_cast<int>(m.cons.size());
        ncols_ = n_ + 2 * rows_;  // structural, slack, artificial
        cols_.resize(ncols_);
        lb_.assign(ncols_, 0.0);
        ub_.assign(ncols_, kInf);
        b_.assign(rows_, 0.0);

        for (int j = 0; j < n_; ++j) {
            lb_[j] = lbv[j];
            ub_[j] = ubv[j];
        }
        for (int i = 0; i < rows_; ++i) {
            const Constraint& c = m.cons[i];
            b_[i] = c.rhs;
            for (const auto& t : c.terms) {
                if (t.coef == 0.0) continue;
                cols_[t.var].row.push_back(i);
                cols_[t.var].val.push_back(t.coef);
            }
            int s = n_ + i;
            cols_[s].row.push_back(i);
            cols_[s].val.push_back(1.0);
            switch (c.rel) {
                case Rel::le: lb_[s] = 0; ub_[s] = kInf; break;
                case Rel::ge: lb_[s] = -kInf; ub_[s] = 0; break;
                case Rel::eq: lb_[s] = 0; ub_[s] = 0; break;
            }
        }
        obj_.assign(ncols_, 0.0);
        for (const auto& t : m.objective) obj_[t.var] -= t.coef;  // internal sense: minimize

        max_iters_ = opt.max_iters > 0
                         ? opt.max_iters
                         : std::min(500000, 5000 + 60 * ncols_);
        bland_ = opt.bland;
    }

    LpResult solve() {
        LpResult res;
        init_basis();

        // Phase 1: minimize sum of artificials.
        cost_.assign(ncols_, 0.0);
        for (int j = art0_; j < ncols_; ++j) cost_[j] = 1.0;
        IterOutcome out = iterate();
        if (out == IterOutcome::limit) return finish(res, LpStatus::iter_limit, "iteration limit in phase 1");
        if (out == IterOutcome::singular) return finish(res, LpStatus::iter_limit, "singular basis in phase 1");
        if (out == IterOutcome::unbounded)
            return finish(res, LpStatus::iter_limit, "numerical anomaly: unbounded phase-1 direction");

        double infeas = 0.0, bscale = 1.0;
        for (int i = 0; i < rows_; ++i) bscale = std::max(bscale, std::abs(b_[i]));
        for (int j = art0_; j < ncols_; ++j) infeas += std::abs(x_[j]);
        if (infeas > opt_.feas_tol * bscale)
            return finish(res, LpStatus::infeasible, "phase-1 residual " + std::to_string(infeas));

        drive_out_artificials();
        for (int j = art0_; j < ncols_; ++j) {
            lb_[j] = ub_[j] = 0.0;
            if (!in_basis_[j]) x_[j] = 0.0;
        }

        // Phase 2: the real objective.
        cost_ = obj_;
        for (int j = art0_; j < ncols_; ++j) cost_[j] = 0.0;
        out = iterate();
        if (out == IterOutcome::limit) return finish(res, LpStatus::iter_limit, "iteration limit in phase 2");
        if (out == IterOutcome::singular) return finish(res, LpStatus::iter_limit, "singular basis in phase 2");
        if (out == IterOutcome::unbounded) return finish(res, LpStatus::unbounded, "");

        refactorize();  // final accuracy pass before reporting
        return finish(res, LpStatus::optimal, "");
    }

private:
    enum class CStat { basic, at_lower, at_upper, nb_free };
    enum class IterOutcome { optimal, unbounded, limit, singular };

    LpOptions opt_;
    int n_ = 0, rows_ = 0, ncols_ = 0, art0_ = 0;
    std::vector<SparseCol> cols_;
    std::vector<double> lb_, ub_, b_, obj_, cost_, x_;
    std::vector<double> binv_;  // rows_ x rows_, row-major
    std::vector<int> basic_;    // row -> column
    std::vector<char> in_basis_;
    std::vector<CStat> stat_;
    int iters_ = 0, pivots_since_refactor_ = 0, degen_run_ = 0;
    bool bland_ = false, singular_ = false;

    double& binv(int i, int j) { return binv_[static_cast<std::size_t>(i) * rows_ + j]; }

    void init_basis() {
        x_.assign(ncols_, 0.0);
        stat_.assign(ncols_, CStat::at_lower);
        in_basis_.assign(ncols_, 0);
        basic_.assign(rows_, -1);
        for (int j = 0; j < n_ + rows_; ++j) {
            if (lb_[j] == ub_[j]) {
                stat_[j] = CStat::at_lower;
                x_[j] = lb_[j];
            } else if (std::isfinite(lb_[j])) {
                stat_[j] = CStat::at_lower;
                x_[j] = lb_[j];
            } else if (std::isfinite(ub_[j])) {
                stat_[j] = CStat::at_upper;
                x_[j] = ub_[j];
            } else {
                stat_[j] = CStat::nb_free;
                x_[j] = 0.0;
            }
        }
        // Row residuals against the nonbasic point give the artificial values.
        std::vector<double> r = b_;
        for (int j = 0; j < n_ + rows_; ++j) {
            if (x_[j] == 0.0) continue;
            const auto& col = cols_[j];
            for (std::size_t k = 0; k < col.row.size(); ++k) r[col.row[k]] -= col.val[k] * x_[j];
        }
        art0_ = n_ + rows_;
        binv_.assign(static_cast<std::size_t>(rows_) * rows_, 0.0);
        for (int i = 0; i < rows_; ++i) {
            int a = art0_ + i;
            double sigma = r[i] >= 0 ? 1.0 : -1.0;
            cols_[a].row.push_back(i);
            cols_[a].val.push_back(sigma);
            lb_[a] = 0.0;
            ub_[a] = kInf;
            x_[a] = std::abs(r[i]);
            basic_[i] = a;
            in_basis_[a] = 1;
            stat_[a] = CStat::basic;
            binv(i, i) = sigma;
        }
    }

    // alpha = Binv * A_j
    void ftran(int j, std::vector<double>& alpha) {
        alpha.assign(rows_, 0.0);
        const auto& col = cols_[j];
        for (std::size_t k = 0; k < col.row.size(); ++k) {
            int rc = col.row[k];
            double v = col.val[k];
            for (int i = 0; i < rows_; ++i) alpha[i] += v * binv(i, rc);
        }
    }

    double reduced_cost(int j, const std::vector<double>& y) const {
        double d = cost_[j];
        const auto& col = cols_[j];
        for (std::size_t k = 0; k < col.row.size(); ++k) d -= y[col.row[k]] * col.val[k];
        return d;
    }

    IterOutcome iterate() {
        std::vector<double> y(rows_), alpha(rows_);
        while (true) {
            if (iters_ >= max_iters_) return IterOutcome::limit;
            if (singular_) return IterOutcome::singular;

            // y^T = c_B^T * Binv
            std::fill(y.begin(), y.end(), 0.0);
            for (int i = 0; i < rows_; ++i) {
                double cb = cost_[basic_[i]];
                if (cb == 0.0) continue;
                for (int k = 0; k < rows_; ++k) y[k] += cb * binv(i, k);
            }

            // Pricing.
            int enter = -1, dir = 0;
            double best = opt_.opt_tol;
            for (int j = 0; j < ncols_; ++j) {
                if (in_basis_[j]) continue;
                if (lb_[j] == ub_[j]) continue;  // fixed: can never move
                double d = reduced_cost(j, y);
                int s = 0;
                if (stat_[j] == CStat::at_lower && d < -opt_.opt_tol) s = 1;
                else if (stat_[j] == CStat::at_upper && d > opt_.opt_tol) s = -1;
                else if (stat_[j] == CStat::nb_free && std::abs(d) > opt_.opt_tol) s = d < 0 ? 1 : -1;
                if (s == 0) continue;
                if (bland_) {
                    enter = j;
                    dir = s;
                    break;
                }
                if (std::abs(d) > best) {
                    best = std::abs(d);
                    enter = j;
                    dir = s;
                }
            }
            if (enter < 0) return IterOutcome::optimal;
            ++iters_;

            ftran(enter, alpha);

            // Ratio test: how far can the entering variable move?
            double span = ub_[enter] - lb_[enter];  // own-bound flip distance
            double t_limit = std::isfinite(span) ? span : kInf;
            int leave_row = -1;
            double leave_pivot = 0.0;
            double best_t = t_limit;
            for (int i = 0; i < rows_; ++i) {
                double a = alpha[i];
                if (std::abs(a) < opt_.pivot_tol) continue;
                int bj = basic_[i];
                double delta = -dir * a;  // rate of change of x_Bi per unit step
                double room;
                if (delta < 0) {
                    if (!std::isfinite(lb_[bj])) continue;
                    room = (x_[bj] - lb_[bj]) / (-delta);
                } else {
                    if (!std::isfinite(ub_[bj])) continue;
                    room = (ub_[bj] - x_[bj]) / delta;
                }
                if (room < -1e-12) room = 0.0;
                // Keep the strictly smallest ratio; among near-ties prefer the
                // largest pivot magnitude (stability), then the lowest row.
                bool take = room < best_t - 1e-10 ||
                            (room < best_t + 1e-10 &&
                             (leave_row < 0 || std::abs(a) > std::abs(leave_pivot) + 1e-12));
                if (take) {
                    best_t = room;
                    leave_row = i;
                    leave_pivot = a;
                }
            }
            if (leave_row < 0 && !std::isfinite(t_limit)) return IterOutcome::unbounded;

            double t = leave_row >= 0 ? std::max(best_t, 0.0) : t_limit;
            bool bound_flip = leave_row < 0 || (std::isfinite(t_limit) && t_limit <= best_t + 1e-12);
            if (bound_flip) t = t_limit;

            // Apply the step.
            x_[enter] += dir * t;
            if (t != 0.0) {
                for (int i = 0; i < rows_; ++i) {
                    if (alpha[i] == 0.0) continue;
                    x_[basic_[i]] -= dir * t * alpha[i];
                }
            }

            if (bound_flip) {
                stat_[enter] = dir > 0 ? CStat::at_upper : CStat::at_lower;
                x_[enter] = dir > 0 ? ub_[enter] : lb_[enter];
            } else {
                int leave_col = basic_[leave_row];
                // Snap the leaving variable onto the bound it reached.
                double delta = -dir * alpha[leave_row];
                x_[leave_col] = delta < 0 ? lb_[leave_col] : ub_[leave_col];
                stat_[leave_col] = delta < 0 ? CStat::at_lower : CStat::at_upper;
                if (lb_[leave_col] == ub_[leave_col]) x_[leave_col] = lb_[leave_col];
                in_basis_[leave_col] = 0;
                basic_[leave_row] = enter;
                in_basis_[enter] = 1;
                stat_[enter] = CStat::basic;
                update_inverse(leave_row, alpha);
                if (++pivots_since_refactor_ >= 120) refactorize();
            }

            // Stall detection with hysteresis: steps below the threshold count
            // toward engaging least-index pricing, and only a solid step turns
            // it back off, so drift-sized steps cannot flip-flop the rule.
            if (t <= 1e-7) {
                if (++degen_run_ > 60 + 2 * rows_) bland_ = true;
            } else {
                degen_run_ = 0;
                if (!opt_.bland) bland_ = false;
            }
        }
    }

    void update_inverse(int r, const std::vector<double>& alpha) {
        double piv = alpha[r];
        double inv = 1.0 / piv;
        for (int k = 0; k < rows_; ++k) binv(r, k) *= inv;
        for (int i = 0; i < rows_; ++i) {
            if (i == r) continue;
            double f = alpha[i];
            if (f == 0.0) continue;
            for (int k = 0; k < rows_; ++k) binv(i, k) -= f * binv(r, k);
        }
    }

    void refactorize() {
        pivots_since_refactor_ = 0;
        int m = rows_;
        std::vector<double> M(static_cast<std::size_t>(m) * 2 * m, 0.0);
        auto at = [&](int i, int j) -> double& { return M[static_cast<std::size_t>(i) * 2 * m + j]; };
        for (int i = 0; i < m; ++i) {
            const auto& col = cols_[basic_[i]];
            for (std::size_t k = 0; k < col.row.size(); ++k) at(col.row[k], i) = col.val[k];
            at(i, m + i) = 1.0;
        }
        for (int c = 0; c < m; ++c) {
            int p = c;
            for (int i = c + 1; i < m; ++i)
                if (std::abs(at(i, c)) > std::abs(at(p, c))) p = i;
            if (std::abs(at(p, c)) < 1e-12) {
                singular_ = true;
                return;
            }
            if (p != c)
                for (int j = 0; j < 2 * m; ++j) std::swap(at(p, j), at(c, j));
            double inv = 1.0 / at(c, c);
            for (int j = 0; j < 2 * m; ++j) at(c, j) *= inv;
            for (int i = 0; i < m; ++i) {
                if (i == c) continue;
                double f = at(i, c);
                if (f == 0.0) continue;
                for (int j = 0; j < 2 * m; ++j) at(i, j) -= f * at(c, j);
            }
        }
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) binv(i, j) = at(i, m + j);

        // Recompute basic values from scratch for accuracy.
        std::vector<double> r = b_;
        for (int j = 0; j < ncols_; ++j) {
            if (in_basis_[j] || x_[j] == 0.0) continue;
            const auto& col = cols_[j];
            for (std::size_t k = 0; k < col.row.size(); ++k) r[col.row[k]] -= col.val[k] * x_[j];
        }
        for (int i = 0; i < m; ++i) {
            double v = 0;
            for (int k = 0; k < m; ++k) v += binv(i, k) * r[k];
            x_[basic_[i]] = v;
        }
    }

    void drive_out_artificials() {
        for (int i = 0; i < rows_; ++i) {
            if (basic_[i] < art0_) continue;
            // This row's basic artificial sits at (numerically) zero; replace it
            // with any non-artificial column that has a usable pivot here.
            std::vector<double> alpha;
            int chosen = -1;
            double chosen_pivot = 0;
            for (int j = 0; j < art0_; ++j) {
                if (in_basis_[j]) continue;
                double arj = 0;
                const auto& col = cols_[j];
                for (std::size_t k = 0; k < col.row.size(); ++k) arj += binv(i, col.row[k]) * col.val[k];
                if (std::abs(arj) > std::max(opt_.pivot_tol, std::abs(chosen_pivot))) {
                    chosen = j;
                    chosen_pivot = arj;
                    if (std::abs(arj) > 0.1) break;  // good enough pivot, stop scanning
                }
            }
            if (chosen < 0) continue;  // redundant row: artificial stays basic at zero
            ftran(chosen, alpha);
            int art = basic_[i];
            in_basis_[art] = 0;
            stat_[art] = CStat::at_lower;
            x_[art] = 0.0;
            basic_[i] = chosen;
            in_basis_[chosen] = 1;
            stat_[chosen] = CStat::basic;
            update_inverse(i, alpha);  // zero-length step: values are unchanged
        }
        refactorize();
    }

    LpResult finish(LpResult& res, LpStatus st, const std::string& msg) {
        res.status = st;
        res.message = msg;
        res.iterations = iters_;
        res.x.assign(x_.begin(), x_.begin() + n_);
        for (int j = 0; j < n_; ++j) {  // clear round-off outside bounds
            if (std::isfinite(lb_[j])) res.x[j] = std::max(res.x[j], lb_[j]);
            if (std::isfinite(ub_[j])) res.x[j] = std::min(res.x[j], ub_[j]);
        }
        double obj = 0;
        for (int j = 0; j < n_; ++j) obj += -obj_[j] * res.x[j];
        res.objective = obj;
        return res;
    }

    int max_iters_ = 0;
};

}  // namespace simplexdetail

// Solves the continuous relaxation (integrality ignored) of the instance with
// the given bound vectors. Returns structural variable values; objective is
// in the instance's maximize sense.
inline LpResult solve_lp(const MilpInstance& m, const std::vector<double>& lb,
                         const std::vector<double>& ub, const LpOptions& opt = {}) {
    if (lb.size() != m.vars.size() || ub.size() != m.vars.size())
        throw std::invalid_argument("solve_lp: bound vector size mismatch");
    for (std::size_t j = 0; j < lb.size(); ++j)
        if (lb[j] > ub[j]) {
            LpResult r;
            r.status = LpStatus::infeasible;
            r.message = "empty domain for variable " + m.vars[j].name;
            return r;
        }
    simplexdetail::BoundedSimplex s(m, lb, ub, opt);
    LpResult r = s.solve();
    if (r.status == LpStatus::iter_limit && !opt.bland) {
        // A stalled solve is nearly always degeneracy cycling; least-index
        // pricing is slower per iteration but cannot cycle, so retry once.
        LpOptions retry = opt;
        retry.bland = true;
        retry.max_iters = std::max(opt.max_iters, 2'000'000);
        simplexdetail::BoundedSimplex s2(m, lb, ub, retry);
        LpResult r2 = s2.solve();
        r2.iterations += r.iterations;
        return r2;
    }
    return r;
}

inline LpResult solve_lp(const MilpInstance& m, const LpOptions& opt = {}) {
    std::vector<double> lb(m.vars.size()), ub(m.vars.size());
    for (std::size_t j = 0; j < m.vars.size(); ++j) {
        lb[j] = m.vars[j].lb;
        ub[j] = m.vars[j].ub;
    }
    return solve_lp(m, lb, ub, opt);
}

}  // namespace gridrestore
