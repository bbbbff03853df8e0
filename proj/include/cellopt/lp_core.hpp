#pragma once

// Embedded LP solver: dense-tableau bounded-variable primal simplex.
//
// Every row i gets a logical column with coefficient +1 whose bounds encode
// the relation (<=: [0, inf), >=: (-inf, 0], =: [0, 0]). Rows whose residual
// violates the logical's bounds at the starting point get an artificial column
// for phase I. Warm starts reinstall a previous basis and repair primal
// infeasibility with the dual simplex.

#include "cellopt/common.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace cellopt {

enum class Relation { less_equal, greater_equal, equal };

struct LpTerm {
    std::size_t column = 0;
    double coeff = 0.0;
};

struct LpRow {
    std::vector<LpTerm> terms;
    Relation relation = Relation::less_equal;
    double rhs = 0.0;
    std::string name;
};

/// min c'x + offset  s.t. rows, lower <= x <= upper.
struct LinearProgram {
    std::vector<double> objective;
    double objective_offset = 0.0;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<std::string> column_names;
    std::vector<LpRow> rows;

    std::size_t column_count() const { return objective.size(); }
    std::size_t row_count() const { return rows.size(); }

    std::size_t add_column(double cost, double lo = 0.0, double hi = kInf, std::string name = {})
    {
        objective.push_back(cost);
        lower.push_back(lo);
        upper.push_back(hi);
        column_names.push_back(std::move(name));
        return objective.size() - 1;
    }

    std::size_t add_row(std::vector<LpTerm> terms, Relation rel, double rhs, std::string name = {})
    {
        rows.push_back({std::move(terms), rel, rhs, std::move(name)});
        return rows.size() - 1;
    }

    /// Problems that make the program unusable; empty when valid.
    std::vector<std::string> validate() const
    {
        std::vector<std::string> out;
        const std::size_t n = column_count();
        if (lower.size() != n || upper.size() != n) out.push_back("bound vectors do not match the column count");
        for (std::size_t j = 0; j < n && j < lower.size() && j < upper.size(); ++j) {
            if (!std::isfinite(objective[j])) out.push_back("objective coefficient of column " + std::to_string(j) + " not finite");
            if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j] || lower[j] == kInf || upper[j] == -kInf)
                out.push_back("inconsistent bounds on column " + std::to_string(j));
        }
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (!std::isfinite(rows[i].rhs)) out.push_back("rhs of row " + std::to_string(i) + " not finite");
            for (const auto& t : rows[i].terms)
                if (t.column >= n || !std::isfinite(t.coeff)) out.push_back("bad term in row " + std::to_string(i));
        }
        return out;
    }

    double row_activity(std::size_t i, const std::vector<double>& x) const
    {
        double s = 0.0;
        for (const auto& t : rows[i].terms) s += t.coeff * x[t.column];
        return s;
    }
};

enum class LpStatus { optimal, infeasible, unbounded, stalled };

inline const char* to_string(LpStatus s)
{
    switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    default: return "stalled";
    }
}

/// Basis over structural columns [0, n) and logical columns [n, n + m).
struct LpBasis {
    std::size_t structurals = 0;
    std::vector<std::size_t> basic;   // per row position
    std::vector<std::uint8_t> at_upper; // per column (structural + logical)

    bool empty() const { return basic.empty(); }
};

struct LpResult {
    LpStatus status = LpStatus::stalled;
    double objective = 0.0;
    std::vector<double> primal;        // structural values
    std::vector<double> duals;         // per row; objective sensitivity to rhs
    std::vector<double> reduced_costs; // per structural column
    std::vector<double> farkas;        // per row, when infeasible
    std::uint64_t iterations = 0;
    double wall_time = 0.0;
    LpBasis basis;
    bool warm_started = false;
};

struct SimplexOptions {
    std::uint64_t max_iterations = 1'000'000;
    std::uint64_t degenerate_before_bland = 1000;
};

/// max over the box of y'Ax < y'b with sign-consistent y proves infeasibility.
/// Returns y'b - max_box y'Ax (positive for a valid certificate), or -inf when
/// the sign conditions fail or the maximum is unbounded.
inline double farkas_margin(const LinearProgram& lp, const std::vector<double>& y, double tol = 1e-9)
{
    if (y.size() != lp.row_count()) return -kInf;
    std::vector<double> ya(lp.column_count(), 0.0);
    double yb = 0.0;
    for (std::size_t i = 0; i < lp.row_count(); ++i) {
        const auto& row = lp.rows[i];
        if (row.relation == Relation::less_equal && y[i] > tol) return -kInf;
        if (row.relation == Relation::greater_equal && y[i] < -tol) return -kInf;
        yb += y[i] * row.rhs;
        for (const auto& t : row.terms) ya[t.column] += y[i] * t.coeff;
    }
    double max_ax = 0.0;
    for (std::size_t j = 0; j < ya.size(); ++j) {
        if (std::abs(ya[j]) <= tol) continue;
        const double bound = ya[j] > 0 ? lp.upper[j] : lp.lower[j];
        if (!std::isfinite(bound)) return -kInf;
        max_ax += ya[j] * bound;
    }
    return yb - max_ax;
}

namespace detail {

class DenseSimplex {
public:
    DenseSimplex(const LinearProgram& lp, const SimplexOptions& opt)
        : lp_(lp), opt_(opt), m_(lp.row_count()), n_(lp.column_count()), cols_(n_ + 2 * m_)
    {
    }

    LpResult solve_cold()
    {
        const auto t0 = std::chrono::steady_clock::now();
        LpResult res = run_cold();
        res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return res;
    }

    LpResult solve_warm(const LpBasis& basis)
    {
        const auto t0 = std::chrono::steady_clock::now();
        LpResult res;
        if (install(basis)) {
            res = run_warm();
            res.warm_started = true;
        } else {
            res = run_cold();
        }
        res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return res;
    }

private:
    static constexpr double kPivotTol = 1e-9;
    static constexpr double kPrimalTol = 1e-9;
    static constexpr double kDualTol = 1e-9;

    double& at(std::size_t i, std::size_t j) { return tab_[i * cols_ + j]; }
    double at(std::size_t i, std::size_t j) const { return tab_[i * cols_ + j]; }

    std::size_t logical(std::size_t i) const { return n_ + i; }
    std::size_t artificial(std::size_t i) const { return n_ + m_ + i; }

    void reset_matrix()
    {
        tab_.assign(m_ * cols_, 0.0);
        rhs_.assign(m_, 0.0);
        lo_.assign(cols_, 0.0);
        hi_.assign(cols_, 0.0);
        x_.assign(cols_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) {
            lo_[j] = lp_.lower[j];
            hi_[j] = lp_.upper[j];
        }
        for (std::size_t i = 0; i < m_; ++i) {
            const auto& row = lp_.rows[i];
            for (const auto& t : row.terms) at(i, t.column) += t.coeff;
            at(i, logical(i)) = 1.0;
            rhs_[i] = row.rhs;
            switch (row.relation) {
            case Relation::less_equal: lo_[logical(i)] = 0.0, hi_[logical(i)] = kInf; break;
            case Relation::greater_equal: lo_[logical(i)] = -kInf, hi_[logical(i)] = 0.0; break;
            case Relation::equal: lo_[logical(i)] = hi_[logical(i)] = 0.0; break;
            }
        }
        basic_.assign(m_, 0);
        is_basic_.assign(cols_, 0);
        iterations_ = 0;
    }

    double start_value(std::size_t j) const
    {
        if (std::isfinite(lo_[j])) return lo_[j];
        if (std::isfinite(hi_[j])) return hi_[j];
        return 0.0;
    }

    LpResult run_cold()
    {
        reset_matrix();
        for (std::size_t j = 0; j < n_; ++j) x_[j] = start_value(j);
        bool need_phase1 = false;
        for (std::size_t i = 0; i < m_; ++i) {
            double r = rhs_[i];
            for (const auto& t : lp_.rows[i].terms) r -= t.coeff * x_[t.column];
            const std::size_t l = logical(i);
            if (r >= lo_[l] - kPrimalTol && r <= hi_[l] + kPrimalTol) {
                basic_[i] = l;
                is_basic_[l] = 1;
                x_[l] = r;
            } else {
                const double c = std::clamp(r, lo_[l], hi_[l]);
                x_[l] = c;
                const double sign = (r - c) > 0 ? 1.0 : -1.0;
                const std::size_t a = artificial(i);
                at(i, a) = sign;
                hi_[a] = kInf;
                // scale row so the artificial's column is +e_i
                if (sign < 0) {
                    for (std::size_t j = 0; j < cols_; ++j) at(i, j) = -at(i, j);
                    rhs_[i] = -rhs_[i];
                }
                basic_[i] = a;
                is_basic_[a] = 1;
                x_[a] = std::abs(r - c);
                need_phase1 = true;
            }
        }
        if (need_phase1) {
            cost_.assign(cols_, 0.0);
            for (std::size_t i = 0; i < m_; ++i)
                if (hi_[artificial(i)] > 0) cost_[artificial(i)] = 1.0;
            compute_reduced_costs();
            const LpStatus st = primal_loop();
            if (st == LpStatus::stalled) return finish(LpStatus::stalled);
            double infeas = 0.0;
            for (std::size_t i = 0; i < m_; ++i) infeas += x_[artificial(i)];
            if (infeas > 1e-9 * std::max(1.0, max_abs_rhs())) {
                LpResult res = finish(LpStatus::infeasible);
                res.farkas.resize(m_);
                for (std::size_t i = 0; i < m_; ++i) res.farkas[i] = -dj_[logical(i)];
                return res;
            }
            for (std::size_t i = 0; i < m_; ++i) {
                const std::size_t a = artificial(i);
                lo_[a] = hi_[a] = 0.0;
                x_[a] = 0.0;
            }
            // drive basic artificials out where possible
            for (std::size_t i = 0; i < m_; ++i) {
                if (basic_[i] < n_ + m_) continue;
                std::size_t best = cols_;
                double best_abs = 1e-7;
                for (std::size_t j = 0; j < n_ + m_; ++j)
                    if (!is_basic_[j] && std::abs(at(i, j)) > best_abs) best = j, best_abs = std::abs(at(i, j));
                if (best < cols_) {
                    const double v = x_[best];
                    pivot(i, best);
                    x_[best] = v; // degenerate: artificial was at zero
                    recompute_basics();
                }
            }
        }
        cost_.assign(cols_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) cost_[j] = lp_.objective[j];
        compute_reduced_costs();
        return finish(primal_loop());
    }

    LpResult run_warm()
    {
        cost_.assign(cols_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) cost_[j] = lp_.objective[j];
        compute_reduced_costs();
        if (!primal_feasible()) {
            if (!dual_feasible()) return run_cold();
            const auto st = dual_loop();
            if (st == LpStatus::infeasible) return run_cold(); // cold path produces the certificate
            if (st == LpStatus::stalled) return finish(LpStatus::stalled);
        }
        return finish(primal_loop());
    }

    double max_abs_rhs() const
    {
        double m = 0.0;
        for (const auto& row : lp_.rows) m = std::max(m, std::abs(row.rhs));
        return m;
    }

    /// Rebuild the tableau for the given basis; false if it is unusable.
    bool install(const LpBasis& basis)
    {
        if (basis.structurals != n_ || basis.basic.size() > m_) return false;
        const std::size_t old_m = basis.basic.size();
        reset_matrix();
        std::vector<std::size_t> wanted;
        std::vector<std::uint8_t> want(cols_, 0);
        for (std::size_t k = 0; k < old_m; ++k) {
            const std::size_t j = basis.basic[k];
            if (j >= n_ + old_m || want[j]) return false;
            want[j] = 1;
            wanted.push_back(j);
        }
        for (std::size_t i = old_m; i < m_; ++i) {
            want[logical(i)] = 1;
            wanted.push_back(logical(i));
        }
        // start from the all-logical basis, then pivot wanted columns in
        for (std::size_t i = 0; i < m_; ++i) {
            basic_[i] = logical(i);
            is_basic_[logical(i)] = 1;
        }
        for (std::size_t j : wanted) {
            if (is_basic_[j]) continue;
            std::size_t best = m_;
            double best_abs = 1e-7;
            for (std::size_t i = 0; i < m_; ++i)
                if (!want[basic_[i]] && std::abs(at(i, j)) > best_abs) best = i, best_abs = std::abs(at(i, j));
            if (best == m_) return false;
            pivot(best, j);
        }
        for (std::size_t j = 0; j < n_ + m_; ++j) {
            if (is_basic_[j]) continue;
            const bool up = j < basis.at_upper.size() && basis.at_upper[j] && j < n_ + old_m;
            if (up && std::isfinite(hi_[j]))
                x_[j] = hi_[j];
            else
                x_[j] = start_value(j);
        }
        recompute_basics();
        iterations_ = 0;
        return true;
    }

    void recompute_basics()
    {
        for (std::size_t i = 0; i < m_; ++i) {
            double v = rhs_[i];
            for (std::size_t j = 0; j < cols_; ++j)
                if (!is_basic_[j] && x_[j] != 0.0) v -= at(i, j) * x_[j];
            x_[basic_[i]] = v;
        }
    }

    void compute_reduced_costs()
    {
        dj_ = cost_;
        for (std::size_t i = 0; i < m_; ++i) {
            const double cb = cost_[basic_[i]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j < cols_; ++j) dj_[j] -= cb * at(i, j);
        }
        for (std::size_t i = 0; i < m_; ++i) dj_[basic_[i]] = 0.0;
    }

    void pivot(std::size_t r, std::size_t q)
    {
        const double p = at(r, q);
        double* prow = &tab_[r * cols_];
        const double inv = 1.0 / p;
        for (std::size_t j = 0; j < cols_; ++j) prow[j] *= inv;
        rhs_[r] *= inv;
        prow[q] = 1.0;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r) continue;
            double* row = &tab_[i * cols_];
            const double f = row[q];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < cols_; ++j) row[j] -= f * prow[j];
            rhs_[i] -= f * rhs_[r];
            row[q] = 0.0;
        }
        if (!dj_.empty()) {
            const double f = dj_[q];
            if (f != 0.0)
                for (std::size_t j = 0; j < cols_; ++j) dj_[j] -= f * prow[j];
            dj_[q] = 0.0;
        }
        is_basic_[basic_[r]] = 0;
        basic_[r] = q;
        is_basic_[q] = 1;
    }

    bool primal_feasible() const
    {
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t b = basic_[i];
            if (x_[b] < lo_[b] - 1e-7 || x_[b] > hi_[b] + 1e-7) return false;
        }
        return true;
    }

    bool dual_feasible() const
    {
        for (std::size_t j = 0; j < cols_; ++j) {
            if (is_basic_[j] || lo_[j] == hi_[j]) continue;
            const bool at_lo = std::isfinite(lo_[j]) && x_[j] == lo_[j];
            const bool at_hi = std::isfinite(hi_[j]) && x_[j] == hi_[j];
            if (at_lo && dj_[j] < -kDualTol) return false;
            if (at_hi && dj_[j] > kDualTol) return false;
            if (!at_lo && !at_hi && std::abs(dj_[j]) > kDualTol) return false;
        }
        return true;
    }

    // Primal simplex on a primal feasible basis with the current costs.
    LpStatus primal_loop()
    {
        std::uint64_t degenerate_run = 0;
        while (true) {
            if (iterations_ >= opt_.max_iterations) return LpStatus::stalled;
            const bool bland = degenerate_run >= opt_.degenerate_before_bland;
            std::size_t q = cols_;
            double best = 0.0;
            int dir = 0;
            for (std::size_t j = 0; j < cols_; ++j) {
                if (is_basic_[j] || lo_[j] == hi_[j]) continue;
                const double d = dj_[j];
                const bool can_up = x_[j] < hi_[j];
                const bool can_down = x_[j] > lo_[j];
                int dj_dir = 0;
                if (d < -kDualTol && can_up)
                    dj_dir = 1;
                else if (d > kDualTol && can_down)
                    dj_dir = -1;
                if (!dj_dir) continue;
                if (bland) {
                    q = j, dir = dj_dir;
                    break;
                }
                if (std::abs(d) > best) best = std::abs(d), q = j, dir = dj_dir;
            }
            if (q == cols_) return LpStatus::optimal;

            // ratio test
            double theta = hi_[q] - lo_[q]; // bound flip
            std::size_t r = m_;
            double r_abs = 0.0;
            double r_target = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                const double a = at(i, q);
                if (std::abs(a) <= kPivotTol) continue;
                const double rate = -dir * a; // d x_B[i] / d theta
                const std::size_t b = basic_[i];
                double limit, target;
                if (rate < 0) {
                    if (!std::isfinite(lo_[b])) continue;
                    limit = (x_[b] - lo_[b]) / -rate;
                    target = lo_[b];
                } else {
                    if (!std::isfinite(hi_[b])) continue;
                    limit = (hi_[b] - x_[b]) / rate;
                    target = hi_[b];
                }
                limit = std::max(limit, 0.0);
                bool take = limit < theta - 1e-12;
                if (!take && r < m_ && limit <= theta + 1e-12)
                    take = bland ? basic_[i] < basic_[r] : std::abs(a) > r_abs;
                if (take) theta = limit, r = i, r_abs = std::abs(a), r_target = target;
            }
            if (!std::isfinite(theta)) return LpStatus::unbounded;
            ++iterations_;
            degenerate_run = theta <= 1e-12 ? degenerate_run + 1 : 0;
            for (std::size_t i = 0; i < m_; ++i) x_[basic_[i]] += -dir * at(i, q) * theta;
            x_[q] += dir * theta;
            if (r == m_) {
                x_[q] = dir > 0 ? hi_[q] : lo_[q]; // bound flip
                continue;
            }
            const std::size_t leaving = basic_[r];
            const double entering_value = x_[q];
            pivot(r, q);
            x_[leaving] = r_target;
            x_[q] = entering_value;
        }
    }

    // Dual simplex on a dual feasible basis.
    LpStatus dual_loop()
    {
        while (true) {
            if (iterations_ >= opt_.max_iterations) return LpStatus::stalled;
            std::size_t r = m_;
            double worst = 1e-7;
            bool to_lower = true;
            for (std::size_t i = 0; i < m_; ++i) {
                const std::size_t b = basic_[i];
                if (x_[b] < lo_[b] - worst) worst = lo_[b] - x_[b], r = i, to_lower = true;
                else if (x_[b] > hi_[b] + worst) worst = x_[b] - hi_[b], r = i, to_lower = false;
            }
            if (r == m_) return LpStatus::optimal;
            const std::size_t b = basic_[r];
            const double target = to_lower ? lo_[b] : hi_[b];
            std::size_t q = cols_;
            double best_ratio = kInf, best_abs = 0.0;
            for (std::size_t j = 0; j < cols_; ++j) {
                if (is_basic_[j] || lo_[j] == hi_[j]) continue;
                const double a = at(r, j);
                if (std::abs(a) <= kPivotTol) continue;
                const bool can_up = x_[j] < hi_[j];
                const bool can_down = x_[j] > lo_[j];
                // x_B[r] changes by -a * delta; need increase when to_lower
                const bool ok = to_lower ? ((a < 0 && can_up) || (a > 0 && can_down)) : ((a > 0 && can_up) || (a < 0 && can_down));
                if (!ok) continue;
                const double ratio = std::abs(dj_[j]) / std::abs(a);
                if (ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && std::abs(a) > best_abs))
                    best_ratio = ratio, best_abs = std::abs(a), q = j;
            }
            if (q == cols_) return LpStatus::infeasible;
            ++iterations_;
            const double delta = (x_[b] - target) / at(r, q);
            for (std::size_t i = 0; i < m_; ++i) x_[basic_[i]] -= at(i, q) * delta;
            x_[q] += delta;
            const double entering_value = x_[q];
            pivot(r, q);
            x_[b] = target;
            x_[q] = entering_value;
        }
    }

    LpResult finish(LpStatus st)
    {
        LpResult res;
        res.status = st;
        res.iterations = iterations_;
        if (st == LpStatus::optimal) {
            recompute_basics();
            compute_reduced_costs();
        }
        res.primal.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_));
        res.objective = lp_.objective_offset;
        for (std::size_t j = 0; j < n_; ++j) res.objective += lp_.objective[j] * res.primal[j];
        res.reduced_costs.assign(dj_.begin(), dj_.begin() + static_cast<std::ptrdiff_t>(std::min(n_, dj_.size())));
        res.duals.resize(m_);
        for (std::size_t i = 0; i < m_ && logical(i) < dj_.size(); ++i) res.duals[i] = -dj_[logical(i)];
        res.basis.structurals = n_;
        res.basis.basic.assign(basic_.begin(), basic_.end());
        res.basis.at_upper.assign(n_ + m_, 0);
        for (std::size_t j = 0; j < n_ + m_; ++j)
            res.basis.at_upper[j] = !is_basic_[j] && std::isfinite(hi_[j]) && x_[j] == hi_[j] && lo_[j] != hi_[j];
        // a basic artificial cannot be reinstalled; leave the basis empty then
        for (std::size_t b : basic_)
            if (b >= n_ + m_) {
                res.basis.basic.clear();
                break;
            }
        return res;
    }

    const LinearProgram& lp_;
    SimplexOptions opt_;
    std::size_t m_, n_, cols_;
    std::vector<double> tab_, rhs_, lo_, hi_, x_, cost_, dj_;
    std::vector<std::size_t> basic_;
    std::vector<std::uint8_t> is_basic_;
    std::uint64_t iterations_ = 0;
};

} // namespace detail

/// Solve from scratch. Throws std::invalid_argument for malformed programs.
inline LpResult solve_lp(const LinearProgram& lp, const SimplexOptions& options = {})
{
    const auto problems = lp.validate();
    if (!problems.empty()) throw std::invalid_argument("solve_lp: " + problems.front());
    detail::DenseSimplex s(lp, options);
    return s.solve_cold();
}

/// Re-solve starting from the basis of an earlier result; `lp` may have gained
/// rows or changed bounds since then. Falls back to a cold solve when the basis
/// cannot be reused.
inline LpResult warm_solve(const LinearProgram& lp, const LpBasis& basis, const SimplexOptions& options = {})
{
    const auto problems = lp.validate();
    if (!problems.empty()) throw std::invalid_argument("warm_solve: " + problems.front());
    detail::DenseSimplex s(lp, options);
    if (basis.empty()) return s.solve_cold();
    return s.solve_warm(basis);
}

} // namespace cellopt
