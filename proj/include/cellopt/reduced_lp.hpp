#pragma once

// Timing LP of a fixed tuple, collision measure and the iterative
// resolve-the-worst-collision evaluation loop.
//
// Two equivalent formulations are built:
//   literal  - s_a and d_a per activity, one epigraph variable per move bounded
//              below by every linear piece, explicit precedence rows;
//   compact  - one start variable per robot, static durations, and per move
//              one variable per linear piece (d_e = d_min + sum of pieces,
//              cost = piece slope). Starts are affine in these columns.
// Both give the same optimum; the compact one has a handful of rows and is the
// one used inside the optimizer.

#include "cellopt/cell_model.hpp"
#include "cellopt/lp_core.hpp"
#include "cellopt/tuple_engine.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cellopt {

/// Feasibility tolerance of the collision measure (seconds).
inline constexpr double kGammaTol = 1e-6;

struct AffineExpr {
    double constant = 0.0;
    std::vector<LpTerm> terms;

    AffineExpr& add(const AffineExpr& o, double scale = 1.0)
    {
        constant += scale * o.constant;
        for (const auto& t : o.terms) terms.push_back({t.column, scale * t.coeff});
        return *this;
    }

    double value(const std::vector<double>& x) const
    {
        double v = constant;
        for (const auto& t : terms) v += t.coeff * x[t.column];
        return v;
    }

    static AffineExpr column(std::size_t j) { return {0.0, {{j, 1.0}}}; }
};

/// Merge duplicate columns and drop zero coefficients.
inline std::vector<LpTerm> normalized_terms(std::vector<LpTerm> terms)
{
    std::sort(terms.begin(), terms.end(), [](const LpTerm& a, const LpTerm& b) { return a.column < b.column; });
    std::vector<LpTerm> out;
    for (const auto& t : terms) {
        if (!out.empty() && out.back().column == t.column)
            out.back().coeff += t.coeff;
        else
            out.push_back(t);
    }
    std::erase_if(out, [](const LpTerm& t) { return t.coeff == 0.0; });
    return out;
}

enum class ReducedForm { compact, literal };

/// (a_i, a_j, n): ">=" means s_j + nCT >= s_i + d_i, "<=" means s_j + d_j + nCT <= s_i.
struct Resolution {
    ActivityRef a_i;
    ActivityRef a_j;
    int n = 0;
    bool geq = true;

    bool operator==(const Resolution&) const = default;
};

struct ReducedModel {
    LinearProgram lp;
    ReducedForm form = ReducedForm::compact;
    double cycle_time = 0.0;
    // per robot, per circuit position
    std::vector<std::vector<AffineExpr>> static_start, static_dur, move_start, move_dur;
    std::vector<PlanIndex> index;
    std::size_t resolution_rows = 0;

    const AffineExpr& start(const ActivityRef& a) const
    {
        return a.is_static() ? static_start[a.robot][index[a.robot].static_pos[a.index]]
                             : move_start[a.robot][index[a.robot].move_pos[a.index]];
    }

    const AffineExpr& duration(const ActivityRef& a) const
    {
        return a.is_static() ? static_dur[a.robot][index[a.robot].static_pos[a.index]]
                             : move_dur[a.robot][index[a.robot].move_pos[a.index]];
    }

    /// Column bounds that are empty (the tuple cannot be timed at all).
    bool bounds_consistent() const
    {
        for (std::size_t j = 0; j < lp.column_count(); ++j)
            if (lp.lower[j] > lp.upper[j]) return false;
        return true;
    }

    void add_row(const AffineExpr& lhs, Relation rel, double rhs, std::string name)
    {
        lp.add_row(normalized_terms(lhs.terms), rel, rhs - lhs.constant, std::move(name));
    }

    void add_resolution(const Resolution& r)
    {
        AffineExpr e;
        const double nct = r.n * cycle_time;
        if (r.geq) {
            // s_j - s_i - d_i >= -nCT
            e.add(start(r.a_j)).add(start(r.a_i), -1.0).add(duration(r.a_i), -1.0);
            add_row(e, Relation::greater_equal, -nct, "colres_" + std::to_string(resolution_rows));
        } else {
            // s_j + d_j - s_i <= -nCT
            e.add(start(r.a_j)).add(duration(r.a_j)).add(start(r.a_i), -1.0);
            add_row(e, Relation::less_equal, -nct, "colres_" + std::to_string(resolution_rows));
        }
        ++resolution_rows;
    }
};

/// Timing LP of a tuple with the given collision resolutions.
inline ReducedModel build_reduced_lp(const Instance& inst, const PwlTable& pwl, const Tuple& tuple,
                                     const std::vector<Resolution>& resolutions = {}, ReducedForm form = ReducedForm::compact)
{
    ReducedModel m;
    m.form = form;
    m.cycle_time = inst.cycle_time;
    const double ct = inst.cycle_time;
    const std::size_t nr = inst.robots.size();
    m.static_start.resize(nr);
    m.static_dur.resize(nr);
    m.move_start.resize(nr);
    m.move_dur.resize(nr);
    auto& lp = m.lp;

    for (std::size_t r = 0; r < nr; ++r) {
        const auto& robot = inst.robots[r];
        const auto& plan = tuple.robots[r];
        m.index.emplace_back(robot, plan);
        const std::size_t n = plan.statics.size();
        const std::string rt = "r" + std::to_string(r);
        auto& ss = m.static_start[r];
        auto& sd = m.static_dur[r];
        auto& ms = m.move_start[r];
        auto& md = m.move_dur[r];
        ss.resize(n);
        sd.resize(n);
        ms.resize(n);
        md.resize(n);

        // durations
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t v = plan.statics[i];
            const auto& act = robot.statics[v];
            const std::size_t mode = plan.modes[v];
            const double p = act.locations[plan.locations[i]].power[mode];
            const std::size_t col = lp.add_column(p, robot.min_static_duration(v, mode), act.d_max, "d_" + rt + "_v" + std::to_string(v));
            sd[i] = AffineExpr::column(col);

            const std::size_t e = plan.moves[i];
            const auto& traj = robot.moves[e].trajectories[plan.trajectories[i]];
            const auto& f = pwl.at(r, e, plan.trajectories[i]);
            const std::string et = rt + "_e" + std::to_string(e);
            if (form == ReducedForm::compact) {
                AffineExpr d{traj.d_min, {}};
                if (traj.d_max > traj.d_min) {
                    for (std::size_t b = 0; b < f.segments.size(); ++b) {
                        const double width = f.breakpoint(b + 1) - f.breakpoint(b);
                        const std::size_t c = lp.add_column(f.segments[b].slope, 0.0, width, "p_" + et + "_b" + std::to_string(b));
                        d.terms.push_back({c, 1.0});
                    }
                }
                lp.objective_offset += f(traj.d_min);
                md[i] = std::move(d);
            } else {
                const std::size_t dcol = lp.add_column(0.0, traj.d_min, traj.d_max, "d_" + et);
                const std::size_t wcol = lp.add_column(1.0, 0.0, kInf, "W_" + et);
                md[i] = AffineExpr::column(dcol);
                for (std::size_t b = 0; b < f.segments.size(); ++b)
                    lp.add_row({{dcol, f.segments[b].slope}, {wcol, -1.0}}, Relation::less_equal, -f.segments[b].intercept,
                               "epi_" + et + "_b" + std::to_string(b));
            }
        }

        // starts
        if (form == ReducedForm::compact) {
            const std::size_t s0 = lp.add_column(0.0, 0.0, kInf, "s_" + rt);
            AffineExpr t = AffineExpr::column(s0);
            for (std::size_t i = 0; i < n; ++i) {
                ms[i] = t;
                t.add(md[i]);
                ss[i] = t;
                t.add(sd[i]);
            }
            AffineExpr total;
            for (std::size_t i = 0; i < n; ++i) total.add(sd[i]).add(md[i]);
            m.add_row(total, Relation::equal, ct, "cycle_" + rt);
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                ms[i] = AffineExpr::column(lp.add_column(0.0, 0.0, kInf, "s_" + rt + "_e" + std::to_string(plan.moves[i])));
                ss[i] = AffineExpr::column(lp.add_column(0.0, 0.0, kInf, "s_" + rt + "_v" + std::to_string(plan.statics[i])));
            }
            for (std::size_t i = 0; i < n; ++i) {
                AffineExpr e;
                e.add(ss[i]).add(ms[i], -1.0).add(md[i], -1.0);
                m.add_row(e, Relation::equal, 0.0, "prec_" + rt + "_" + std::to_string(2 * i));
                if (i > 0) {
                    AffineExpr g;
                    g.add(ms[i]).add(ss[i - 1], -1.0).add(sd[i - 1], -1.0);
                    m.add_row(g, Relation::equal, 0.0, "prec_" + rt + "_" + std::to_string(2 * i - 1));
                }
            }
            AffineExpr close;
            close.add(ms[0]).add(ss[n - 1], -1.0).add(sd[n - 1], -1.0);
            m.add_row(close, Relation::equal, -ct, "precend_" + rt);
        }
    }

    for (std::size_t k = 0; k < inst.time_lags.size(); ++k) {
        const auto& lag = inst.time_lags[k];
        if (!lag.from.is_static() && m.index[lag.from.robot].move_pos[lag.from.index] == PlanIndex::npos) continue;
        if (!lag.to.is_static() && m.index[lag.to.robot].move_pos[lag.to.index] == PlanIndex::npos) continue;
        AffineExpr e;
        e.add(m.start(lag.to)).add(m.start(lag.from), -1.0);
        m.add_row(e, Relation::greater_equal, lag.length - ct * lag.height, "lag_" + std::to_string(k));
    }
    for (const auto& r : resolutions) m.add_resolution(r);
    return m;
}

/// Schedule read from an LP point; movement energies from the linearization.
inline Solution extract_solution(const Instance& inst, const PwlTable& pwl, const Tuple& tuple, const ReducedModel& m,
                                 const std::vector<double>& x)
{
    Solution sol;
    sol.status = SolutionStatus::feasible;
    sol.segments = pwl.segments();
    for (std::size_t r = 0; r < inst.robots.size(); ++r) {
        const auto& robot = inst.robots[r];
        const auto& plan = tuple.robots[r];
        RobotSchedule sched;
        for (std::size_t i = 0; i < plan.statics.size(); ++i) {
            const std::size_t e = plan.moves[i];
            const auto& traj = robot.moves[e].trajectories[plan.trajectories[i]];
            MoveSelection mv;
            mv.activity = e;
            mv.trajectory = plan.trajectories[i];
            mv.start = m.move_start[r][i].value(x);
            mv.duration = std::clamp(m.move_dur[r][i].value(x), traj.d_min, traj.d_max);
            mv.energy = pwl.at(r, e, plan.trajectories[i])(mv.duration);
            mv.exact_energy = energy_eval(traj.energy, mv.duration);
            sched.moves.push_back(mv);

            const std::size_t v = plan.statics[i];
            StaticSelection st;
            st.activity = v;
            st.location = plan.locations[i];
            st.mode = plan.modes[v];
            st.start = m.static_start[r][i].value(x);
            st.duration = m.static_dur[r][i].value(x);
            st.energy = robot.statics[v].locations[st.location].power[st.mode] * st.duration;
            sched.statics.push_back(st);
        }
        sol.robots.push_back(std::move(sched));
    }
    sol.recompute_totals();
    return sol;
}

//----------------------------------------------------------------------------//
// Collision measure
//----------------------------------------------------------------------------//

struct CollisionTriple {
    ActivityRef a_i;
    ActivityRef a_j;
    int n = 0;

    auto operator<=>(const CollisionTriple&) const = default;
};

struct GammaResult {
    double gamma = -kInf;
    std::optional<CollisionTriple> argmax;
    double upsilon = 0.0;
    double mu = 0.0;
};

/// Collision quads whose two items are both selected by the solution.
inline std::vector<std::size_t> active_collisions(const Instance& inst, const Solution& sol)
{
    const TimingView view(inst, sol);
    std::vector<std::size_t> out;
    auto item = [&](const ActivityRef& a) -> std::optional<std::size_t> {
        if (!view.executed(a)) return std::nullopt;
        const auto& s = sol.robots[a.robot];
        return a.is_static() ? s.statics[view.static_pos[a.robot][a.index]].location : s.moves[view.move_pos[a.robot][a.index]].trajectory;
    };
    for (std::size_t k = 0; k < inst.collisions.size(); ++k) {
        const auto& c = inst.collisions[k];
        const auto g1 = item(c.activity_1), g2 = item(c.activity_2);
        if (g1 && g2 && *g1 == c.item_1 && *g2 == c.item_2) out.push_back(k);
    }
    return out;
}

/// Gamma = max over active pairs and n in [-|R|, |R|] of min(upsilon, mu) with
/// upsilon = s_i + d_i - s_j - nCT and mu = s_j + d_j + nCT - s_i. Ties go to
/// the lexicographically smallest (a_i, a_j, n).
inline GammaResult compute_gamma(const Instance& inst, const Solution& sol)
{
    const TimingView view(inst, sol);
    auto sd = [&](const ActivityRef& a) {
        const auto& s = sol.robots[a.robot];
        if (a.is_static()) {
            const auto& x = s.statics[view.static_pos[a.robot][a.index]];
            return std::pair{x.start, x.duration};
        }
        const auto& x = s.moves[view.move_pos[a.robot][a.index]];
        return std::pair{x.start, x.duration};
    };
    GammaResult g;
    const int nr = static_cast<int>(inst.robots.size());
    const double ct = inst.cycle_time;
    for (std::size_t k : active_collisions(inst, sol)) {
        const auto& c = inst.collisions[k];
        const auto [si, di] = sd(c.activity_1);
        const auto [sj, dj] = sd(c.activity_2);
        for (int n = -nr; n <= nr; ++n) {
            const double ups = si + di - sj - n * ct;
            const double mu = sj + dj + n * ct - si;
            const double v = std::min(ups, mu);
            const CollisionTriple t{c.activity_1, c.activity_2, n};
            if (v > g.gamma || (v == g.gamma && g.argmax && t < *g.argmax)) {
                g.gamma = v;
                g.argmax = t;
                g.upsilon = ups;
                g.mu = mu;
            }
        }
    }
    return g;
}

inline GammaResult compute_gamma(const Instance& inst, const Tuple&, const Solution& sol) { return compute_gamma(inst, sol); }

/// The resolution of the worst collision: ">=" when upsilon <= mu.
inline Resolution resolve_worst_collision(std::vector<Resolution>& resolutions, const GammaResult& g)
{
    if (!g.argmax || !(g.gamma > 0.0)) throw std::logic_error("resolve_worst_collision: no active collision");
    Resolution r{g.argmax->a_i, g.argmax->a_j, g.argmax->n, g.upsilon <= g.mu};
    resolutions.push_back(r);
    return r;
}

//----------------------------------------------------------------------------//
// Tuple evaluation
//----------------------------------------------------------------------------//

enum class EvaluationStatus { feasible, lp_infeasible, collision_unresolvable };

inline const char* to_string(EvaluationStatus s)
{
    switch (s) {
    case EvaluationStatus::feasible: return "feasible";
    case EvaluationStatus::lp_infeasible: return "lp_infeasible";
    default: return "collision_unresolvable";
    }
}

struct TupleEvaluation {
    EvaluationStatus status = EvaluationStatus::lp_infeasible;
    std::optional<Solution> solution;
    std::size_t lp_call_count = 0;
    std::size_t added_constraint_count = 0;
    std::vector<Resolution> resolutions;
    std::vector<double> objective_trace; // LP optimum after each call
};

struct EvaluationOptions {
    ReducedForm form = ReducedForm::compact;
    bool warm_start = true;
    SimplexOptions simplex{};
    /// Called with every LP before it is solved (debug dumps).
    std::function<void(const LinearProgram&, std::size_t call)> on_lp;
};

/// Solve the timing LP, then repeatedly constrain the worst collision until
/// none is left. An infeasible first LP means the tuple cannot be timed
/// (lp_infeasible); infeasibility after added resolutions, or running past
/// |C_T|(2|R|+1) resolutions, gives collision_unresolvable.
inline TupleEvaluation evaluate_tuple(const Instance& inst, const PwlTable& pwl, const Tuple& tuple, const EvaluationOptions& opt = {})
{
    TupleEvaluation ev;
    ReducedModel model = build_reduced_lp(inst, pwl, tuple, {}, opt.form);
    if (!model.bounds_consistent()) return ev;
    if (opt.on_lp) opt.on_lp(model.lp, 0);
    LpResult res = solve_lp(model.lp, opt.simplex);
    ev.lp_call_count = 1;
    std::size_t cap = 0;
    bool cap_known = false;
    while (true) {
        if (res.status != LpStatus::optimal) {
            ev.status = ev.added_constraint_count == 0 ? EvaluationStatus::lp_infeasible : EvaluationStatus::collision_unresolvable;
            return ev;
        }
        ev.objective_trace.push_back(res.objective);
        Solution sol = extract_solution(inst, pwl, tuple, model, res.primal);
        if (!cap_known) {
            cap = active_collisions(inst, sol).size() * (2 * inst.robots.size() + 1);
            cap_known = true;
        }
        const GammaResult g = compute_gamma(inst, sol);
        if (g.gamma <= kGammaTol) {
            ev.status = EvaluationStatus::feasible;
            ev.solution = std::move(sol);
            return ev;
        }
        if (ev.added_constraint_count >= cap) {
            ev.status = EvaluationStatus::collision_unresolvable;
            return ev;
        }
        model.add_resolution(resolve_worst_collision(ev.resolutions, g));
        ++ev.added_constraint_count;
        if (opt.on_lp) opt.on_lp(model.lp, ev.lp_call_count);
        res = opt.warm_start ? warm_solve(model.lp, res.basis, opt.simplex) : solve_lp(model.lp, opt.simplex);
        ++ev.lp_call_count;
    }
}

} // namespace cellopt
