#pragma once

// Lower bound on the criterion (per robot, inter-robot constraints dropped)
// and the exhaustive oracle used as ground truth on tiny instances.

#include "cellopt/graph_alg.hpp"
#include "cellopt/reduced_lp.hpp"
#include "cellopt/tuple_engine.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <future>
#include <numeric>

namespace cellopt {

//----------------------------------------------------------------------------//
// Single-robot timing
//----------------------------------------------------------------------------//

/// Convex piecewise linear cost of one duration variable: value at `lo` plus
/// pieces (slope, width) with non-decreasing slopes.
struct DurationCost {
    double lo = 0.0;
    double base = 0.0;
    std::vector<std::pair<double, double>> pieces;
};

/// min sum_i cost_i(d_i) s.t. sum_i d_i = total. With one coupling row the
/// problem is a continuous knapsack: start at the lower ends and buy the
/// cheapest marginal seconds first. nullopt when `total` is out of reach.
inline std::optional<double> min_cost_allocation(const std::vector<DurationCost>& costs, double total)
{
    double value = 0.0, need = total;
    std::vector<std::pair<double, double>> pieces;
    for (const auto& c : costs) {
        value += c.base;
        need -= c.lo;
        pieces.insert(pieces.end(), c.pieces.begin(), c.pieces.end());
    }
    if (need < -kFeasibilityTol) return std::nullopt;
    std::sort(pieces.begin(), pieces.end());
    for (const auto& [slope, width] : pieces) {
        if (need <= 0.0) break;
        const double take = std::min(width, need);
        value += slope * take;
        need -= take;
    }
    if (need > kFeasibilityTol) return std::nullopt;
    return value;
}

/// Energy of one robot following `plan` alone (inter-robot constraints
/// ignored): the optimum of its timing LP. nullopt when no timing exists.
inline std::optional<double> robot_plan_energy(const Robot& robot, std::size_t robot_index, const RobotPlan& plan, double cycle_time,
                                               const PwlTable& pwl)
{
    std::vector<DurationCost> costs;
    costs.reserve(2 * plan.statics.size());
    for (std::size_t i = 0; i < plan.statics.size(); ++i) {
        const std::size_t v = plan.statics[i];
        const std::size_t m = plan.modes[v];
        const double lo = robot.min_static_duration(v, m), hi = robot.statics[v].d_max;
        if (lo > hi) return std::nullopt;
        const double p = robot.statics[v].locations[plan.locations[i]].power[m];
        costs.push_back({lo, p * lo, {{p, hi - lo}}});

        const std::size_t e = plan.moves[i];
        const auto& f = pwl.at(robot_index, e, plan.trajectories[i]);
        DurationCost c{f.d_min, f(f.d_min), {}};
        if (f.d_max > f.d_min)
            for (std::size_t b = 0; b < f.segments.size(); ++b) c.pieces.push_back({f.segments[b].slope, f.breakpoint(b + 1) - f.breakpoint(b)});
        costs.push_back(std::move(c));
    }
    return min_cost_allocation(costs, cycle_time);
}

//----------------------------------------------------------------------------//
// Plan enumeration
//----------------------------------------------------------------------------//

/// All circuits of a robot that fit into the cycle time (exhaustive search).
inline std::vector<Alternative> all_circuits(const Robot& robot, std::size_t robot_index, double cycle_time, bool* exhausted = nullptr)
{
    const auto g = build_search_graph(robot);
    const auto u = all_pairs_min_duration(g);
    auto set = enumerate_alternatives(robot, robot_index, g, u, cycle_time, nullptr, {});
    if (exhausted) *exhausted = set.exhausted;
    return std::move(set.alternatives);
}

/// Number of (location, trajectory) sequences closing the circuit.
inline double count_paths(const Robot& robot, const Alternative& alt)
{
    const std::size_t n = alt.statics.size();
    const std::size_t home_locs = robot.statics[alt.statics.back()].locations.size();
    double total = 0.0;
    for (std::size_t lh = 0; lh < home_locs; ++lh) {
        std::vector<double> ways(home_locs, 0.0);
        ways[lh] = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> next(robot.statics[alt.statics[i]].locations.size(), 0.0);
            for (const auto& t : robot.moves[alt.moves[i]].trajectories)
                if (t.from_location < ways.size()) next[t.to_location] += ways[t.from_location];
            ways = std::move(next);
        }
        total += ways[lh];
    }
    return total;
}

/// Modes usable by static v (the duration window admits the switch time).
inline std::vector<std::size_t> usable_modes(const Robot& robot, std::size_t v)
{
    std::vector<std::size_t> out;
    for (std::size_t m = 0; m < robot.modes.size(); ++m)
        if (robot.min_static_duration(v, m) <= robot.statics[v].d_max) out.push_back(m);
    return out;
}

inline double count_plans(const Robot& robot, const std::vector<Alternative>& circuits)
{
    double modes = 1.0;
    for (std::size_t v = 0; v < robot.statics.size(); ++v) modes *= static_cast<double>(usable_modes(robot, v).size());
    double total = 0.0;
    for (const auto& a : circuits) total += count_paths(robot, a) * modes;
    return total;
}

/// Calls `f(plan)` for every circuit x location/trajectory sequence x mode map.
inline void for_each_plan(const Robot& robot, const std::vector<Alternative>& circuits, const std::function<void(const RobotPlan&)>& f)
{
    std::vector<std::vector<std::size_t>> modes(robot.statics.size());
    for (std::size_t v = 0; v < robot.statics.size(); ++v) modes[v] = usable_modes(robot, v);
    for (const auto& alt : circuits) {
        const std::size_t n = alt.statics.size();
        RobotPlan plan;
        plan.statics = alt.statics;
        plan.moves = alt.moves;
        plan.locations.assign(n, 0);
        plan.trajectories.assign(n, 0);
        plan.modes.assign(robot.statics.size(), 0);

        std::function<void(std::size_t)> pick_mode = [&](std::size_t v) {
            if (v == robot.statics.size()) {
                f(plan);
                return;
            }
            for (std::size_t m : modes[v]) {
                plan.modes[v] = m;
                pick_mode(v + 1);
            }
        };
        const std::size_t home_locs = robot.statics[alt.statics.back()].locations.size();
        std::function<void(std::size_t, std::size_t, std::size_t)> walk = [&](std::size_t i, std::size_t at, std::size_t lh) {
            if (i == n) {
                pick_mode(0);
                return;
            }
            const auto& tr = robot.moves[alt.moves[i]].trajectories;
            for (std::size_t t = 0; t < tr.size(); ++t) {
                if (tr[t].from_location != at) continue;
                if (i + 1 == n && tr[t].to_location != lh) continue;
                plan.trajectories[i] = t;
                plan.locations[i] = tr[t].to_location;
                walk(i + 1, tr[t].to_location, lh);
            }
        };
        for (std::size_t lh = 0; lh < home_locs; ++lh) walk(0, lh, lh);
    }
}

//----------------------------------------------------------------------------//
// Lower bound
//----------------------------------------------------------------------------//

enum class BoundMethod { exact_enumeration, mode_relaxation, location_relaxation, infeasible };

inline const char* to_string(BoundMethod m)
{
    switch (m) {
    case BoundMethod::exact_enumeration: return "exact-enumeration";
    case BoundMethod::mode_relaxation: return "mode-relaxation";
    case BoundMethod::location_relaxation: return "location-relaxation";
    default: return "infeasible";
    }
}

struct RobotBound {
    double value = kInf;
    BoundMethod method = BoundMethod::infeasible;
    double combinations = 0.0; // plans enumerated (or counted when over budget)
    std::optional<RobotPlan> argmin; // exact mode only
    std::string note;
};

struct BoundReport {
    std::vector<RobotBound> robots;
    double total = 0.0;
    double wall_time = 0.0;
};

struct BoundOptions {
    std::size_t segments = 10;
    double budget = 1e5; // plans per robot before relaxing
    std::size_t threads = 1;
};

namespace detail {

// One mode with the cheapest power of every location and no switch time.
inline Robot relax_modes(const Robot& robot)
{
    Robot out = robot;
    out.modes = {PowerMode{"relaxed", 0.0}};
    for (auto& v : out.statics)
        for (auto& l : v.locations) l.power = {*std::min_element(l.power.begin(), l.power.end())};
    return out;
}

// Lower convex hull of the breakpoints of every trajectory of a move.
inline DurationCost move_envelope(const PwlTable& pwl, std::size_t r, std::size_t e, std::size_t count)
{
    std::vector<std::pair<double, double>> pts;
    for (std::size_t t = 0; t < count; ++t) {
        const auto& f = pwl.at(r, e, t);
        for (double d : f.breakpoints()) pts.push_back({d, f(d)});
    }
    std::sort(pts.begin(), pts.end());
    std::vector<std::pair<double, double>> hull;
    for (const auto& p : pts) {
        if (!hull.empty() && p.first - hull.back().first <= 0.0) continue; // same abscissa: keep the lowest (sorted first)
        while (hull.size() >= 2) {
            const auto& a = hull[hull.size() - 2];
            const auto& b = hull.back();
            // drop b when it lies on or above the chord a-p
            if ((b.second - a.second) * (p.first - a.first) >= (p.second - a.second) * (b.first - a.first))
                hull.pop_back();
            else
                break;
        }
        hull.push_back(p);
    }
    DurationCost c{hull.front().first, hull.front().second, {}};
    for (std::size_t k = 1; k < hull.size(); ++k) {
        const double w = hull[k].first - hull[k - 1].first;
        c.pieces.push_back({(hull[k].second - hull[k - 1].second) / w, w});
    }
    return c;
}

inline RobotBound location_relaxed_bound(const Robot& robot, std::size_t r, const std::vector<Alternative>& circuits, double ct,
                                         const PwlTable& pwl)
{
    RobotBound out;
    out.method = BoundMethod::location_relaxation;
    for (const auto& alt : circuits) {
        std::vector<DurationCost> costs;
        for (std::size_t i = 0; i < alt.statics.size(); ++i) {
            const auto& v = robot.statics[alt.statics[i]];
            double p = kInf;
            for (const auto& l : v.locations) p = std::min(p, *std::min_element(l.power.begin(), l.power.end()));
            costs.push_back({v.d_min, p * v.d_min, {{p, v.d_max - v.d_min}}});
            costs.push_back(move_envelope(pwl, r, alt.moves[i], robot.moves[alt.moves[i]].trajectories.size()));
        }
        if (auto val = min_cost_allocation(costs, ct)) out.value = std::min(out.value, *val);
        out.combinations += 1.0;
    }
    return out;
}

} // namespace detail

/// Minimum energy of a robot alone. Exact enumeration when the number of plans
/// is within budget; otherwise power modes (and then locations) are relaxed,
/// which can only lower the value.
inline RobotBound robot_lower_bound(const Robot& robot, double cycle_time, const BoundOptions& opt = {})
{
    Instance solo;
    solo.cycle_time = cycle_time;
    solo.robots = {robot};
    const PwlTable pwl(solo, opt.segments);
    RobotBound out;
    bool exhausted = false;
    const auto circuits = all_circuits(robot, 0, cycle_time, &exhausted);
    if (circuits.empty()) {
        out.note = exhausted ? "no circuit fits into the cycle time" : "circuit search budget exhausted";
        if (!exhausted) {
            out.value = 0.0; // nothing proven
            out.method = BoundMethod::location_relaxation;
        }
        return out;
    }
    auto enumerate = [&](const Robot& rb, BoundMethod method) {
        RobotBound b;
        b.method = method;
        for_each_plan(rb, circuits, [&](const RobotPlan& plan) {
            b.combinations += 1.0;
            const auto v = robot_plan_energy(rb, 0, plan, cycle_time, pwl);
            if (v && *v < b.value) {
                b.value = *v;
                if (method == BoundMethod::exact_enumeration) b.argmin = plan;
            }
        });
        return b;
    };
    const double plans = count_plans(robot, circuits);
    if (plans <= opt.budget) {
        out = enumerate(robot, BoundMethod::exact_enumeration);
    } else {
        const Robot relaxed = detail::relax_modes(robot);
        if (count_plans(relaxed, circuits) <= opt.budget)
            out = enumerate(relaxed, BoundMethod::mode_relaxation);
        else
            out = detail::location_relaxed_bound(robot, 0, circuits, cycle_time, pwl);
        out.note = "plans " + detail::fmt_num(plans) + " exceed budget " + detail::fmt_num(opt.budget);
    }
    if (out.value == kInf) {
        out.method = BoundMethod::infeasible;
        out.note = "no timing of any plan fits into the cycle time";
    }
    return out;
}

/// Sum of the per-robot bounds.
inline BoundReport instance_lower_bound(const Instance& inst, const BoundOptions& opt = {})
{
    const auto t0 = std::chrono::steady_clock::now();
    BoundReport rep;
    const std::size_t nr = inst.robots.size();
    rep.robots.resize(nr);
    if (opt.threads > 1 && nr > 1) {
        std::vector<std::future<void>> fs;
        std::atomic<std::size_t> next{0};
        for (std::size_t w = 0; w < std::min(opt.threads, nr); ++w)
            fs.push_back(std::async(std::launch::async, [&] {
                for (std::size_t r = next++; r < nr; r = next++) rep.robots[r] = robot_lower_bound(inst.robots[r], inst.cycle_time, opt);
            }));
        for (auto& f : fs) f.get();
    } else {
        for (std::size_t r = 0; r < nr; ++r) rep.robots[r] = robot_lower_bound(inst.robots[r], inst.cycle_time, opt);
    }
    for (const auto& b : rep.robots) rep.total += b.value;
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

//----------------------------------------------------------------------------//
// Exhaustive oracle
//----------------------------------------------------------------------------//

/// The instance is too large for exact search.
class OracleLimitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OracleOptions {
    std::size_t segments = 10;
    double max_product = 1e6; // product over robots of their plan counts
    int depth_cap = 20;       // collision branching depth
};

struct OracleResult {
    bool feasible = false;
    std::optional<Solution> solution;
    std::optional<Tuple> tuple;
    std::uint64_t leaves = 0;    // tuples whose joint LP was solved
    std::uint64_t lp_solves = 0;
    std::string note;
};

namespace detail {

class OracleSearch {
public:
    OracleSearch(const Instance& inst, const OracleOptions& opt) : inst_(inst), opt_(opt), pwl_(inst, opt.segments) {}

    OracleResult run()
    {
        const std::size_t nr = inst_.robots.size();
        double product = 1.0;
        std::vector<std::vector<Alternative>> circuits(nr);
        for (std::size_t r = 0; r < nr; ++r) {
            bool exhausted = false;
            circuits[r] = all_circuits(inst_.robots[r], r, inst_.cycle_time, &exhausted);
            if (!exhausted) throw OracleLimitError("circuit enumeration of " + inst_.robots[r].id + " did not finish");
            if (circuits[r].empty()) {
                result_.note = inst_.robots[r].id + ": no circuit fits into the cycle time";
                return result_;
            }
            product *= count_plans(inst_.robots[r], circuits[r]);
        }
        if (product > opt_.max_product)
            throw OracleLimitError("plan product " + fmt_num(product) + " exceeds " + fmt_num(opt_.max_product));

        plans_.resize(nr);
        for (std::size_t r = 0; r < nr; ++r) {
            for_each_plan(inst_.robots[r], circuits[r], [&](const RobotPlan& p) {
                if (auto v = robot_plan_energy(inst_.robots[r], r, p, inst_.cycle_time, pwl_)) plans_[r].push_back({*v, p});
            });
            if (plans_[r].empty()) {
                result_.note = inst_.robots[r].id + ": no plan can be timed within the cycle time";
                return result_;
            }
            std::stable_sort(plans_[r].begin(), plans_[r].end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        }
        rest_.assign(nr + 1, 0.0);
        for (std::size_t r = nr; r-- > 0;) rest_[r] = rest_[r + 1] + plans_[r].front().first;
        current_.robots.resize(nr);
        dfs(0, 0.0);
        if (best_) {
            result_.feasible = true;
            best_->metadata.solver = "exhaustive-oracle";
            result_.solution = best_;
            result_.tuple = best_tuple_;
        } else if (result_.note.empty()) {
            result_.note = "no tuple admits a feasible timing";
        }
        return result_;
    }

private:
    double incumbent() const { return best_ ? best_->total_energy : kInf; }

    void dfs(std::size_t r, double partial)
    {
        if (r == inst_.robots.size()) {
            if (!violated_compat_pairs(inst_, current_).empty()) return;
            ++result_.leaves;
            solve(current_, {}, 0);
            return;
        }
        for (const auto& [value, plan] : plans_[r]) {
            if (partial + value + rest_[r + 1] >= incumbent()) break;
            current_.robots[r] = plan;
            dfs(r + 1, partial + value);
        }
    }

    // Joint timing LP with exact branching over collision orders.
    void solve(const Tuple& t, std::vector<Resolution> res, int depth)
    {
        ReducedModel m = build_reduced_lp(inst_, pwl_, t, res);
        if (!m.bounds_consistent()) return;
        const LpResult lp = solve_lp(m.lp);
        ++result_.lp_solves;
        if (lp.status != LpStatus::optimal || lp.objective >= incumbent()) return;
        Solution sol = extract_solution(inst_, pwl_, t, m, lp.primal);
        const GammaResult g = compute_gamma(inst_, sol);
        if (g.gamma <= kGammaTol) {
            if (sol.total_energy < incumbent()) {
                best_ = std::move(sol);
                best_tuple_ = t;
            }
            return;
        }
        if (depth >= opt_.depth_cap) throw OracleLimitError("collision branching deeper than " + std::to_string(opt_.depth_cap));
        const bool first = g.upsilon <= g.mu;
        for (bool geq : {first, !first}) {
            auto child = res;
            child.push_back({g.argmax->a_i, g.argmax->a_j, g.argmax->n, geq});
            solve(t, std::move(child), depth + 1);
        }
    }

    const Instance& inst_;
    OracleOptions opt_;
    PwlTable pwl_;
    std::vector<std::vector<std::pair<double, RobotPlan>>> plans_;
    std::vector<double> rest_;
    Tuple current_;
    std::optional<Solution> best_;
    std::optional<Tuple> best_tuple_;
    OracleResult result_;
};

} // namespace detail

/// Global optimum over every tuple and mode map (on the linearized energy).
/// Throws OracleLimitError when the instance is too large to search exactly.
inline OracleResult exhaustive_oracle(const Instance& inst, const OracleOptions& opt = {})
{
    detail::OracleSearch search(inst, opt);
    return search.run();
}

} // namespace cellopt
