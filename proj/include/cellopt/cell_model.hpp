#pragma once

// Robotic cell domain model: instance description, movement energy functions,
// chord linearization, instance validation and a full schedule checker.
//
// Indices are used everywhere inside the model. String ids are kept only for
// reporting and serialization.

#include "cellopt/common.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdio>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace cellopt {

//----------------------------------------------------------------------------//
// Energy of movements
//----------------------------------------------------------------------------//

/// f(d) = C1 d + C2 + C3/d + C4/d^2 + C5/d^3.
struct EnergyFunction {
    std::array<double, 5> coeffs{};

    double operator()(double d) const
    {
        const double inv = 1.0 / d;
        return coeffs[0] * d + coeffs[1] + inv * (coeffs[2] + inv * (coeffs[3] + inv * coeffs[4]));
    }

    bool operator==(const EnergyFunction&) const = default;
};

/// Energy of a movement lasting `d` seconds. Throws std::domain_error for d <= 0.
inline double energy_eval(const EnergyFunction& f, double d)
{
    if (!(d > 0.0)) throw std::domain_error("energy_eval: duration must be positive, got " + std::to_string(d));
    return f(d);
}

/// Number of uniform sample points used by the numeric convexity check.
inline constexpr int kConvexitySamples = 64;

/// Second differences of f at 64 uniform points of [lo, hi]; returns the most
/// negative one (>= -kNumericTol means convex for our purposes).
inline double min_second_difference(const EnergyFunction& f, double lo, double hi)
{
    if (!(hi > lo)) return 0.0;
    const double h = (hi - lo) / (kConvexitySamples - 1);
    double worst = kInf;
    double prev = f(lo), cur = f(lo + h);
    for (int i = 2; i < kConvexitySamples; ++i) {
        const double next = f(i == kConvexitySamples - 1 ? hi : lo + i * h);
        worst = std::min(worst, prev - 2.0 * cur + next);
        prev = cur;
        cur = next;
    }
    return worst;
}

inline double min_sampled_value(const EnergyFunction& f, double lo, double hi)
{
    double worst = kInf;
    for (int i = 0; i < kConvexitySamples; ++i) {
        const double d = (hi > lo) ? lo + (hi - lo) * i / (kConvexitySamples - 1) : lo;
        worst = std::min(worst, f(d));
    }
    return worst;
}

struct PwlSegment {
    double slope = 0.0;     // watts
    double intercept = 0.0; // joules

    double operator()(double d) const { return slope * d + intercept; }
};

/// Convex piecewise linear over-approximation max_b(k_b d + q_b) built from
/// chords through uniformly spaced breakpoints of [d_min, d_max].
struct PwlApprox {
    std::vector<PwlSegment> segments;
    double d_min = 0.0;
    double d_max = 0.0;

    double operator()(double d) const
    {
        double best = -kInf;
        for (const auto& s : segments) best = std::max(best, s(d));
        return best;
    }

    std::vector<double> breakpoints() const
    {
        std::vector<double> pts(segments.size() + 1);
        for (std::size_t b = 0; b <= segments.size(); ++b) pts[b] = breakpoint(b);
        return pts;
    }

    double breakpoint(std::size_t b) const
    {
        if (b == segments.size()) return d_max;
        return d_min + (d_max - d_min) * static_cast<double>(b) / static_cast<double>(segments.size());
    }

    /// Largest value over the domain (a convex function peaks at an end).
    double max_value() const { return std::max((*this)(d_min), (*this)(d_max)); }
};

/// Chord linearization with `segments` pieces. Throws std::invalid_argument on
/// bad arguments and std::domain_error when f is not convex on the domain.
inline PwlApprox pwl_approximate(const EnergyFunction& f, double d_min, double d_max, std::size_t segments)
{
    if (segments < 1) throw std::invalid_argument("pwl_approximate: need at least one segment");
    if (!(d_min > 0.0) || d_max < d_min) throw std::invalid_argument("pwl_approximate: invalid domain");
    PwlApprox out;
    out.d_min = d_min;
    out.d_max = d_max;
    if (d_max == d_min) {
        out.segments.push_back({0.0, f(d_min)});
        return out;
    }
    if (min_second_difference(f, d_min, d_max) < -kNumericTol)
        throw std::domain_error("pwl_approximate: energy function is not convex on [" + std::to_string(d_min) + ", " +
                                std::to_string(d_max) + "]");
    out.segments.resize(segments);
    double x0 = d_min, y0 = f(d_min);
    for (std::size_t b = 0; b < segments; ++b) {
        const double x1 = out.breakpoint(b + 1);
        const double y1 = f(x1);
        const double k = (y1 - y0) / (x1 - x0);
        out.segments[b] = {k, y0 - k * x0};
        x0 = x1;
        y0 = y1;
    }
    return out;
}

//----------------------------------------------------------------------------//
// Instance
//----------------------------------------------------------------------------//

enum class ActivityKind { static_activity = 0, dynamic_activity = 1 };

/// Global reference to an activity: robot index, kind, index inside the robot.
/// Ordering is lexicographic and is the canonical activity order.
struct ActivityRef {
    std::size_t robot = 0;
    ActivityKind kind = ActivityKind::static_activity;
    std::size_t index = 0;

    bool is_static() const { return kind == ActivityKind::static_activity; }
    auto operator<=>(const ActivityRef&) const = default;
};

inline ActivityRef static_ref(std::size_t robot, std::size_t index) { return {robot, ActivityKind::static_activity, index}; }
inline ActivityRef dynamic_ref(std::size_t robot, std::size_t index) { return {robot, ActivityKind::dynamic_activity, index}; }

struct PowerMode {
    std::string id;
    double min_switch_time = 0.0;
};

struct Location {
    std::string id;
    std::vector<double> power; // watts, indexed by the owning robot's mode index
};

struct StaticActivity {
    std::string id;
    double d_min = 0.0;
    double d_max = 0.0;
    std::vector<Location> locations;
};

struct Trajectory {
    std::string id;
    std::size_t from_location = 0; // index into the source activity's locations
    std::size_t to_location = 0;   // index into the target activity's locations
    double d_min = 0.0;
    double d_max = 0.0;
    EnergyFunction energy;
};

struct DynamicActivity {
    std::string id;
    std::size_t from = 0; // static activity index
    std::size_t to = 0;
    bool optional = false;
    std::vector<Trajectory> trajectories;
};

struct Robot {
    std::string id;
    std::vector<StaticActivity> statics;
    std::vector<DynamicActivity> moves;
    std::vector<PowerMode> modes;
    std::size_t home = 0;

    /// Lower duration bound of static activity `v` in mode `m`.
    double min_static_duration(std::size_t v, std::size_t m) const
    {
        return std::max(statics[v].d_min, modes[m].min_switch_time);
    }

    /// Index of the mode with the smallest switch time (first on ties).
    std::size_t fastest_mode() const
    {
        std::size_t best = 0;
        for (std::size_t m = 1; m < modes.size(); ++m)
            if (modes[m].min_switch_time < modes[best].min_switch_time) best = m;
        return best;
    }

    /// Dynamic activity from -> to, if any.
    std::optional<std::size_t> find_move(std::size_t from, std::size_t to) const
    {
        for (std::size_t e = 0; e < moves.size(); ++e)
            if (moves[e].from == from && moves[e].to == to) return e;
        return std::nullopt;
    }

    /// Fastest trajectory of move `e` between the given locations.
    std::optional<std::size_t> fastest_trajectory(std::size_t e, std::size_t from_loc, std::size_t to_loc) const
    {
        std::optional<std::size_t> best;
        const auto& tr = moves[e].trajectories;
        for (std::size_t t = 0; t < tr.size(); ++t) {
            if (tr[t].from_location != from_loc || tr[t].to_location != to_loc) continue;
            if (!best || tr[t].d_min < tr[*best].d_min) best = t;
        }
        return best;
    }
};

struct TimeLag {
    ActivityRef from;
    ActivityRef to;
    double length = 0.0;
    int height = 0;
};

struct SpatialCompatPair {
    ActivityRef activity_1;
    ActivityRef activity_2;
    std::vector<std::pair<std::size_t, std::size_t>> pairs; // location indices

    bool allows(std::size_t l1, std::size_t l2) const
    {
        return std::find(pairs.begin(), pairs.end(), std::make_pair(l1, l2)) != pairs.end();
    }
};

/// Item is a location index for static activities, a trajectory index otherwise.
struct CollisionQuad {
    ActivityRef activity_1;
    std::size_t item_1 = 0;
    ActivityRef activity_2;
    std::size_t item_2 = 0;
};

struct Instance {
    double cycle_time = 0.0;
    std::vector<Robot> robots;
    std::vector<TimeLag> time_lags;
    std::vector<SpatialCompatPair> compat_pairs;
    std::vector<CollisionQuad> collisions;

    const Robot& robot(const ActivityRef& a) const { return robots[a.robot]; }

    bool valid_ref(const ActivityRef& a) const
    {
        if (a.robot >= robots.size()) return false;
        return a.is_static() ? a.index < robots[a.robot].statics.size() : a.index < robots[a.robot].moves.size();
    }

    const std::string& activity_id(const ActivityRef& a) const
    {
        return a.is_static() ? robots[a.robot].statics[a.index].id : robots[a.robot].moves[a.index].id;
    }

    std::size_t static_count() const
    {
        std::size_t n = 0;
        for (const auto& r : robots) n += r.statics.size();
        return n;
    }

    std::size_t move_count() const
    {
        std::size_t n = 0;
        for (const auto& r : robots) n += r.moves.size();
        return n;
    }
};

//----------------------------------------------------------------------------//
// Validation
//----------------------------------------------------------------------------//

struct Violation {
    std::string entity; // id (or path) of the offending entity
    std::string rule;   // short rule name
    std::string detail;
};

namespace detail {

inline std::string fmt_num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline void validate_energy(const Trajectory& t, const std::string& owner, std::vector<Violation>& out)
{
    for (double c : t.energy.coeffs)
        if (!std::isfinite(c)) {
            out.push_back({owner + "/" + t.id, "energy_finite", "energy coefficients must be finite"});
            return;
        }
    if (!(t.d_min > 0.0) || t.d_max < t.d_min) return; // reported by duration rule
    const double sd = min_second_difference(t.energy, t.d_min, t.d_max);
    if (sd < -kNumericTol)
        out.push_back({owner + "/" + t.id, "energy_convex",
                       "energy function not convex on [d_min, d_max]; second difference " + fmt_num(sd)});
    const double lo = min_sampled_value(t.energy, t.d_min, t.d_max);
    if (lo < -kNumericTol)
        out.push_back({owner + "/" + t.id, "energy_nonnegative", "energy function negative on domain: " + fmt_num(lo)});
}

/// Forward reachability over robot graph.
inline std::vector<bool> reachable(const Robot& r, std::size_t start, bool forward)
{
    std::vector<bool> seen(r.statics.size(), false);
    std::vector<std::size_t> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        for (const auto& e : r.moves) {
            if (e.from >= r.statics.size() || e.to >= r.statics.size()) continue;
            const std::size_t a = forward ? e.from : e.to;
            const std::size_t b = forward ? e.to : e.from;
            if (a == v && !seen[b]) {
                seen[b] = true;
                stack.push_back(b);
            }
        }
    }
    return seen;
}

} // namespace detail

/// All invariant violations of an instance; empty when the instance is valid.
inline std::vector<Violation> validate_instance(const Instance& inst)
{
    using detail::fmt_num;
    std::vector<Violation> out;
    if (!(inst.cycle_time > 0.0) || !std::isfinite(inst.cycle_time))
        out.push_back({"cycle_time", "cycle_time_positive", "cycle time must be positive, got " + fmt_num(inst.cycle_time)});
    if (inst.robots.empty()) out.push_back({"robots", "robots_nonempty", "instance has no robots"});

    std::set<std::string> robot_ids, activity_ids;
    for (const auto& r : inst.robots) {
        if (!robot_ids.insert(r.id).second) out.push_back({r.id, "unique_id", "duplicate robot id"});
        if (r.modes.empty()) out.push_back({r.id, "modes_nonempty", "robot has no power modes"});
        bool has_zero_mode = false;
        std::set<std::string> mode_ids;
        for (const auto& m : r.modes) {
            if (!mode_ids.insert(m.id).second) out.push_back({r.id + "/" + m.id, "unique_id", "duplicate mode id"});
            if (!(m.min_switch_time >= 0.0) || !std::isfinite(m.min_switch_time))
                out.push_back({r.id + "/" + m.id, "mode_switch_nonnegative", "min_switch_time must be >= 0"});
            if (m.min_switch_time == 0.0) has_zero_mode = true;
        }
        if (!r.modes.empty() && !has_zero_mode)
            out.push_back({r.id, "dummy_mode", "no power mode with zero switch time (motor hold)"});
        if (r.statics.empty()) {
            out.push_back({r.id, "statics_nonempty", "robot has no static activities"});
            continue;
        }
        if (r.home >= r.statics.size()) out.push_back({r.id, "home_exists", "home activity index out of range"});

        for (const auto& v : r.statics) {
            if (!activity_ids.insert(v.id).second) out.push_back({v.id, "unique_id", "duplicate activity id"});
            if (!(v.d_min >= 0.0) || !(v.d_max >= v.d_min) || !std::isfinite(v.d_max))
                out.push_back({v.id, "static_duration_window",
                               "need 0 <= d_min <= d_max, got [" + fmt_num(v.d_min) + ", " + fmt_num(v.d_max) + "]"});
            if (v.locations.empty()) out.push_back({v.id, "locations_nonempty", "static activity has no locations"});
            std::set<std::string> loc_ids;
            for (const auto& l : v.locations) {
                if (!loc_ids.insert(l.id).second) out.push_back({v.id + "/" + l.id, "unique_id", "duplicate location id"});
                if (l.power.size() != r.modes.size()) {
                    out.push_back({v.id + "/" + l.id, "power_per_mode", "input power must be given for every mode"});
                    continue;
                }
                for (double p : l.power)
                    if (!(p >= 0.0) || !std::isfinite(p))
                        out.push_back({v.id + "/" + l.id, "power_nonnegative", "input power must be finite and >= 0"});
            }
        }

        std::vector<int> indeg(r.statics.size(), 0), outdeg(r.statics.size(), 0);
        std::set<std::pair<std::size_t, std::size_t>> arcs;
        for (const auto& e : r.moves) {
            if (!activity_ids.insert(e.id).second) out.push_back({e.id, "unique_id", "duplicate activity id"});
            if (e.from >= r.statics.size() || e.to >= r.statics.size()) {
                out.push_back({e.id, "move_endpoints", "dynamic activity references unknown static activity"});
                continue;
            }
            ++outdeg[e.from];
            ++indeg[e.to];
            if (!arcs.insert({e.from, e.to}).second)
                out.push_back({e.id, "unique_move", "more than one dynamic activity between the same static activities"});
            if (e.trajectories.empty()) out.push_back({e.id, "trajectories_nonempty", "dynamic activity has no trajectories"});
            std::set<std::string> traj_ids;
            for (const auto& t : e.trajectories) {
                if (!traj_ids.insert(t.id).second) out.push_back({e.id + "/" + t.id, "unique_id", "duplicate trajectory id"});
                if (t.from_location >= r.statics[e.from].locations.size() || t.to_location >= r.statics[e.to].locations.size())
                    out.push_back({e.id + "/" + t.id, "trajectory_endpoints", "trajectory endpoint location not in activity"});
                if (!(t.d_min > 0.0) || !(t.d_max >= t.d_min) || !std::isfinite(t.d_max))
                    out.push_back({e.id + "/" + t.id, "trajectory_duration_window",
                                   "need 0 < d_min <= d_max, got [" + fmt_num(t.d_min) + ", " + fmt_num(t.d_max) + "]"});
                detail::validate_energy(t, e.id, out);
            }
        }
        for (const auto& e : r.moves) {
            if (e.from >= r.statics.size() || e.to >= r.statics.size()) continue;
            if (outdeg[e.from] > 1 && !e.optional)
                out.push_back({e.id, "optional_branch", "leaves a static activity with several successors but is not optional"});
            else if (indeg[e.to] > 1 && !e.optional)
                out.push_back({e.id, "optional_merge", "enters a static activity with several predecessors but is not optional"});
        }
        for (std::size_t v = 0; v < r.statics.size(); ++v) {
            if (indeg[v] == 0) out.push_back({r.statics[v].id, "has_incoming", "static activity has no incoming dynamic activity"});
            if (outdeg[v] == 0) out.push_back({r.statics[v].id, "has_outgoing", "static activity has no outgoing dynamic activity"});
        }
        if (r.home < r.statics.size()) {
            const auto fwd = detail::reachable(r, r.home, true);
            const auto bwd = detail::reachable(r, r.home, false);
            for (std::size_t v = 0; v < r.statics.size(); ++v)
                if (!fwd[v] || !bwd[v])
                    out.push_back({r.statics[v].id, "connected", "static activity not on a cycle through the home activity"});
        }
    }

    auto check_ref = [&](const ActivityRef& a, const std::string& owner) {
        if (!inst.valid_ref(a)) {
            out.push_back({owner, "activity_exists", "references unknown activity"});
            return false;
        }
        return true;
    };

    for (std::size_t i = 0; i < inst.time_lags.size(); ++i) {
        const auto& lag = inst.time_lags[i];
        const std::string name = "time_lags/" + std::to_string(i);
        if (!check_ref(lag.from, name) || !check_ref(lag.to, name)) continue;
        if (!std::isfinite(lag.length)) out.push_back({name, "lag_length_finite", "time lag length must be finite"});
        for (const auto& a : {lag.from, lag.to})
            if (!a.is_static() && inst.robot(a).moves[a.index].optional)
                out.push_back({name, "lag_mandatory", "time lag references optional activity " + inst.activity_id(a)});
    }
    for (std::size_t i = 0; i < inst.compat_pairs.size(); ++i) {
        const auto& q = inst.compat_pairs[i];
        const std::string name = "compat/" + std::to_string(i);
        if (!check_ref(q.activity_1, name) || !check_ref(q.activity_2, name)) continue;
        if (!q.activity_1.is_static() || !q.activity_2.is_static()) {
            out.push_back({name, "compat_static", "spatial compatibility needs static activities"});
            continue;
        }
        if (q.pairs.empty()) out.push_back({name, "compat_nonempty", "no compatible location pairs"});
        const auto& l1 = inst.robot(q.activity_1).statics[q.activity_1.index].locations;
        const auto& l2 = inst.robot(q.activity_2).statics[q.activity_2.index].locations;
        for (const auto& [a, b] : q.pairs)
            if (a >= l1.size() || b >= l2.size()) out.push_back({name, "compat_locations", "unknown location in pair"});
    }
    for (std::size_t i = 0; i < inst.collisions.size(); ++i) {
        const auto& c = inst.collisions[i];
        const std::string name = "collisions/" + std::to_string(i);
        if (!check_ref(c.activity_1, name) || !check_ref(c.activity_2, name)) continue;
        if (c.activity_1.robot == c.activity_2.robot)
            out.push_back({name, "collision_robots", "collision activities must belong to different robots"});
        auto item_ok = [&](const ActivityRef& a, std::size_t item) {
            const auto& r = inst.robot(a);
            return a.is_static() ? item < r.statics[a.index].locations.size() : item < r.moves[a.index].trajectories.size();
        };
        if (!item_ok(c.activity_1, c.item_1) || !item_ok(c.activity_2, c.item_2))
            out.push_back({name, "collision_items", "collision item does not belong to its activity"});
    }
    return out;
}

//----------------------------------------------------------------------------//
// Solutions
//----------------------------------------------------------------------------//

enum class SolutionStatus { feasible, infeasible, unknown };

inline const char* to_string(SolutionStatus s)
{
    switch (s) {
    case SolutionStatus::feasible: return "feasible";
    case SolutionStatus::infeasible: return "infeasible";
    default: return "unknown";
    }
}

struct StaticSelection {
    std::size_t activity = 0;
    std::size_t location = 0;
    std::size_t mode = 0;
    double start = 0.0;
    double duration = 0.0;
    double energy = 0.0; // p * d
};

struct MoveSelection {
    std::size_t activity = 0;
    std::size_t trajectory = 0;
    double start = 0.0;
    double duration = 0.0;
    double energy = 0.0;       // linearized model value
    double exact_energy = 0.0; // f(d)
};

/// One robot's cycle: moves[i] enters statics[i]; moves[0] leaves the home
/// activity, which is always statics.back().
struct RobotSchedule {
    std::vector<StaticSelection> statics;
    std::vector<MoveSelection> moves;
};

struct SolverMetadata {
    std::string solver;
    std::optional<std::uint64_t> seed;
    std::optional<double> time_limit;
    std::optional<double> wall_time;
    std::optional<std::uint64_t> lp_evaluations;
};

struct Solution {
    SolutionStatus status = SolutionStatus::unknown;
    std::vector<RobotSchedule> robots;
    std::size_t segments = 10;       // |B| of the linearization behind `energy`
    double total_energy = 0.0;       // criterion: sum of modelled energies
    double total_exact_energy = 0.0; // with exact movement energy
    SolverMetadata metadata;

    void recompute_totals()
    {
        total_energy = total_exact_energy = 0.0;
        for (const auto& r : robots) {
            for (const auto& s : r.statics) {
                total_energy += s.energy;
                total_exact_energy += s.energy;
            }
            for (const auto& m : r.moves) {
                total_energy += m.energy;
                total_exact_energy += m.exact_energy;
            }
        }
    }
};

/// Start/duration lookup by activity.
struct TimingView {
    // per robot: position of each static / move in the schedule, or npos
    std::vector<std::vector<std::size_t>> static_pos;
    std::vector<std::vector<std::size_t>> move_pos;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    TimingView(const Instance& inst, const Solution& sol)
    {
        static_pos.resize(inst.robots.size());
        move_pos.resize(inst.robots.size());
        for (std::size_t r = 0; r < inst.robots.size(); ++r) {
            static_pos[r].assign(inst.robots[r].statics.size(), npos);
            move_pos[r].assign(inst.robots[r].moves.size(), npos);
            if (r >= sol.robots.size()) continue;
            const auto& sched = sol.robots[r];
            for (std::size_t i = 0; i < sched.statics.size(); ++i)
                if (sched.statics[i].activity < static_pos[r].size()) static_pos[r][sched.statics[i].activity] = i;
            for (std::size_t i = 0; i < sched.moves.size(); ++i)
                if (sched.moves[i].activity < move_pos[r].size()) move_pos[r][sched.moves[i].activity] = i;
        }
    }

    bool executed(const ActivityRef& a) const
    {
        return (a.is_static() ? static_pos[a.robot][a.index] : move_pos[a.robot][a.index]) != npos;
    }
};

struct ConstraintViolation {
    std::string constraint; // circuit, duration, cycle_time, timing, time_lag, compat, collision, energy
    std::string detail;
    double amount = 0.0; // magnitude of the violation (seconds, joules or relative)
};

struct FeasibilityReport {
    std::vector<ConstraintViolation> violations;
    bool feasible() const { return violations.empty(); }
};

/// Verifies a schedule against the cell semantics directly.
inline FeasibilityReport check_solution(const Instance& inst, const Solution& sol)
{
    using detail::fmt_num;
    FeasibilityReport rep;
    auto fail = [&](std::string c, std::string d, double amount) { rep.violations.push_back({std::move(c), std::move(d), amount}); };
    const double ct = inst.cycle_time;
    const double tol = kFeasibilityTol;

    if (sol.robots.size() != inst.robots.size()) {
        fail("circuit", "solution has " + std::to_string(sol.robots.size()) + " robots, instance " +
                            std::to_string(inst.robots.size()), 1.0);
        return rep;
    }
    std::vector<bool> structurally_ok(inst.robots.size(), true);

    for (std::size_t r = 0; r < inst.robots.size(); ++r) {
        const Robot& robot = inst.robots[r];
        const RobotSchedule& sched = sol.robots[r];
        const std::size_t n = robot.statics.size();
        // (a) Hamiltonian circuit through valid trajectories
        if (sched.statics.size() != n || sched.moves.size() != n) {
            fail("circuit", robot.id + ": circuit must visit every static activity exactly once", 1.0);
            structurally_ok[r] = false;
            continue;
        }
        std::vector<bool> seen(n, false);
        bool ok = true;
        for (const auto& s : sched.statics) {
            if (s.activity >= n || seen[s.activity] || s.location >= robot.statics[s.activity].locations.size() ||
                s.mode >= robot.modes.size()) {
                ok = false;
                break;
            }
            seen[s.activity] = true;
        }
        if (!ok || sched.statics.back().activity != robot.home) {
            fail("circuit", robot.id + ": invalid static selection or circuit not closed at home", 1.0);
            structurally_ok[r] = false;
            continue;
        }
        std::vector<bool> used(robot.moves.size(), false);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& mv = sched.moves[i];
            const auto& prev = sched.statics[(i + n - 1) % n];
            const auto& next = sched.statics[i];
            if (mv.activity >= robot.moves.size()) {
                ok = false;
                break;
            }
            const auto& e = robot.moves[mv.activity];
            used[mv.activity] = true;
            if (e.from != prev.activity || e.to != next.activity || mv.trajectory >= e.trajectories.size()) {
                ok = false;
                break;
            }
            const auto& t = e.trajectories[mv.trajectory];
            if (t.from_location != prev.location || t.to_location != next.location) {
                fail("circuit", e.id + ": trajectory " + t.id + " does not connect the selected locations", 1.0);
                ok = false;
                break;
            }
        }
        if (!ok) {
            fail("circuit", robot.id + ": consecutive activities are not connected by the selected moves", 1.0);
            structurally_ok[r] = false;
            continue;
        }
        for (std::size_t e = 0; e < robot.moves.size(); ++e)
            if (!robot.moves[e].optional && !used[e]) fail("circuit", robot.moves[e].id + ": mandatory move not executed", 1.0);

        // (b) duration windows
        double total = 0.0;
        for (const auto& s : sched.statics) {
            const auto& v = robot.statics[s.activity];
            const double lo = robot.min_static_duration(s.activity, s.mode);
            if (s.duration < lo - tol) fail("duration", v.id + ": duration " + fmt_num(s.duration) + " below " + fmt_num(lo), lo - s.duration);
            if (s.duration > v.d_max + tol)
                fail("duration", v.id + ": duration " + fmt_num(s.duration) + " above " + fmt_num(v.d_max), s.duration - v.d_max);
            total += s.duration;
        }
        for (const auto& m : sched.moves) {
            const auto& e = robot.moves[m.activity];
            const auto& t = e.trajectories[m.trajectory];
            if (m.duration < t.d_min - tol)
                fail("duration", e.id + ": duration " + fmt_num(m.duration) + " below " + fmt_num(t.d_min), t.d_min - m.duration);
            if (m.duration > t.d_max + tol)
                fail("duration", e.id + ": duration " + fmt_num(m.duration) + " above " + fmt_num(t.d_max), m.duration - t.d_max);
            total += m.duration;
        }
        // (c) cycle time and precedence chain
        if (std::abs(total - ct) > tol) fail("cycle_time", robot.id + ": circuit lasts " + fmt_num(total), std::abs(total - ct));
        const auto& home = sched.statics.back();
        const double first = home.start + home.duration - ct;
        if (std::abs(sched.moves[0].start - first) > tol)
            fail("timing", robot.moves[sched.moves[0].activity].id + ": must start when the home activity ends (minus CT)",
                 std::abs(sched.moves[0].start - first));
        for (std::size_t i = 0; i < n; ++i) {
            const auto& m = sched.moves[i];
            const auto& s = sched.statics[i];
            if (std::abs(s.start - (m.start + m.duration)) > tol)
                fail("timing", robot.statics[s.activity].id + ": start does not follow its incoming move",
                     std::abs(s.start - (m.start + m.duration)));
            if (i > 0) {
                const auto& p = sched.statics[i - 1];
                if (std::abs(m.start - (p.start + p.duration)) > tol)
                    fail("timing", robot.moves[m.activity].id + ": start does not follow its source activity",
                         std::abs(m.start - (p.start + p.duration)));
            }
            if (s.start < -tol) fail("timing", robot.statics[s.activity].id + ": negative start", -s.start);
            if (m.start < -tol) fail("timing", robot.moves[m.activity].id + ": negative start", -m.start);
        }
        // (g) energies
        for (const auto& s : sched.statics) {
            const double p = robot.statics[s.activity].locations[s.location].power[s.mode];
            const double expect = p * s.duration;
            if (std::abs(s.energy - expect) > tol * std::max(1.0, std::abs(expect)))
                fail("energy", robot.statics[s.activity].id + ": energy " + fmt_num(s.energy) + " != p*d " + fmt_num(expect),
                     std::abs(s.energy - expect));
        }
        for (const auto& m : sched.moves) {
            const auto& t = robot.moves[m.activity].trajectories[m.trajectory];
            if (!(m.duration > 0.0)) continue; // duration violation already reported
            const double exact = energy_eval(t.energy, m.duration);
            if (std::abs(m.exact_energy - exact) > tol * std::max(1.0, std::abs(exact)))
                fail("energy", robot.moves[m.activity].id + ": exact energy " + fmt_num(m.exact_energy) + " != f(d) " + fmt_num(exact),
                     std::abs(m.exact_energy - exact));
            try {
                const double model = pwl_approximate(t.energy, t.d_min, t.d_max, sol.segments)(m.duration);
                if (std::abs(m.energy - model) > tol * std::max(1.0, std::abs(model)))
                    fail("energy", robot.moves[m.activity].id + ": model energy " + fmt_num(m.energy) + " != linearized " + fmt_num(model),
                         std::abs(m.energy - model));
            } catch (const std::exception& ex) {
                fail("energy", robot.moves[m.activity].id + ": " + ex.what(), 1.0);
            }
        }
    }

    const TimingView view(inst, sol);
    auto ok_robot = [&](const ActivityRef& a) { return a.robot < structurally_ok.size() && structurally_ok[a.robot]; };
    auto start_of = [&](const ActivityRef& a) {
        const auto& sch = sol.robots[a.robot];
        return a.is_static() ? sch.statics[view.static_pos[a.robot][a.index]].start : sch.moves[view.move_pos[a.robot][a.index]].start;
    };
    auto dur_of = [&](const ActivityRef& a) {
        const auto& sch = sol.robots[a.robot];
        return a.is_static() ? sch.statics[view.static_pos[a.robot][a.index]].duration
                             : sch.moves[view.move_pos[a.robot][a.index]].duration;
    };
    auto item_of = [&](const ActivityRef& a) {
        const auto& sch = sol.robots[a.robot];
        return a.is_static() ? sch.statics[view.static_pos[a.robot][a.index]].location
                             : sch.moves[view.move_pos[a.robot][a.index]].trajectory;
    };

    // (d) time lags
    for (const auto& lag : inst.time_lags) {
        if (!ok_robot(lag.from) || !ok_robot(lag.to) || !view.executed(lag.from) || !view.executed(lag.to)) continue;
        const double slack = start_of(lag.to) - start_of(lag.from) - (lag.length - ct * lag.height);
        if (slack < -tol)
            fail("time_lag", inst.activity_id(lag.from) + " -> " + inst.activity_id(lag.to) + " violated by " + fmt_num(-slack), -slack);
    }
    // (e) spatial compatibility
    for (const auto& q : inst.compat_pairs) {
        if (!ok_robot(q.activity_1) || !ok_robot(q.activity_2)) continue;
        const std::size_t l1 = item_of(q.activity_1), l2 = item_of(q.activity_2);
        if (!q.allows(l1, l2))
            fail("compat", inst.activity_id(q.activity_1) + "/" + inst.activity_id(q.activity_2) + ": incompatible locations", 1.0);
    }
    // (f) collisions
    const int nr = static_cast<int>(inst.robots.size());
    for (const auto& c : inst.collisions) {
        if (!ok_robot(c.activity_1) || !ok_robot(c.activity_2)) continue;
        if (!view.executed(c.activity_1) || !view.executed(c.activity_2)) continue;
        if (item_of(c.activity_1) != c.item_1 || item_of(c.activity_2) != c.item_2) continue;
        const double s1 = start_of(c.activity_1), d1 = dur_of(c.activity_1);
        const double s2 = start_of(c.activity_2), d2 = dur_of(c.activity_2);
        for (int k = -nr; k <= nr; ++k) {
            const double overlap = std::min(s1 + d1 - s2 - k * ct, s2 + d2 + k * ct - s1);
            if (overlap > tol)
                fail("collision", inst.activity_id(c.activity_1) + " x " + inst.activity_id(c.activity_2) + " (n=" + std::to_string(k) +
                                      ") overlap " + fmt_num(overlap),
                     overlap);
        }
    }
    // totals
    double total = 0.0, exact = 0.0;
    for (const auto& r : sol.robots) {
        for (const auto& s : r.statics) total += s.energy, exact += s.energy;
        for (const auto& m : r.moves) total += m.energy, exact += m.exact_energy;
    }
    if (std::abs(total - sol.total_energy) > tol * std::max(1.0, std::abs(total)))
        fail("energy", "total_energy " + fmt_num(sol.total_energy) + " != sum " + fmt_num(total), std::abs(total - sol.total_energy));
    if (std::abs(exact - sol.total_exact_energy) > tol * std::max(1.0, std::abs(exact)))
        fail("energy", "total_exact_energy " + fmt_num(sol.total_exact_energy) + " != sum " + fmt_num(exact),
             std::abs(exact - sol.total_exact_energy));
    return rep;
}

/// Chord linearizations of every trajectory of an instance, built once.
class PwlTable {
public:
    PwlTable() = default;

    PwlTable(const Instance& inst, std::size_t segments) : segments_(segments)
    {
        table_.resize(inst.robots.size());
        for (std::size_t r = 0; r < inst.robots.size(); ++r) {
            const auto& robot = inst.robots[r];
            table_[r].resize(robot.moves.size());
            for (std::size_t e = 0; e < robot.moves.size(); ++e)
                for (const auto& t : robot.moves[e].trajectories)
                    table_[r][e].push_back(pwl_approximate(t.energy, t.d_min, t.d_max, segments));
        }
    }

    const PwlApprox& at(std::size_t robot, std::size_t move, std::size_t trajectory) const { return table_[robot][move][trajectory]; }
    std::size_t segments() const { return segments_; }

private:
    std::size_t segments_ = 0;
    std::vector<std::vector<std::vector<PwlApprox>>> table_;
};

} // namespace cellopt
