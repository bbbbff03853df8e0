#pragma once

// Tuples: one circuit, one closed location path and a mode map per robot.
// Creation from alternatives, spatial compatibility repair, elite pool and
// elite recombination.

#include "cellopt/cell_model.hpp"
#include "cellopt/graph_alg.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace cellopt {

struct RobotPlan {
    std::vector<std::size_t> statics;      // circuit, home last
    std::vector<std::size_t> moves;        // moves[i] enters statics[i]
    std::vector<std::size_t> locations;    // per circuit position
    std::vector<std::size_t> trajectories; // per circuit position (of moves[i])
    std::vector<std::size_t> modes;        // per static activity index of the robot

    bool same_circuit(const RobotPlan& o) const { return statics == o.statics && moves == o.moves; }
    bool operator==(const RobotPlan&) const = default;
};

struct Tuple {
    std::vector<RobotPlan> robots;

    bool operator==(const Tuple&) const = default;

    /// Hash of every chosen circuit, location, trajectory and mode.
    std::uint64_t fingerprint() const
    {
        std::uint64_t h = 0x51ED270B27A3F1C5ULL;
        for (const auto& p : robots) {
            hash_combine(h, p.statics.size());
            for (auto v : p.statics) hash_combine(h, v);
            for (auto v : p.moves) hash_combine(h, v + 1000003ULL);
            for (auto v : p.locations) hash_combine(h, v + 2000003ULL);
            for (auto v : p.trajectories) hash_combine(h, v + 3000017ULL);
            for (auto v : p.modes) hash_combine(h, v + 4000037ULL);
        }
        return h;
    }
};

/// Position of each static / move of a plan in its circuit (npos if absent).
struct PlanIndex {
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::vector<std::size_t> static_pos;
    std::vector<std::size_t> move_pos;

    PlanIndex(const Robot& robot, const RobotPlan& plan)
        : static_pos(robot.statics.size(), npos), move_pos(robot.moves.size(), npos)
    {
        for (std::size_t i = 0; i < plan.statics.size(); ++i) {
            if (plan.statics[i] < static_pos.size()) static_pos[plan.statics[i]] = i;
            if (i < plan.moves.size() && plan.moves[i] < move_pos.size()) move_pos[plan.moves[i]] = i;
        }
    }
};

/// Minimum duration of a plan's circuit with its mode map.
inline double plan_min_duration(const Robot& robot, const RobotPlan& plan)
{
    double d = 0.0;
    for (std::size_t i = 0; i < plan.statics.size(); ++i) {
        d += robot.min_static_duration(plan.statics[i], plan.modes[plan.statics[i]]);
        d += robot.moves[plan.moves[i]].trajectories[plan.trajectories[i]].d_min;
    }
    return d;
}

/// Broken tuple invariants; empty when the tuple is well formed.
inline std::vector<std::string> tuple_problems(const Instance& inst, const Tuple& t)
{
    std::vector<std::string> out;
    if (t.robots.size() != inst.robots.size()) {
        out.push_back("robot count mismatch");
        return out;
    }
    for (std::size_t r = 0; r < inst.robots.size(); ++r) {
        const auto& robot = inst.robots[r];
        const auto& p = t.robots[r];
        const std::string tag = robot.id + ": ";
        const std::size_t n = p.statics.size();
        if (n != robot.statics.size() || p.moves.size() != n || p.locations.size() != n || p.trajectories.size() != n) {
            out.push_back(tag + "plan sizes do not cover the activities");
            continue;
        }
        if (p.modes.size() != robot.statics.size()) out.push_back(tag + "mode map incomplete");
        for (auto m : p.modes)
            if (m >= robot.modes.size()) out.push_back(tag + "unknown mode");
        if (p.statics.back() != robot.home) out.push_back(tag + "circuit does not end at home");
        std::vector<bool> seen(n, false);
        bool ok = true;
        for (std::size_t i = 0; i < n; ++i) {
            if (p.statics[i] >= n || seen[p.statics[i]]) {
                out.push_back(tag + "circuit is not a permutation");
                ok = false;
                break;
            }
            seen[p.statics[i]] = true;
        }
        if (!ok) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t prev = p.statics[(i + n - 1) % n];
            if (p.moves[i] >= robot.moves.size()) {
                out.push_back(tag + "unknown move");
                ok = false;
                break;
            }
            const auto& mv = robot.moves[p.moves[i]];
            if (mv.from != prev || mv.to != p.statics[i]) {
                out.push_back(tag + "move " + mv.id + " does not connect the circuit");
                ok = false;
                break;
            }
            if (p.locations[i] >= robot.statics[p.statics[i]].locations.size() || p.trajectories[i] >= mv.trajectories.size()) {
                out.push_back(tag + "location or trajectory index out of range");
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& tr = robot.moves[p.moves[i]].trajectories[p.trajectories[i]];
            if (tr.from_location != p.locations[(i + n - 1) % n] || tr.to_location != p.locations[i])
                out.push_back(tag + "trajectory " + tr.id + " does not connect the chosen locations");
        }
    }
    return out;
}

/// Compat pairs that the tuple's locations violate (indices into inst.compat_pairs).
inline std::vector<std::size_t> violated_compat_pairs(const Instance& inst, const Tuple& t)
{
    std::vector<std::size_t> bad;
    for (std::size_t k = 0; k < inst.compat_pairs.size(); ++k) {
        const auto& q = inst.compat_pairs[k];
        const auto& p1 = t.robots[q.activity_1.robot];
        const auto& p2 = t.robots[q.activity_2.robot];
        const PlanIndex i1(inst.robots[q.activity_1.robot], p1), i2(inst.robots[q.activity_2.robot], p2);
        const std::size_t l1 = p1.locations[i1.static_pos[q.activity_1.index]];
        const std::size_t l2 = p2.locations[i2.static_pos[q.activity_2.index]];
        if (!q.allows(l1, l2)) bad.push_back(k);
    }
    return bad;
}

/// Tuple plan from an alternative: its fastest path and the fastest modes.
inline RobotPlan plan_from_alternative(const Robot& robot, const Alternative& alt)
{
    RobotPlan p;
    p.statics = alt.statics;
    p.moves = alt.moves;
    p.locations = alt.fastest_locations;
    p.trajectories = alt.fastest_trajectories;
    p.modes.assign(robot.statics.size(), robot.fastest_mode());
    return p;
}

namespace detail {

inline void reconnect_fastest(const Robot& robot, RobotPlan& p, std::size_t i)
{
    const std::size_t n = p.statics.size();
    const std::size_t prev = (i + n - 1) % n, next = (i + 1) % n;
    const auto in = robot.fastest_trajectory(p.moves[i], p.locations[prev], p.locations[i]);
    const auto out = robot.fastest_trajectory(p.moves[next], p.locations[i], p.locations[next]);
    if (!in || !out) throw std::logic_error("reconnect_fastest: missing trajectory");
    p.trajectories[i] = *in;
    p.trajectories[next] = *out;
}

// Move the static at circuit position `i` to location `loc`. Neighbours are
// kept when trajectories connect them; otherwise the whole path is re-routed
// through the fastest layered path with `locked` positions pinned.
inline std::optional<RobotPlan> relocate(const Robot& robot, const RobotPlan& p, std::size_t i, std::size_t loc,
                                         const std::vector<bool>& locked)
{
    RobotPlan out = p;
    out.locations[i] = loc;
    const std::size_t n = p.statics.size();
    const std::size_t prev = (i + n - 1) % n, next = (i + 1) % n;
    if (n == 1) {
        const auto t = robot.fastest_trajectory(p.moves[0], loc, loc);
        if (!t) return std::nullopt;
        out.trajectories[0] = *t;
        return out;
    }
    if (robot.fastest_trajectory(p.moves[i], out.locations[prev], loc) &&
        robot.fastest_trajectory(p.moves[next], loc, out.locations[next])) {
        reconnect_fastest(robot, out, i);
        return out;
    }
    std::vector<std::optional<std::size_t>> forced(n);
    for (std::size_t k = 0; k < n; ++k)
        if (k == i || locked[k]) forced[k] = out.locations[k];
    const auto seq = fastest_path(robot, p.statics, p.moves, &forced);
    if (!seq) return std::nullopt;
    out.locations = seq->locations;
    out.trajectories = seq->trajectories;
    return out;
}

} // namespace detail

/// Repair the locations so that every compat pair holds. Each violated pair
/// is fixed by the allowed location pair with the smallest prolongation score
/// sum_r dDuration_r / max(CT - duration_r, 1e-6) over the affected robots.
/// Returns nullopt when some pair cannot be fixed.
inline std::optional<Tuple> fix_spatial_compatibility(const Instance& inst, Tuple t)
{
    constexpr double eps = 1e-6;
    const double ct = inst.cycle_time;
    for (std::size_t round = 0; round <= inst.compat_pairs.size(); ++round) {
        const auto bad = violated_compat_pairs(inst, t);
        if (bad.empty()) return t;
        const auto& q = inst.compat_pairs[bad.front()];
        const std::size_t r1 = q.activity_1.robot, r2 = q.activity_2.robot;
        const auto& robot1 = inst.robots[r1];
        const auto& robot2 = inst.robots[r2];

        // lock locations that satisfied pairs depend on
        std::vector<std::vector<bool>> locked(inst.robots.size());
        for (std::size_t r = 0; r < inst.robots.size(); ++r) locked[r].assign(t.robots[r].statics.size(), false);
        std::set<std::size_t> bad_set(bad.begin(), bad.end());
        for (std::size_t k = 0; k < inst.compat_pairs.size(); ++k) {
            if (bad_set.count(k)) continue;
            const auto& s = inst.compat_pairs[k];
            for (const auto& a : {s.activity_1, s.activity_2}) {
                const PlanIndex idx(inst.robots[a.robot], t.robots[a.robot]);
                locked[a.robot][idx.static_pos[a.index]] = true;
            }
        }

        const std::size_t before = inst.compat_pairs.size() - bad.size();
        std::optional<Tuple> best;
        double best_score = kInf;
        for (const auto& [l1, l2] : q.pairs) {
            Tuple cand = t;
            const PlanIndex i1(robot1, cand.robots[r1]);
            const std::size_t pos1 = i1.static_pos[q.activity_1.index];
            if (cand.robots[r1].locations[pos1] != l1) {
                if (l1 >= robot1.statics[q.activity_1.index].locations.size()) continue;
                auto moved = detail::relocate(robot1, cand.robots[r1], pos1, l1, locked[r1]);
                if (!moved) continue;
                cand.robots[r1] = std::move(*moved);
            }
            const PlanIndex i2(robot2, cand.robots[r2]);
            const std::size_t pos2 = i2.static_pos[q.activity_2.index];
            if (cand.robots[r2].locations[pos2] != l2) {
                if (l2 >= robot2.statics[q.activity_2.index].locations.size()) continue;
                auto lock2 = locked[r2];
                if (r1 == r2) lock2[pos1] = true;
                auto moved = detail::relocate(robot2, cand.robots[r2], pos2, l2, lock2);
                if (!moved) continue;
                cand.robots[r2] = std::move(*moved);
            }
            // never trade a satisfied pair for this one
            const auto after_bad = violated_compat_pairs(inst, cand);
            if (inst.compat_pairs.size() - after_bad.size() <= before) continue;
            double score = 0.0;
            bool fits = true;
            for (std::size_t r : std::set<std::size_t>{r1, r2}) {
                const double old_d = plan_min_duration(inst.robots[r], t.robots[r]);
                const double new_d = plan_min_duration(inst.robots[r], cand.robots[r]);
                if (new_d > ct + kFeasibilityTol) fits = false;
                score += (new_d - old_d) / std::max(ct - old_d, eps);
            }
            if (!fits) continue;
            if (score < best_score) {
                best_score = score;
                best = std::move(cand);
            }
        }
        if (!best) return std::nullopt;
        t = std::move(*best);
    }
    if (violated_compat_pairs(inst, t).empty()) return t;
    return std::nullopt;
}

/// Alternatives available to each robot.
using AlternativeStore = std::vector<std::vector<Alternative>>;

/// Random alternative + fastest path + fastest modes per robot, then repair.
/// nullopt when some robot has no alternative or the repair fails.
inline std::optional<Tuple> generate_tuple(const Instance& inst, const AlternativeStore& alternatives, CounterRng& rng)
{
    if (alternatives.size() != inst.robots.size()) return std::nullopt;
    Tuple t;
    for (std::size_t r = 0; r < inst.robots.size(); ++r) {
        if (alternatives[r].empty()) return std::nullopt;
        const auto& alt = alternatives[r][rng.index(alternatives[r].size())];
        t.robots.push_back(plan_from_alternative(inst.robots[r], alt));
    }
    return fix_spatial_compatibility(inst, std::move(t));
}

//----------------------------------------------------------------------------//
// Elite pool
//----------------------------------------------------------------------------//

struct EliteEntry {
    Solution solution;
    Tuple tuple;
    std::uint64_t fingerprint = 0;
};

/// The K best distinct feasible solutions, ordered by (total_energy, fingerprint).
/// All operations lock an internal mutex unless the pool is single-threaded.
class ElitePool {
public:
    explicit ElitePool(std::size_t capacity = 10, bool concurrent = true) : capacity_(std::max<std::size_t>(capacity, 1)), concurrent_(concurrent) {}

    /// Insert if the pool is not full or the candidate beats the worst entry.
    /// A solution with an already present selection replaces it only when strictly better.
    bool offer(const Solution& sol, const Tuple& tuple)
    {
        auto lock = guard();
        const std::uint64_t fp = tuple.fingerprint();
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].fingerprint != fp) continue;
            if (!(sol.total_energy < entries_[i].solution.total_energy)) return false;
            entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(i));
            insert_sorted({sol, tuple, fp});
            return true;
        }
        if (entries_.size() >= capacity_) {
            const auto& worst = entries_.back();
            if (!less(sol.total_energy, fp, worst.solution.total_energy, worst.fingerprint)) return false;
            entries_.pop_back();
        }
        insert_sorted({sol, tuple, fp});
        return true;
    }

    std::vector<EliteEntry> snapshot() const
    {
        auto lock = guard();
        return entries_;
    }

    std::size_t size() const
    {
        auto lock = guard();
        return entries_.size();
    }

    bool empty() const { return size() == 0; }
    std::size_t capacity() const { return capacity_; }

    std::optional<Solution> best() const
    {
        auto lock = guard();
        if (entries_.empty()) return std::nullopt;
        return entries_.front().solution;
    }

private:
    static bool less(double e1, std::uint64_t f1, double e2, std::uint64_t f2) { return e1 < e2 || (e1 == e2 && f1 < f2); }

    void insert_sorted(EliteEntry e)
    {
        auto it = std::find_if(entries_.begin(), entries_.end(), [&](const EliteEntry& x) {
            return less(e.solution.total_energy, e.fingerprint, x.solution.total_energy, x.fingerprint);
        });
        entries_.insert(it, std::move(e));
    }

    std::unique_lock<std::mutex> guard() const
    {
        return concurrent_ ? std::unique_lock<std::mutex>(mutex_) : std::unique_lock<std::mutex>();
    }

    std::size_t capacity_;
    bool concurrent_;
    mutable std::mutex mutex_;
    std::vector<EliteEntry> entries_;
};

inline bool elite_offer(ElitePool& pool, const Solution& sol, const Tuple& tuple) { return pool.offer(sol, tuple); }

/// Distinct circuits of robot `r` present in the pool, in first-seen order.
inline std::vector<RobotPlan> elite_circuits(const std::vector<EliteEntry>& entries, std::size_t r)
{
    std::vector<RobotPlan> out;
    for (const auto& e : entries) {
        const auto& p = e.tuple.robots[r];
        if (std::none_of(out.begin(), out.end(), [&](const RobotPlan& o) { return o.same_circuit(p); })) out.push_back(p);
    }
    return out;
}

/// Per robot, one circuit drawn uniformly from the distinct circuits in the
/// pool, with its fastest path and the fastest modes; then repaired.
inline std::optional<Tuple> combine_elites(const Instance& inst, const ElitePool& pool, CounterRng& rng)
{
    const auto entries = pool.snapshot();
    if (entries.empty()) return std::nullopt;
    Tuple t;
    for (std::size_t r = 0; r < inst.robots.size(); ++r) {
        const auto circuits = elite_circuits(entries, r);
        const auto& pick = circuits[rng.index(circuits.size())];
        const auto& robot = inst.robots[r];
        const auto seq = fastest_path(robot, pick.statics, pick.moves);
        if (!seq) return std::nullopt;
        RobotPlan p;
        p.statics = pick.statics;
        p.moves = pick.moves;
        p.locations = seq->locations;
        p.trajectories = seq->trajectories;
        p.modes.assign(robot.statics.size(), robot.fastest_mode());
        t.robots.push_back(std::move(p));
    }
    return fix_spatial_compatibility(inst, std::move(t));
}

} // namespace cellopt
