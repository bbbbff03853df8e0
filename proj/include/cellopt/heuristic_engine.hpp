#pragma once

// Parallel hybrid heuristic: a control context generates alternatives and
// keeps a shared list of tuples filled; workers evaluate tuples with the
// timing LP and improve them with three sub-heuristics applied in
// round-robin order (power modes, locations, path diversification).

#include "cellopt/graph_alg.hpp"
#include "cellopt/reduced_lp.hpp"
#include "cellopt/tuple_engine.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace cellopt {

//----------------------------------------------------------------------------//
// Golden-section search
//----------------------------------------------------------------------------//

struct ScalarMinimum {
    double x = 0.0;
    double value = 0.0;
    int iterations = 0;
};

/// Minimizes a unimodal function on [lo, hi] to an interval of width `tol`.
template <typename F>
ScalarMinimum golden_section_minimize(F&& f, double lo, double hi, double tol = 1e-6, int max_iterations = 200)
{
    constexpr double inv_phi = 0.6180339887498948482;
    if (hi < lo) std::swap(lo, hi);
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    int it = 0;
    while (b - a > tol && it < max_iterations) {
        ++it;
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    ScalarMinimum best{0.5 * (a + b), f(0.5 * (a + b)), it};
    // the ends are candidates too when the minimum sits on the boundary
    for (double x : {lo, hi}) {
        const double v = f(x);
        if (v < best.value) best = {x, v, it};
    }
    return best;
}

//----------------------------------------------------------------------------//
// Sub-heuristics
//----------------------------------------------------------------------------//

/// Recently abandoned (robot, static activity, mode) choices.
class TabuList {
public:
    explicit TabuList(std::size_t tenure = 7) : tenure_(tenure) {}

    void add(std::size_t robot, std::size_t activity, std::size_t mode) { entries_.push_back({robot, activity, mode, now_ + tenure_}); }

    bool contains(std::size_t robot, std::size_t activity, std::size_t mode) const
    {
        for (const auto& e : entries_)
            if (e.robot == robot && e.activity == activity && e.mode == mode && e.expires > now_) return true;
        return false;
    }

    /// One sub-heuristic application has passed.
    void tick()
    {
        ++now_;
        std::erase_if(entries_, [&](const Entry& e) { return e.expires <= now_; });
    }

    void clear() { entries_.clear(); }
    std::size_t size() const { return entries_.size(); }

private:
    struct Entry {
        std::size_t robot, activity, mode;
        std::uint64_t expires;
    };
    std::size_t tenure_;
    std::uint64_t now_ = 0;
    std::vector<Entry> entries_;
};

struct SubheuristicResult {
    std::optional<Tuple> tuple; // nullopt: no applicable modification
    double estimate = 0.0;      // predicted energy change (joules)
};

namespace detail {

// Timing of a solution after changing the durations of robot r, keeping the
// robot's first start. Energies are not updated.
inline Solution retime_robot(const Solution& sol, std::size_t r, const std::vector<double>& static_durations,
                             const std::vector<double>& move_durations)
{
    Solution out = sol;
    auto& sched = out.robots[r];
    double t = sched.moves[0].start;
    for (std::size_t i = 0; i < sched.statics.size(); ++i) {
        sched.moves[i].start = t;
        sched.moves[i].duration = move_durations[i];
        t += move_durations[i];
        sched.statics[i].start = t;
        sched.statics[i].duration = static_durations[i];
        t += static_durations[i];
    }
    return out;
}

// Spreads `amount` seconds uniformly over the items not in `skip`: positive
// shortens towards lo, negative prolongs towards hi. Returns what is left.
inline double spread_uniformly(std::vector<double>& x, const std::vector<double>& lo, const std::vector<double>& hi,
                               std::size_t skip, double amount)
{
    const double sign = amount > 0.0 ? 1.0 : -1.0;
    double remaining = std::abs(amount);
    auto room = [&](std::size_t k) { return sign > 0.0 ? x[k] - lo[k] : hi[k] - x[k]; };
    while (remaining > kNumericTol) {
        std::vector<std::size_t> active;
        for (std::size_t k = 0; k < x.size(); ++k)
            if (k != skip && room(k) > kNumericTol) active.push_back(k);
        if (active.empty()) break;
        const double share = remaining / static_cast<double>(active.size());
        for (std::size_t k : active) {
            const double step = std::min(share, room(k));
            x[k] -= sign * step;
            remaining -= step;
        }
    }
    return std::max(remaining, 0.0);
}

// Seconds by which time lags and active collisions touching robot r are violated.
inline double violation_seconds(const Instance& inst, const Solution& sol, std::size_t r)
{
    const TimingView view(inst, sol);
    auto start = [&](const ActivityRef& a) {
        const auto& s = sol.robots[a.robot];
        return a.is_static() ? s.statics[view.static_pos[a.robot][a.index]].start : s.moves[view.move_pos[a.robot][a.index]].start;
    };
    auto dur = [&](const ActivityRef& a) {
        const auto& s = sol.robots[a.robot];
        return a.is_static() ? s.statics[view.static_pos[a.robot][a.index]].duration : s.moves[view.move_pos[a.robot][a.index]].duration;
    };
    double total = 0.0;
    const double ct = inst.cycle_time;
    for (const auto& lag : inst.time_lags) {
        if (lag.from.robot != r && lag.to.robot != r) continue;
        if (!view.executed(lag.from) || !view.executed(lag.to)) continue;
        total += std::max(0.0, (lag.length - ct * lag.height) - (start(lag.to) - start(lag.from)));
    }
    const int nr = static_cast<int>(inst.robots.size());
    for (std::size_t k : active_collisions(inst, sol)) {
        const auto& c = inst.collisions[k];
        if (c.activity_1.robot != r && c.activity_2.robot != r) continue;
        const double si = start(c.activity_1), di = dur(c.activity_1), sj = start(c.activity_2), dj = dur(c.activity_2);
        for (int n = -nr; n <= nr; ++n) total += std::max(0.0, std::min(si + di - sj - n * ct, sj + dj + n * ct - si));
    }
    return total;
}

} // namespace detail

/// Try every non-tabu (static, mode) switch. A mode needing a longer stay
/// prolongs the static and the robot's other activities are shortened
/// uniformly within their windows; a dearer mode shortens the static to its
/// minimum and the others are prolonged uniformly; otherwise the duration is
/// kept. Candidates are scored by the robot's energy change plus a penalty of
/// (violated seconds of cycle time, time lags and collisions) x (robot's mean
/// input power). The best one is applied and the abandoned mode becomes tabu.
/// Movement energy is the exact f, or its linearization when `pwl` is given.
inline SubheuristicResult subheur_power_mode(const Instance& inst, const Tuple& tuple, const Solution& sol, TabuList& tabu,
                                             const PwlTable* pwl = nullptr)
{
    SubheuristicResult best;
    double best_score = kInf;
    std::size_t best_r = 0, best_v = 0, best_old = 0;
    const double ct = inst.cycle_time;
    for (std::size_t r = 0; r < inst.robots.size(); ++r) {
        const auto& robot = inst.robots[r];
        const auto& plan = tuple.robots[r];
        const auto& sched = sol.robots[r];
        const std::size_t n = plan.statics.size();
        double robot_energy = 0.0;
        for (const auto& s : sched.statics) robot_energy += s.energy;
        for (const auto& m : sched.moves) robot_energy += m.energy;
        const double mean_power = robot_energy / ct;

        // statics at 0..n-1, moves at n..2n-1
        std::vector<double> x0(2 * n), lo(2 * n), hi(2 * n);
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t u = plan.statics[k];
            x0[k] = sched.statics[k].duration;
            lo[k] = robot.min_static_duration(u, plan.modes[u]);
            hi[k] = robot.statics[u].d_max;
            const auto& tr = robot.moves[plan.moves[k]].trajectories[plan.trajectories[k]];
            x0[n + k] = sched.moves[k].duration;
            lo[n + k] = tr.d_min;
            hi[n + k] = tr.d_max;
        }
        auto move_energy = [&](std::size_t k, double d) {
            return pwl ? pwl->at(r, plan.moves[k], plan.trajectories[k])(d)
                       : robot.moves[plan.moves[k]].trajectories[plan.trajectories[k]].energy(d);
        };
        const double base_violation = detail::violation_seconds(inst, sol, r);

        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t v = plan.statics[i];
            const std::size_t old_mode = plan.modes[v];
            const auto& act = robot.statics[v];
            const auto& loc = act.locations[plan.locations[i]];
            for (std::size_t m = 0; m < robot.modes.size(); ++m) {
                if (m == old_mode || tabu.contains(r, v, m)) continue;
                const double lo_m = robot.min_static_duration(v, m);
                if (lo_m > act.d_max + kNumericTol) continue;
                std::vector<double> x = x0;
                double target = x[i];
                if (lo_m > x[i])
                    target = lo_m;
                else if (loc.power[m] > loc.power[old_mode])
                    target = lo_m;
                x[i] = target;
                const double breakage = detail::spread_uniformly(x, lo, hi, i, target - x0[i]);
                double delta = (loc.power[m] * x[i]) - sched.statics[i].energy;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k != i) delta += robot.statics[plan.statics[k]].locations[plan.locations[k]].power[plan.modes[plan.statics[k]]] * (x[k] - x0[k]);
                    if (x[n + k] != x0[n + k]) delta += move_energy(k, x[n + k]) - move_energy(k, x0[n + k]);
                }
                const Solution moved = detail::retime_robot(sol, r, std::vector<double>(x.begin(), x.begin() + n),
                                                            std::vector<double>(x.begin() + n, x.end()));
                const double violated = breakage + detail::violation_seconds(inst, moved, r) - base_violation;
                const double score = delta + std::max(violated, 0.0) * mean_power;
                if (score < best_score) {
                    best_score = score;
                    best_r = r;
                    best_v = v;
                    best_old = old_mode;
                    Tuple t = tuple;
                    t.robots[r].modes[v] = m;
                    best.tuple = std::move(t);
                    best.estimate = score;
                }
            }
        }
    }
    if (best.tuple) tabu.add(best_r, best_v, best_old);
    return best;
}

/// Energy of the static at circuit position i of robot r together with its two
/// adjacent movements when the position uses `loc`, entering with trajectory
/// `t_in` and leaving with `t_out`, and the movements split the fixed time K.
struct Substitution {
    std::size_t robot = 0;
    std::size_t position = 0;
    std::size_t location = 0;
    std::size_t t_in = 0;
    std::size_t t_out = 0;
    double d_in = 0.0;
    double value = kInf;
};

/// Interval of feasible entering-movement durations when the two movements share K.
inline std::pair<double, double> substitution_interval(const Trajectory& in, const Trajectory& out, double k)
{
    return {std::max(in.d_min, k - out.d_max), std::min(in.d_max, k - out.d_min)};
}

/// Minimizes f_in(d) + f_out(K - d) + p * d_static over the feasible interval.
template <typename Fin, typename Fout>
std::optional<Substitution> best_split(const Trajectory& in, const Trajectory& out, Fin&& f_in, Fout&& f_out, double k, double static_energy)
{
    const auto [lo, hi] = substitution_interval(in, out, k);
    if (lo > hi + kNumericTol) return std::nullopt;
    const double a = std::min(lo, hi), b = std::max(lo, hi);
    auto g = [&](double d) { return f_in(d) + f_out(k - d) + static_energy; };
    const auto m = golden_section_minimize(g, a, b, 1e-6, 200);
    Substitution s;
    s.d_in = m.x;
    s.value = m.value;
    return s;
}

/// Same with the exact energy functions of the trajectories.
inline std::optional<Substitution> best_split(const Trajectory& in, const Trajectory& out, double k, double static_energy)
{
    return best_split(in, out, in.energy, out.energy, k, static_energy);
}

/// For every interior location of every path, the most energy-friendly
/// location/trajectory substitution that keeps spatial compatibility.
/// Improving substitutions are applied in one sweep; nullopt if none improves.
/// Movement energy is the exact f, or its linearization when `pwl` is given.
inline SubheuristicResult subheur_change_locations(const Instance& inst, const Tuple& tuple, const Solution& sol,
                                                   const PwlTable* pwl = nullptr)
{
    SubheuristicResult res;
    Tuple cur = tuple;
    bool changed = false;
    double gain = 0.0;
    for (std::size_t r = 0; r < inst.robots.size(); ++r) {
        const auto& robot = inst.robots[r];
        const std::size_t n = cur.robots[r].statics.size();
        if (n < 2) continue;
        const auto& sched = sol.robots[r];
        for (std::size_t i = 0; i < n; ++i) {
            auto& plan = cur.robots[r];
            const std::size_t prev = (i + n - 1) % n, next = (i + 1) % n;
            const std::size_t v = plan.statics[i];
            const std::size_t mode = plan.modes[v];
            const auto& e_in = robot.moves[plan.moves[i]];
            const auto& e_out = robot.moves[plan.moves[next]];
            const double d_in = sched.moves[i].duration, d_out = sched.moves[next].duration;
            const double k = d_in + d_out;
            const double d_v = sched.statics[i].duration;
            auto energy = [&](std::size_t e, std::size_t t, double d) {
                return pwl ? pwl->at(r, e, t)(d) : robot.moves[e].trajectories[t].energy(d);
            };
            const double current = energy(plan.moves[i], plan.trajectories[i], d_in) +
                                   energy(plan.moves[next], plan.trajectories[next], d_out) +
                                   robot.statics[v].locations[plan.locations[i]].power[mode] * d_v;
            std::optional<Substitution> best;
            for (std::size_t ti = 0; ti < e_in.trajectories.size(); ++ti) {
                const auto& tin = e_in.trajectories[ti];
                if (tin.from_location != plan.locations[prev]) continue;
                const std::size_t loc = tin.to_location;
                for (std::size_t to = 0; to < e_out.trajectories.size(); ++to) {
                    const auto& tout = e_out.trajectories[to];
                    if (tout.from_location != loc || tout.to_location != plan.locations[next]) continue;
                    if (loc == plan.locations[i] && ti == plan.trajectories[i] && to == plan.trajectories[next]) continue;
                    const double p = robot.statics[v].locations[loc].power[mode];
                    const std::size_t ein = plan.moves[i], eout = plan.moves[next];
                    auto s = best_split(
                        tin, tout, [&](double d) { return energy(ein, ti, d); }, [&](double d) { return energy(eout, to, d); }, k, p * d_v);
                    if (!s || (best && s->value >= best->value)) continue;
                    Tuple trial = cur;
                    trial.robots[r].locations[i] = loc;
                    trial.robots[r].trajectories[i] = ti;
                    trial.robots[r].trajectories[next] = to;
                    if (!violated_compat_pairs(inst, trial).empty()) continue;
                    s->robot = r;
                    s->position = i;
                    s->location = loc;
                    s->t_in = ti;
                    s->t_out = to;
                    best = s;
                }
            }
            if (best && best->value < current - 1e-9 * std::max(1.0, std::abs(current))) {
                plan.locations[i] = best->location;
                plan.trajectories[i] = best->t_in;
                plan.trajectories[next] = best->t_out;
                gain += best->value - current;
                changed = true;
                ++i; // the outgoing movement now belongs to this substitution
            }
        }
    }
    if (changed) {
        res.tuple = std::move(cur);
        res.estimate = gain;
    }
    return res;
}

namespace detail {

// Trajectories of move e between the two locations.
inline std::vector<std::size_t> connecting(const Robot& robot, std::size_t e, std::size_t from, std::size_t to)
{
    std::vector<std::size_t> out;
    const auto& tr = robot.moves[e].trajectories;
    for (std::size_t t = 0; t < tr.size(); ++t)
        if (tr[t].from_location == from && tr[t].to_location == to) out.push_back(t);
    return out;
}

} // namespace detail

/// Re-draw a random subset of one robot's go-through locations and of the
/// trajectories joining them, reconnect through the fastest path and repair
/// spatial compatibility.
inline SubheuristicResult subheur_change_path(const Instance& inst, const Tuple& tuple, CounterRng& rng)
{
    SubheuristicResult res;
    const std::size_t r = rng.index(inst.robots.size());
    const auto& robot = inst.robots[r];
    const auto& plan = tuple.robots[r];
    const std::size_t n = plan.statics.size();
    std::vector<std::size_t> choice;
    bool parallel_trajectories = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (robot.statics[plan.statics[i]].locations.size() > 1) choice.push_back(i);
        if (robot.moves[plan.moves[i]].trajectories.size() > 1) parallel_trajectories = true;
    }
    if (choice.empty() && !parallel_trajectories) return res;
    for (int attempt = 0; attempt < 8; ++attempt) {
        std::vector<std::optional<std::size_t>> forced(n);
        bool any = false;
        for (std::size_t i : choice) {
            if (!rng.bernoulli(0.5)) continue;
            forced[i] = rng.index(robot.statics[plan.statics[i]].locations.size());
            any = true;
        }
        if (!any && !choice.empty() && !parallel_trajectories) {
            const std::size_t i = choice[rng.index(choice.size())];
            forced[i] = rng.index(robot.statics[plan.statics[i]].locations.size());
        }
        const auto seq = fastest_path(robot, plan.statics, plan.moves, &forced);
        if (!seq) continue;
        Tuple t = tuple;
        auto& np = t.robots[r];
        np.locations = seq->locations;
        np.trajectories = seq->trajectories;
        for (std::size_t i = 0; i < n; ++i) {
            if (!rng.bernoulli(0.5)) continue;
            const auto cands = detail::connecting(robot, plan.moves[i], np.locations[(i + n - 1) % n], np.locations[i]);
            np.trajectories[i] = cands[rng.index(cands.size())];
        }
        if (plan_min_duration(robot, np) > inst.cycle_time + kFeasibilityTol) np.trajectories = seq->trajectories;
        auto fixed = fix_spatial_compatibility(inst, std::move(t));
        if (!fixed || *fixed == tuple) continue;
        if (plan_min_duration(robot, fixed->robots[r]) > inst.cycle_time + kFeasibilityTol) continue;
        res.tuple = std::move(fixed);
        return res;
    }
    return res;
}

//----------------------------------------------------------------------------//
// Engine
//----------------------------------------------------------------------------//

enum class SubHeuristic { power_mode = 0, change_locations = 1, change_path = 2 };

inline const char* to_string(SubHeuristic s)
{
    switch (s) {
    case SubHeuristic::power_mode: return "power_mode";
    case SubHeuristic::change_locations: return "change_locations";
    default: return "change_path";
    }
}

/// Phi_max by instance scale: 100 up to 5 robots, 600 up to 8, 1000 beyond.
inline std::size_t default_phi_max(std::size_t robots) { return robots <= 5 ? 100 : robots <= 8 ? 600 : 1000; }

struct HeuristicConfig {
    double time_limit = 10.0;                  // seconds; ignored when evaluation_budget is set
    std::optional<std::uint64_t> evaluation_budget; // LP solves; makes single-worker runs reproducible
    std::size_t phi_max = 0;                   // 0: default_phi_max
    std::size_t workers = 1;
    std::size_t segments = 10;
    std::size_t elite_capacity = 10;
    std::size_t alternatives_limit = 50;
    double improvement_threshold = 0.001;      // relative
    std::size_t tabu_tenure = 7;
    std::uint64_t seed = 0;
    std::size_t tuple_batch = 0;               // 0: 2 x workers
    bool combine_elites = true;
    /// Every new global best: (elapsed seconds, criterion, worker).
    std::function<void(double, double, std::size_t)> progress;
    /// Every feasible solution offered to the elite pool (serialized calls).
    std::function<void(const Solution&)> on_feasible;
    /// Every (sub-heuristic, outcome) step of a worker; outcome is one of
    /// "noop", "infeasible", "improved", "accepted" (serialized calls).
    std::function<void(std::size_t worker, SubHeuristic, const char*)> on_step;
    /// A worker starts improving a freshly evaluated feasible tuple (serialized calls).
    std::function<void(std::size_t worker)> on_tuple;
};

struct ProgressPoint {
    double time = 0.0;
    double energy = 0.0;
    std::size_t worker = 0;
};

struct RunReport {
    std::optional<Solution> best;
    std::optional<Tuple> best_tuple;
    std::vector<std::uint64_t> worker_evaluations;
    std::uint64_t lp_evaluations = 0;
    double lp_evaluations_per_second = 0.0;
    std::uint64_t tuples_processed = 0;
    std::uint64_t feasible_evaluations = 0;
    bool infeasibility_proof = false;
    std::vector<std::size_t> alternatives_per_robot;
    std::vector<bool> enumeration_exhausted;
    std::vector<ProgressPoint> progress;
    double wall_time = 0.0;
    std::string message;
};

namespace detail {

class HeuristicRun {
public:
    HeuristicRun(const Instance& inst, const HeuristicConfig& cfg)
        : inst_(inst), cfg_(cfg), pwl_(inst, cfg.segments), concurrent_(cfg.workers > 1),
          elite_(cfg.elite_capacity, cfg.workers > 1), control_rng_(CounterRng(cfg.seed).split(0xC0)),
          phi_max_(cfg.phi_max ? cfg.phi_max : default_phi_max(inst.robots.size()))
    {
        if (cfg_.workers < 1) throw std::invalid_argument("optimize: worker count must be at least 1");
        if (!cfg_.evaluation_budget && !(cfg_.time_limit > 0.0)) throw std::invalid_argument("optimize: time limit must be positive");
        batch_ = cfg_.tuple_batch ? cfg_.tuple_batch : 2 * cfg_.workers;
    }

    RunReport run()
    {
        start_ = std::chrono::steady_clock::now();
        report_.worker_evaluations.assign(cfg_.workers, 0);
        if (!generate_alternatives()) return finish();
        refill();
        if (cfg_.workers == 1) {
            worker(0);
        } else {
            std::vector<std::thread> threads;
            for (std::size_t w = 0; w < cfg_.workers; ++w) threads.emplace_back([this, w] { worker(w); });
            control_loop();
            for (auto& t : threads) t.join();
        }
        return finish();
    }

private:
    double elapsed() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

    bool out_of_budget() const
    {
        if (stop_.load()) return true;
        if (cfg_.evaluation_budget) return evaluations_.load() >= *cfg_.evaluation_budget;
        return elapsed() >= cfg_.time_limit;
    }

    bool generate_alternatives()
    {
        const std::size_t nr = inst_.robots.size();
        std::vector<AlternativeSet> sets(nr);
        EnumerationOptions opt;
        opt.limit = cfg_.alternatives_limit;
        auto job = [&](std::size_t r) {
            CounterRng rng = CounterRng(cfg_.seed).split(1000 + r);
            return enumerate_alternatives(inst_, r, &rng, opt);
        };
        if (cfg_.workers > 1 && nr > 1) {
            // robots are spread over the workers
            std::vector<std::future<void>> fs;
            std::atomic<std::size_t> next{0};
            for (std::size_t w = 0; w < std::min(cfg_.workers, nr); ++w)
                fs.push_back(std::async(std::launch::async, [&] {
                    for (std::size_t r = next++; r < nr; r = next++) sets[r] = job(r);
                }));
            for (auto& f : fs) f.get();
        } else {
            for (std::size_t r = 0; r < nr; ++r) sets[r] = job(r);
        }
        alternatives_.resize(nr);
        for (std::size_t r = 0; r < nr; ++r) {
            alternatives_[r] = std::move(sets[r].alternatives);
            report_.alternatives_per_robot.push_back(alternatives_[r].size());
            report_.enumeration_exhausted.push_back(sets[r].exhausted);
        }
        for (std::size_t r = 0; r < nr; ++r) {
            if (!alternatives_[r].empty()) continue;
            if (report_.enumeration_exhausted[r]) {
                report_.infeasibility_proof = true;
                report_.message = inst_.robots[r].id + ": exhaustive search found no circuit that fits into the cycle time";
            } else {
                report_.message = inst_.robots[r].id + ": no circuit found within the search budget";
            }
            return false;
        }
        return true;
    }

    // Adds a batch of fresh and recombined tuples; caller holds list_mutex_ when concurrent.
    void refill_locked()
    {
        std::size_t produced = 0;
        const bool use_elites = cfg_.combine_elites && !elite_.empty();
        for (std::size_t k = 0; k < batch_; ++k) {
            std::optional<Tuple> t;
            if (use_elites && k % 2 == 1)
                t = combine_elites(inst_, elite_, control_rng_);
            else
                t = generate_tuple(inst_, alternatives_, control_rng_);
            if (!t) continue;
            list_.push_back(std::move(*t));
            ++produced;
        }
        if (produced == 0) {
            if (++empty_batches_ >= 200) {
                report_.message = "no tuple satisfying spatial compatibility could be generated";
                stop_ = true;
            }
        } else {
            empty_batches_ = 0;
        }
    }

    void refill()
    {
        if (concurrent_) {
            std::lock_guard lock(list_mutex_);
            refill_locked();
            list_cv_.notify_all();
        } else {
            refill_locked();
        }
    }

    void control_loop()
    {
        std::unique_lock lock(list_mutex_);
        while (!out_of_budget()) {
            if (list_.size() < cfg_.workers) {
                refill_locked();
                list_cv_.notify_all();
            }
            control_cv_.wait_for(lock, std::chrono::milliseconds(2));
        }
        stop_ = true;
        list_cv_.notify_all();
    }

    std::optional<Tuple> next_tuple()
    {
        if (!concurrent_) {
            while (list_.empty()) {
                if (out_of_budget()) return std::nullopt;
                refill_locked();
            }
            Tuple t = std::move(list_.front());
            list_.pop_front();
            return t;
        }
        std::unique_lock lock(list_mutex_);
        while (list_.empty()) {
            if (out_of_budget()) return std::nullopt;
            control_cv_.notify_one();
            list_cv_.wait_for(lock, std::chrono::milliseconds(5));
        }
        Tuple t = std::move(list_.front());
        list_.pop_front();
        if (list_.size() < cfg_.workers) control_cv_.notify_one();
        return t;
    }

    template <typename F>
    void serialized(F&& f)
    {
        if (concurrent_) {
            std::lock_guard lock(best_mutex_);
            f();
        } else {
            f();
        }
    }

    std::optional<Solution> evaluate(const Tuple& t, std::size_t w)
    {
        TupleEvaluation ev = evaluate_tuple(inst_, pwl_, t);
        evaluations_ += ev.lp_call_count;
        report_.worker_evaluations[w] += ev.lp_call_count;
        if (ev.status != EvaluationStatus::feasible) return std::nullopt;
        Solution& sol = *ev.solution;
        feasible_evaluations_++;
        elite_.offer(sol, t);
        serialized([&] {
            if (cfg_.on_feasible) cfg_.on_feasible(sol);
            if (!best_ || sol.total_energy < best_->total_energy) {
                best_ = sol;
                best_tuple_ = t;
                const double now = elapsed();
                report_.progress.push_back({now, sol.total_energy, w});
                if (cfg_.progress) cfg_.progress(now, sol.total_energy, w);
            }
        });
        return std::move(*ev.solution);
    }

    void step(std::size_t w, SubHeuristic s, const char* outcome)
    {
        if (cfg_.on_step) serialized([&] { cfg_.on_step(w, s, outcome); });
    }

    void worker(std::size_t w)
    {
        CounterRng rng = CounterRng(cfg_.seed).split(w + 1);
        TabuList tabu(cfg_.tabu_tenure);
        while (!out_of_budget()) {
            auto tuple = next_tuple();
            if (!tuple) break;
            ++tuples_processed_;
            auto sol = evaluate(*tuple, w);
            if (!sol) continue;
            Tuple current = std::move(*tuple);
            Solution current_sol = std::move(*sol);
            double reference = current_sol.total_energy;
            std::size_t phi = 0;
            int sh = 0;
            if (cfg_.on_tuple) serialized([&] { cfg_.on_tuple(w); });
            while (phi < phi_max_ && !out_of_budget()) {
                const auto kind = static_cast<SubHeuristic>(sh);
                SubheuristicResult mod;
                switch (kind) {
                case SubHeuristic::power_mode: mod = subheur_power_mode(inst_, current, current_sol, tabu, &pwl_); break;
                case SubHeuristic::change_locations: mod = subheur_change_locations(inst_, current, current_sol); break;
                case SubHeuristic::change_path: mod = subheur_change_path(inst_, current, rng); break;
                }
                tabu.tick();
                if (!mod.tuple) {
                    step(w, kind, "noop");
                    ++phi;
                    sh = (sh + 1) % 3;
                    continue;
                }
                auto next = evaluate(*mod.tuple, w);
                if (!next) {
                    // keep the last feasible tuple
                    step(w, kind, "infeasible");
                    ++phi;
                    sh = (sh + 1) % 3;
                    continue;
                }
                current = std::move(*mod.tuple);
                current_sol = std::move(*next);
                if (current_sol.total_energy < reference * (1.0 - cfg_.improvement_threshold)) {
                    reference = current_sol.total_energy;
                    phi = 0;
                    step(w, kind, "improved");
                } else {
                    reference = std::min(reference, current_sol.total_energy);
                    ++phi;
                    sh = (sh + 1) % 3;
                    step(w, kind, "accepted");
                }
            }
        }
    }

    RunReport finish()
    {
        report_.wall_time = elapsed();
        report_.lp_evaluations = evaluations_.load();
        report_.lp_evaluations_per_second = report_.wall_time > 0 ? static_cast<double>(report_.lp_evaluations) / report_.wall_time : 0.0;
        report_.tuples_processed = tuples_processed_.load();
        report_.feasible_evaluations = feasible_evaluations_.load();
        if (best_) {
            best_->metadata.solver = "cellopt-heuristic";
            best_->metadata.seed = cfg_.seed;
            // budgeted runs leave out timing so their output is reproducible
            if (!cfg_.evaluation_budget) {
                best_->metadata.time_limit = cfg_.time_limit;
                best_->metadata.wall_time = report_.wall_time;
            }
            best_->metadata.lp_evaluations = report_.lp_evaluations;
            report_.best = best_;
            report_.best_tuple = best_tuple_;
        }
        if (!best_ && report_.message.empty()) report_.message = "no feasible solution found";
        return std::move(report_);
    }

    const Instance& inst_;
    HeuristicConfig cfg_;
    PwlTable pwl_;
    bool concurrent_;
    ElitePool elite_;
    CounterRng control_rng_;
    std::size_t phi_max_;
    std::size_t batch_ = 2;
    AlternativeStore alternatives_;
    std::deque<Tuple> list_;
    std::mutex list_mutex_, best_mutex_;
    std::condition_variable list_cv_, control_cv_;
    std::atomic<bool> stop_{false};
    std::atomic<std::uint64_t> evaluations_{0}, tuples_processed_{0}, feasible_evaluations_{0};
    std::size_t empty_batches_ = 0;
    std::optional<Solution> best_;
    std::optional<Tuple> best_tuple_;
    RunReport report_;
    std::chrono::steady_clock::time_point start_;
};

} // namespace detail

/// Runs the heuristic; the report's best solution (if any) passes check_solution.
inline RunReport optimize(const Instance& inst, const HeuristicConfig& config)
{
    detail::HeuristicRun run(inst, config);
    return run.run();
}

} // namespace cellopt
