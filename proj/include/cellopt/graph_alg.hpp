#pragma once

// Alternative orders of operations. A robot's Hamiltonian circuits through its
// static activities are found as Hamiltonian paths of a graph in which the home
// activity is split into a source and a sink node. The depth-first search
// prunes prefixes with all-pairs minimum durations.

#include "cellopt/cell_model.hpp"

#include <bit>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

namespace cellopt {

struct SearchArc {
    std::size_t from = 0;
    std::size_t to = 0;
    std::size_t move = 0; // dynamic activity index
    double weight = 0.0;  // fastest trajectory of the move
};

/// Node 0 is the source (home, departing), nodes 1..n-1 the other static
/// activities, node n the sink (home, returning).
struct SearchGraph {
    std::size_t source = 0;
    std::size_t sink = 0;
    std::vector<std::size_t> node_activity;
    std::vector<double> node_weight;
    std::vector<SearchArc> arcs;
    std::vector<std::vector<std::size_t>> out_arcs;

    std::size_t node_count() const { return node_activity.size(); }
};

/// Fastest stationary time of static activity `v` over all modes.
inline double min_static_weight(const Robot& robot, std::size_t v)
{
    double m = kInf;
    for (const auto& mode : robot.modes) m = std::min(m, mode.min_switch_time);
    if (robot.modes.empty()) m = 0.0;
    return std::max(robot.statics[v].d_min, m);
}

inline SearchGraph build_search_graph(const Robot& robot)
{
    const std::size_t n = robot.statics.size();
    SearchGraph g;
    g.source = 0;
    g.sink = n;
    g.node_activity.resize(n + 1);
    g.node_weight.resize(n + 1);
    std::vector<std::size_t> node_of(n);
    std::size_t next = 1;
    for (std::size_t v = 0; v < n; ++v) {
        if (v == robot.home) continue;
        node_of[v] = next;
        g.node_activity[next] = v;
        g.node_weight[next] = min_static_weight(robot, v);
        ++next;
    }
    g.node_activity[g.source] = g.node_activity[g.sink] = robot.home;
    g.node_weight[g.source] = 0.0; // the source's stationary time closes the previous cycle
    g.node_weight[g.sink] = min_static_weight(robot, robot.home);
    g.out_arcs.resize(n + 1);
    for (std::size_t e = 0; e < robot.moves.size(); ++e) {
        const auto& mv = robot.moves[e];
        double w = kInf;
        for (const auto& t : mv.trajectories) w = std::min(w, t.d_min);
        SearchArc arc;
        arc.from = mv.from == robot.home ? g.source : node_of[mv.from];
        arc.to = mv.to == robot.home ? g.sink : node_of[mv.to];
        arc.move = e;
        arc.weight = w;
        g.out_arcs[arc.from].push_back(g.arcs.size());
        g.arcs.push_back(arc);
    }
    return g;
}

using DurationMatrix = std::vector<std::vector<double>>;

/// Floyd-Warshall. U(a,b) counts traversed arcs plus every node after `a`
/// (intermediate nodes and the destination); U(a,a) = 0.
inline DurationMatrix all_pairs_min_duration(const SearchGraph& g)
{
    const std::size_t n = g.node_count();
    DurationMatrix u(n, std::vector<double>(n, kInf));
    for (std::size_t i = 0; i < n; ++i) u[i][i] = 0.0;
    for (const auto& a : g.arcs)
        if (a.from != a.to) u[a.from][a.to] = std::min(u[a.from][a.to], a.weight + g.node_weight[a.to]);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) {
            if (u[i][k] == kInf) continue;
            for (std::size_t j = 0; j < n; ++j)
                if (u[i][k] + u[k][j] < u[i][j]) u[i][j] = u[i][k] + u[k][j];
        }
    return u;
}

/// Concrete go-through locations and fastest trajectories of a circuit.
struct LocationSequence {
    std::vector<std::size_t> locations;    // aligned with circuit statics
    std::vector<std::size_t> trajectories; // aligned with circuit moves
    double duration = 0.0;                 // minimum possible circuit duration
};

/// Shortest path through the layered location DAG of a circuit. `forced`, when
/// given, pins the location at some circuit positions. Does not look at CT.
inline std::optional<LocationSequence> fastest_path(const Robot& robot, const std::vector<std::size_t>& statics,
                                                    const std::vector<std::size_t>& moves,
                                                    const std::vector<std::optional<std::size_t>>* forced = nullptr)
{
    const std::size_t n = statics.size();
    if (n == 0 || moves.size() != n) return std::nullopt;
    double stationary = 0.0;
    for (std::size_t v : statics) stationary += min_static_weight(robot, v);

    const std::size_t home = statics.back();
    const std::size_t home_locs = robot.statics[home].locations.size();
    std::optional<LocationSequence> best;
    for (std::size_t lh = 0; lh < home_locs; ++lh) {
        if (forced && (*forced)[n - 1] && *(*forced)[n - 1] != lh) continue;
        // dist over locations of the current layer
        std::vector<double> dist(home_locs, kInf);
        dist[lh] = 0.0;
        std::vector<std::vector<std::size_t>> pred_loc(n), pred_traj(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& mv = robot.moves[moves[i]];
            const std::size_t v = statics[i];
            const std::size_t nl = robot.statics[v].locations.size();
            std::vector<double> nd(nl, kInf);
            pred_loc[i].assign(nl, 0);
            pred_traj[i].assign(nl, 0);
            for (std::size_t t = 0; t < mv.trajectories.size(); ++t) {
                const auto& tr = mv.trajectories[t];
                if (tr.from_location >= dist.size() || dist[tr.from_location] == kInf) continue;
                const std::size_t b = tr.to_location;
                if (i == n - 1 && b != lh) continue;
                if (forced && (*forced)[i] && *(*forced)[i] != b) continue;
                const double cand = dist[tr.from_location] + tr.d_min;
                if (cand < nd[b]) {
                    nd[b] = cand;
                    pred_loc[i][b] = tr.from_location;
                    pred_traj[i][b] = t;
                }
            }
            dist = std::move(nd);
        }
        if (dist[lh] == kInf) continue;
        const double total = dist[lh] + stationary;
        if (best && total >= best->duration) continue;
        LocationSequence seq;
        seq.locations.resize(n);
        seq.trajectories.resize(n);
        seq.duration = total;
        std::size_t loc = lh;
        for (std::size_t i = n; i-- > 0;) {
            seq.locations[i] = loc;
            seq.trajectories[i] = pred_traj[i][loc];
            loc = pred_loc[i][loc];
        }
        best = std::move(seq);
    }
    return best;
}

/// Fastest closed path of a circuit; nullopt when no connected location
/// sequence exists or the fastest one exceeds the cycle time.
inline std::optional<LocationSequence> fastest_location_sequence(const Robot& robot, const std::vector<std::size_t>& statics,
                                                                 const std::vector<std::size_t>& moves, double cycle_time)
{
    auto seq = fastest_path(robot, statics, moves);
    if (!seq || seq->duration > cycle_time + kFeasibilityTol) return std::nullopt;
    return seq;
}

/// One order of operations of a robot together with its fastest closed path.
struct Alternative {
    std::size_t robot = 0;
    std::vector<std::size_t> statics; // circuit order, home last
    std::vector<std::size_t> moves;   // moves[i] enters statics[i]
    double fastest_duration = 0.0;
    std::vector<std::size_t> fastest_locations;
    std::vector<std::size_t> fastest_trajectories;
};

struct AlternativeSet {
    std::vector<Alternative> alternatives;
    bool exhausted = false; // the whole search tree was explored
    std::uint64_t expansions = 0;
};

struct EnumerationOptions {
    std::optional<std::size_t> limit;           // nullopt: exhaustive
    std::uint64_t expansion_budget = 50'000'000; // DFS node expansions before giving up
};

namespace detail {

class HamiltonianSearch {
public:
    HamiltonianSearch(const Robot& robot, std::size_t robot_index, const SearchGraph& g, const DurationMatrix& u, double ct,
                      CounterRng* rng, const EnumerationOptions& opt)
        : robot_(robot), robot_index_(robot_index), g_(g), u_(u), ct_(ct), rng_(rng), opt_(opt)
    {
    }

    AlternativeSet run()
    {
        if (g_.node_count() > 58) throw std::invalid_argument("enumerate_alternatives: at most 57 static activities per robot");
        path_nodes_ = {g_.source};
        aborted_ = false;
        dfs(g_.source, std::uint64_t{1} << g_.source, 0.0);
        out_.exhausted = !aborted_;
        return std::move(out_);
    }

private:
    bool prune(std::size_t at, std::uint64_t visited, double length) const
    {
        if (length + u_[at][g_.sink] > ct_ + kFeasibilityTol) return true;
        for (std::size_t v = 0; v < g_.node_count(); ++v) {
            if (v == g_.sink || (visited >> v) & 1U) continue;
            if (u_[at][v] == kInf || u_[v][g_.sink] == kInf) return true;
            if (length + u_[at][v] + u_[v][g_.sink] > ct_ + kFeasibilityTol) return true;
        }
        return false;
    }

    // Returns true when at least one Hamiltonian path within CT (by minimum
    // durations) was completed in this subtree.
    bool dfs(std::size_t at, std::uint64_t visited, double length)
    {
        if (aborted_) return false;
        if (++out_.expansions > opt_.expansion_budget) {
            aborted_ = true;
            return false;
        }
        const std::uint64_t key = (visited << 6) | at; // node_count <= 58
        const auto memo = failed_.find(key);
        if (memo != failed_.end() && memo->second <= length) return false;
        if (prune(at, visited, length)) {
            remember(key, length);
            return false;
        }
        const std::size_t inner = g_.node_count() - 1; // every node but the sink
        const bool all_inner = std::popcount(visited) == static_cast<int>(inner);

        std::vector<std::size_t> children;
        for (std::size_t a : g_.out_arcs[at]) {
            const auto& arc = g_.arcs[a];
            if (arc.to == g_.sink ? all_inner : !((visited >> arc.to) & 1U)) children.push_back(a);
        }
        if (rng_) shuffle(children, *rng_);
        bool completed = false;
        for (std::size_t a : children) {
            const auto& arc = g_.arcs[a];
            const double len = length + arc.weight + g_.node_weight[arc.to];
            if (arc.to == g_.sink) {
                if (len > ct_ + kFeasibilityTol) continue;
                completed = true;
                path_arcs_.push_back(a);
                emit();
                path_arcs_.pop_back();
            } else {
                path_arcs_.push_back(a);
                completed |= dfs(arc.to, visited | (std::uint64_t{1} << arc.to), len);
                path_arcs_.pop_back();
            }
            if (aborted_ || limit_reached()) return true;
        }
        if (!completed) remember(key, length);
        return completed;
    }

    void remember(std::uint64_t key, double length)
    {
        auto [it, inserted] = failed_.emplace(key, length);
        if (!inserted) it->second = std::min(it->second, length);
    }

    bool limit_reached() const { return opt_.limit && out_.alternatives.size() >= *opt_.limit; }

    void emit()
    {
        Alternative alt;
        alt.robot = robot_index_;
        for (std::size_t a : path_arcs_) {
            const auto& arc = g_.arcs[a];
            alt.moves.push_back(arc.move);
            alt.statics.push_back(g_.node_activity[arc.to]);
        }
        const auto seq = fastest_location_sequence(robot_, alt.statics, alt.moves, ct_);
        if (!seq) return; // the related path cannot be timed within CT
        alt.fastest_duration = seq->duration;
        alt.fastest_locations = seq->locations;
        alt.fastest_trajectories = seq->trajectories;
        out_.alternatives.push_back(std::move(alt));
        if (limit_reached()) aborted_ = true;
    }

    const Robot& robot_;
    std::size_t robot_index_;
    const SearchGraph& g_;
    const DurationMatrix& u_;
    double ct_;
    CounterRng* rng_;
    EnumerationOptions opt_;
    std::vector<std::size_t> path_nodes_;
    std::vector<std::size_t> path_arcs_;
    std::unordered_map<std::uint64_t, double> failed_;
    AlternativeSet out_;
    bool aborted_ = false;
};

} // namespace detail

/// Randomized pruned search for circuits whose fastest closed path fits into
/// the cycle time. `exhausted` with an empty result proves that the robot has
/// no feasible circuit. Reaching `limit` leaves `exhausted` false.
inline AlternativeSet enumerate_alternatives(const Robot& robot, std::size_t robot_index, const SearchGraph& g,
                                             const DurationMatrix& u, double cycle_time, CounterRng* rng,
                                             const EnumerationOptions& options = {})
{
    detail::HamiltonianSearch search(robot, robot_index, g, u, cycle_time, rng, options);
    return search.run();
}

inline AlternativeSet enumerate_alternatives(const Instance& inst, std::size_t robot_index, CounterRng* rng,
                                             const EnumerationOptions& options = {})
{
    const Robot& robot = inst.robots[robot_index];
    const auto g = build_search_graph(robot);
    const auto u = all_pairs_min_duration(g);
    return enumerate_alternatives(robot, robot_index, g, u, inst.cycle_time, rng, options);
}

} // namespace cellopt
