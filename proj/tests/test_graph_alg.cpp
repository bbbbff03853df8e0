#include "support.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>

using namespace cellopt;
using namespace cellopt::test;

namespace {

double stationary(const Robot& r, std::size_t v)
{
    double m = kInf;
    for (const auto& mode : r.modes) m = std::min(m, mode.min_switch_time);
    return std::max(r.statics[v].d_min, m);
}

// Fastest closed path by trying every location tuple.
std::optional<double> brute_fastest(const Robot& r, const std::vector<std::size_t>& statics, const std::vector<std::size_t>& moves)
{
    const std::size_t n = statics.size();
    std::vector<std::size_t> loc(n, 0);
    std::optional<double> best;
    while (true) {
        double total = 0.0;
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            const std::size_t from = loc[(i + n - 1) % n], to = loc[i];
            double m = kInf;
            for (const auto& t : r.moves[moves[i]].trajectories)
                if (t.from_location == from && t.to_location == to) m = std::min(m, t.d_min);
            ok = m < kInf;
            total += m + stationary(r, statics[i]);
        }
        if (ok && (!best || total < *best)) best = total;
        std::size_t k = 0;
        while (k < n && ++loc[k] == r.statics[statics[k]].locations.size()) loc[k++] = 0;
        if (k == n) break;
    }
    return best;
}

// Every Hamiltonian circuit (home last) with its fastest duration.
std::map<std::vector<std::size_t>, double> brute_circuits(const Robot& r)
{
    std::vector<std::size_t> others;
    for (std::size_t v = 0; v < r.statics.size(); ++v)
        if (v != r.home) others.push_back(v);
    std::map<std::vector<std::size_t>, double> out;
    do {
        std::vector<std::size_t> statics = others;
        statics.push_back(r.home);
        std::vector<std::size_t> moves;
        std::size_t prev = r.home;
        for (std::size_t v : statics) {
            const auto e = r.find_move(prev, v);
            if (!e) break;
            moves.push_back(*e);
            prev = v;
        }
        if (moves.size() != statics.size()) continue;
        if (const auto d = brute_fastest(r, statics, moves)) out[statics] = *d;
    } while (std::next_permutation(others.begin(), others.end()));
    return out;
}

Robot random_robot(CounterRng& rng, std::size_t n, double edge_p)
{
    RobotBuilder b("r", {{"hold", 0.0}, {"brake", rng.uniform(0.0, 3.0)}});
    for (std::size_t v = 0; v < n; ++v) {
        std::vector<std::vector<double>> powers(1 + rng.index(2), std::vector<double>{100.0, 20.0});
        b.stat("v" + std::to_string(v), rng.uniform(0.5, 3.0), 10.0, powers);
    }
    Robot r = b.build();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || !rng.bernoulli(edge_p)) continue;
            DynamicActivity e{"e" + std::to_string(i) + "_" + std::to_string(j), i, j, true, {}};
            for (std::size_t a = 0; a < r.statics[i].locations.size(); ++a)
                for (std::size_t c = 0; c < r.statics[j].locations.size(); ++c)
                    if (rng.bernoulli(0.8)) {
                        const double lo = rng.uniform(0.5, 2.5);
                        e.trajectories.push_back(traj(e.id + "_t" + std::to_string(e.trajectories.size()), a, c, lo, 2 * lo));
                    }
            if (!e.trajectories.empty()) r.moves.push_back(std::move(e));
        }
    return r;
}

std::set<std::vector<std::size_t>> circuit_set(const AlternativeSet& s)
{
    std::set<std::vector<std::size_t>> out;
    for (const auto& a : s.alternatives) out.insert(a.statics);
    return out;
}

Robot triangle()
{
    return RobotBuilder("r").stat("h", 1.0, 9.0).stat("a", 2.0, 9.0).stat("b", 3.0, 9.0).link(0, 1, 1.0, 2.0).link(1, 2, 1.5, 2.0).link(2, 0, 0.5, 2.0).build();
}

} // namespace

TEST(SearchGraph, TriangleHasForcedPath)
{
    const Robot r = triangle();
    const auto g = build_search_graph(r);
    EXPECT_EQ(g.node_count(), 4u);
    for (const auto& a : g.arcs) {
        EXPECT_NE(a.to, g.source);
        EXPECT_NE(a.from, g.sink);
    }
    const auto set = enumerate_alternatives(single_robot_instance(r, 100.0), 0, nullptr);
    ASSERT_EQ(set.alternatives.size(), 1u);
    EXPECT_TRUE(set.exhausted);
    EXPECT_EQ(set.alternatives[0].statics, (std::vector<std::size_t>{1, 2, 0}));
    EXPECT_EQ(set.alternatives[0].moves, (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_DOUBLE_EQ(set.alternatives[0].fastest_duration, 1.0 + 2.0 + 1.5 + 3.0 + 0.5 + 1.0);
}

TEST(SearchGraph, ArcsMapOneToOneAndCarryMinDurations)
{
    const Instance inst = load_fixture("example_cell.json");
    for (const auto& r : inst.robots) {
        const auto g = build_search_graph(r);
        EXPECT_EQ(g.node_count(), r.statics.size() + 1);
        ASSERT_EQ(g.arcs.size(), r.moves.size());
        std::set<std::size_t> seen;
        for (const auto& a : g.arcs) {
            seen.insert(a.move);
            const auto& mv = r.moves[a.move];
            EXPECT_EQ(g.node_activity[a.from], mv.from);
            EXPECT_EQ(g.node_activity[a.to], mv.to);
            double w = kInf;
            for (const auto& t : mv.trajectories) w = std::min(w, t.d_min);
            EXPECT_EQ(a.weight, w);
            EXPECT_GE(a.weight, 0.0);
        }
        EXPECT_EQ(seen.size(), r.moves.size());
        for (std::size_t k = 1; k < g.node_count(); ++k) EXPECT_EQ(g.node_weight[k], stationary(r, g.node_activity[k]));
        EXPECT_EQ(g.node_weight[g.source], 0.0);
    }
}

TEST(DurationMatrix, OneHopAndUnreachable)
{
    const Robot r = RobotBuilder("r").stat("h", 4.0, 9.0).stat("b", 1.0, 9.0).link(0, 1, 2.0, 3.0).link(1, 0, 1.0, 3.0).build();
    const auto g = build_search_graph(r);
    const auto u = all_pairs_min_duration(g);
    EXPECT_DOUBLE_EQ(u[g.source][1], 3.0);
    EXPECT_DOUBLE_EQ(u[g.source][g.sink], 2.0 + 1.0 + 1.0 + 4.0);
    EXPECT_EQ(u[g.sink][g.source], kInf);
    EXPECT_EQ(u[1][g.source], kInf);
    EXPECT_EQ(u[1][1], 0.0);
}

TEST(DurationMatrix, MatchesSimplePathEnumeration)
{
    CounterRng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        SearchGraph g;
        const std::size_t n = 8;
        g.node_activity.resize(n);
        g.node_weight.resize(n);
        g.out_arcs.resize(n);
        g.sink = n - 1;
        for (std::size_t i = 0; i < n; ++i) g.node_weight[i] = i == 0 ? 0.0 : rng.uniform(0.0, 3.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j && rng.bernoulli(0.3)) {
                    g.out_arcs[i].push_back(g.arcs.size());
                    g.arcs.push_back({i, j, g.arcs.size(), rng.uniform(0.0, 5.0)});
                }
        const auto u = all_pairs_min_duration(g);
        // exhaustive DFS over simple paths
        std::vector<std::vector<double>> ref(n, std::vector<double>(n, kInf));
        std::vector<bool> on(n, false);
        auto dfs = [&](auto&& self, std::size_t start, std::size_t v, double len) -> void {
            ref[start][v] = std::min(ref[start][v], len);
            on[v] = true;
            for (std::size_t k : g.out_arcs[v]) {
                const auto& a = g.arcs[k];
                if (!on[a.to]) self(self, start, a.to, len + a.weight + g.node_weight[a.to]);
            }
            on[v] = false;
        };
        for (std::size_t s = 0; s < n; ++s) dfs(dfs, s, s, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (ref[i][j] == kInf)
                    EXPECT_EQ(u[i][j], kInf);
                else
                    EXPECT_NEAR(u[i][j], ref[i][j], 1e-9);
                for (std::size_t k = 0; k < n; ++k)
                    if (u[i][k] < kInf && u[k][j] < kInf) {
                        EXPECT_LE(u[i][j], u[i][k] + u[k][j] + 1e-9);
                    }
            }
    }
}

TEST(Enumeration, CircuitLongerThanCycleTime)
{
    const Robot r = triangle(); // fastest circuit 9 s
    const auto set = enumerate_alternatives(single_robot_instance(r, 8.9), 0, nullptr);
    EXPECT_TRUE(set.alternatives.empty());
    EXPECT_TRUE(set.exhausted);
    EXPECT_EQ(enumerate_alternatives(single_robot_instance(r, 9.0), 0, nullptr).alternatives.size(), 1u);
}

TEST(Enumeration, ExampleCellHasTwoOrders)
{
    Instance inst = load_fixture("example_cell.json");
    inst.cycle_time = 1000.0;
    const Robot& r1 = inst.robots[0];
    auto idx = [&](const std::string& id) {
        for (std::size_t v = 0; v < r1.statics.size(); ++v)
            if (r1.statics[v].id == id) return v;
        ADD_FAILURE() << id;
        return std::size_t{0};
    };
    const auto set = enumerate_alternatives(inst, 0, nullptr);
    EXPECT_TRUE(set.exhausted);
    const std::set<std::vector<std::size_t>> expect{{idx("v2"), idx("v3"), idx("v4"), idx("v1")},
                                                    {idx("v3"), idx("v2"), idx("v4"), idx("v1")}};
    EXPECT_EQ(circuit_set(set), expect);
}

TEST(Enumeration, ExhaustiveMatchesPermutationBruteForce)
{
    CounterRng rng(23);
    int compared = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const Robot r = random_robot(rng, 7, 0.55);
        const auto all = brute_circuits(r);
        std::vector<double> durations;
        for (const auto& [c, d] : all) durations.push_back(d);
        std::sort(durations.begin(), durations.end());
        // CT between two distinct durations, roughly in the middle
        double ct = 1000.0;
        if (durations.size() >= 2) {
            const std::size_t k = durations.size() / 2;
            ct = 0.5 * (durations[k - 1] + durations[k]);
        }
        std::set<std::vector<std::size_t>> expect;
        for (const auto& [c, d] : all)
            if (d <= ct) expect.insert(c);
        const auto set = enumerate_alternatives(single_robot_instance(r, ct), 0, nullptr);
        EXPECT_TRUE(set.exhausted);
        EXPECT_EQ(circuit_set(set), expect) << "trial " << trial;
        for (const auto& a : set.alternatives) EXPECT_NEAR(a.fastest_duration, all.at(a.statics), 1e-9);
        compared += !expect.empty();
    }
    EXPECT_GT(compared, 10);
}

TEST(Enumeration, LimitAndSeedReproducibility)
{
    CounterRng gen(3);
    Robot r = random_robot(gen, 7, 0.8);
    const Instance inst = single_robot_instance(r, 1000.0);
    const auto total = brute_circuits(r).size();
    ASSERT_GT(total, 4u);
    CounterRng a(9), b(9);
    const auto x = enumerate_alternatives(inst, 0, &a, EnumerationOptions{.limit = 3});
    const auto y = enumerate_alternatives(inst, 0, &b, EnumerationOptions{.limit = 3});
    EXPECT_EQ(x.alternatives.size(), 3u);
    EXPECT_FALSE(x.exhausted);
    ASSERT_EQ(x.alternatives.size(), y.alternatives.size());
    for (std::size_t i = 0; i < x.alternatives.size(); ++i) EXPECT_EQ(x.alternatives[i].statics, y.alternatives[i].statics);
}

TEST(FastestSequence, SingleLocationSumsMinimums)
{
    const Robot r = triangle();
    const auto seq = fastest_location_sequence(r, {1, 2, 0}, {0, 1, 2}, 100.0);
    ASSERT_TRUE(seq.has_value());
    EXPECT_DOUBLE_EQ(seq->duration, 9.0);
    EXPECT_EQ(seq->locations, (std::vector<std::size_t>{0, 0, 0}));
}

TEST(FastestSequence, TwoByTwoMatchesBruteForce)
{
    CounterRng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        Robot r = RobotBuilder("r").stat("h", 1.0, 9.0, {{100.0}, {100.0}}).stat("a", 1.0, 9.0, {{100.0}, {100.0}}).build();
        for (auto [from, to] : {std::pair<std::size_t, std::size_t>{0, 1}, {1, 0}}) {
            DynamicActivity e{"e" + std::to_string(from) + std::to_string(to), from, to, false, {}};
            for (std::size_t a = 0; a < 2; ++a)
                for (std::size_t b = 0; b < 2; ++b) {
                    const double lo = rng.uniform(0.5, 4.0);
                    e.trajectories.push_back(traj(e.id + "_" + std::to_string(a) + std::to_string(b), a, b, lo, lo + 1));
                }
            r.moves.push_back(e);
        }
        const auto seq = fastest_location_sequence(r, {1, 0}, {0, 1}, 100.0);
        ASSERT_TRUE(seq.has_value());
        EXPECT_NEAR(seq->duration, *brute_fastest(r, {1, 0}, {0, 1}), 1e-12);
        // the returned trajectories realise the reported duration
        double sum = 2.0;
        for (std::size_t i = 0; i < 2; ++i) {
            const auto& t = r.moves[i].trajectories[seq->trajectories[i]];
            EXPECT_EQ(t.to_location, seq->locations[i]);
            EXPECT_EQ(t.from_location, seq->locations[(i + 1) % 2]);
            sum += t.d_min;
        }
        EXPECT_NEAR(sum, seq->duration, 1e-12);
        EXPECT_FALSE(fastest_location_sequence(r, {1, 0}, {0, 1}, seq->duration - 1e-3).has_value());
    }
}

TEST(FastestSequence, DisconnectedLocationsAreInfeasible)
{
    Robot r = RobotBuilder("r").stat("h", 1.0, 9.0, {{100.0}, {100.0}}).stat("a", 1.0, 9.0).build();
    r.moves.push_back({"e01", 0, 1, false, {traj("t", 0, 0, 1, 2)}});
    r.moves.push_back({"e10", 1, 0, false, {traj("t", 0, 1, 1, 2)}}); // returns to the other home location
    EXPECT_FALSE(fastest_path(r, {1, 0}, {0, 1}).has_value());
}

TEST(FastestSequence, LowerBoundsWitnessTiming)
{
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto g = generated("small", seed);
        for (std::size_t r = 0; r < g.instance.robots.size(); ++r) {
            std::vector<std::size_t> statics, moves;
            double busy = 0.0;
            for (const auto& s : g.witness.robots[r].statics) statics.push_back(s.activity), busy += s.duration;
            for (const auto& m : g.witness.robots[r].moves) moves.push_back(m.activity), busy += m.duration;
            const auto seq = fastest_path(g.instance.robots[r], statics, moves);
            ASSERT_TRUE(seq.has_value());
            EXPECT_LE(seq->duration, busy + 1e-9);
        }
    }
}
