#include "support.hpp"

#include <gtest/gtest.h>

using namespace cellopt;
using namespace cellopt::test;

namespace {

// Same program as a plain LP: one column per piece plus the fixed lower ends.
std::optional<double> allocation_by_simplex(const std::vector<DurationCost>& costs, double total)
{
    LinearProgram lp;
    std::vector<LpTerm> row;
    double rhs = total;
    for (const auto& c : costs) {
        lp.objective_offset += c.base;
        rhs -= c.lo;
        for (const auto& [slope, width] : c.pieces) row.push_back({lp.add_column(slope, 0.0, width), 1.0});
    }
    lp.add_row(row, Relation::equal, rhs);
    const auto res = solve_lp(lp);
    if (res.status != LpStatus::optimal) return std::nullopt;
    return res.objective;
}

RobotPlan two_step_plan() { return RobotPlan{{1, 0}, {0, 1}, {0, 0}, {0, 0}, {0, 0}}; }

} // namespace

TEST(MinCostAllocation, MatchesSimplex)
{
    CounterRng rng(17);
    std::size_t feasible = 0;
    for (int k = 0; k < 300; ++k) {
        std::vector<DurationCost> costs;
        double lo_sum = 0.0, hi_sum = 0.0;
        const auto items = rng.integer(1, 5);
        for (std::int64_t i = 0; i < items; ++i) {
            DurationCost c;
            c.lo = rng.uniform(0.0, 3.0);
            c.base = rng.uniform(0.0, 100.0);
            double slope = rng.uniform(-50.0, 50.0);
            lo_sum += c.lo;
            hi_sum += c.lo;
            const auto pieces = rng.integer(0, 4);
            for (std::int64_t p = 0; p < pieces; ++p) {
                const double w = rng.uniform(0.1, 2.0);
                c.pieces.push_back({slope, w});
                hi_sum += w;
                slope += rng.uniform(0.0, 20.0);
            }
            costs.push_back(c);
        }
        const double total = rng.uniform(lo_sum - 1.0, hi_sum + 1.0);
        const auto got = min_cost_allocation(costs, total);
        const auto want = allocation_by_simplex(costs, total);
        ASSERT_EQ(got.has_value(), want.has_value()) << "case " << k << " total " << total;
        if (!got) continue;
        ++feasible;
        EXPECT_NEAR(*got, *want, 1e-7 * std::max(1.0, std::abs(*want))) << "case " << k;
    }
    EXPECT_GT(feasible, 100u);
}

TEST(RobotBound, TwoActivityAnalytic)
{
    // moves pinned at 1 s (100 J each); the spare time goes to the cheaper home
    const Robot r = RobotBuilder("r").stat("h", 1.0, 10.0, {{10.0}}).stat("a", 1.0, 10.0, {{30.0}}).link(0, 1, 1.0, 1.0).link(1, 0, 1.0, 1.0).build();
    const auto b = robot_lower_bound(r, 10.0);
    EXPECT_EQ(b.method, BoundMethod::exact_enumeration);
    EXPECT_NEAR(b.value, 10.0 * 7.0 + 30.0 * 1.0 + 200.0, 1e-9);
    ASSERT_TRUE(b.argmin.has_value());
    EXPECT_EQ(*b.argmin, two_step_plan());
    EXPECT_DOUBLE_EQ(b.combinations, 1.0);
}

TEST(RobotBound, ExactMatchesPlanByPlanLp)
{
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const Instance inst = generate_instance(preset_config("tiny", seed));
        for (std::size_t r = 0; r < inst.robots.size(); ++r) {
            const Instance solo = single_robot_instance(inst.robots[r], inst.cycle_time);
            const PwlTable pwl(solo, 10);
            bool exhausted = false;
            const auto circuits = all_circuits(solo.robots[0], 0, solo.cycle_time, &exhausted);
            ASSERT_TRUE(exhausted);
            double best = kInf, visited = 0.0;
            for_each_plan(solo.robots[0], circuits, [&](const RobotPlan& plan) {
                visited += 1.0;
                const auto ev = evaluate_tuple(solo, pwl, Tuple{{plan}});
                if (ev.status == EvaluationStatus::feasible) best = std::min(best, ev.solution->total_energy);
            });
            EXPECT_DOUBLE_EQ(visited, count_plans(solo.robots[0], circuits));
            const auto b = robot_lower_bound(solo.robots[0], solo.cycle_time);
            ASSERT_EQ(b.method, BoundMethod::exact_enumeration);
            EXPECT_NEAR(b.value, best, 1e-7 * best) << "seed " << seed << " robot " << r;
        }
    }
}

TEST(RobotBound, RelaxationsNeverExceedExact)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Instance inst = generate_instance(preset_config("small", seed));
        for (const auto& robot : inst.robots) {
            const auto exact = robot_lower_bound(robot, inst.cycle_time, BoundOptions{.budget = 1e9});
            ASSERT_EQ(exact.method, BoundMethod::exact_enumeration);
            const auto circuits = all_circuits(robot, 0, inst.cycle_time);
            Robot relaxed = robot;
            relaxed.modes = {PowerMode{"x", 0.0}};
            const double mode_budget = count_plans(relaxed, circuits);
            const auto by_mode = robot_lower_bound(robot, inst.cycle_time, BoundOptions{.budget = mode_budget});
            const auto by_location = robot_lower_bound(robot, inst.cycle_time, BoundOptions{.budget = 0.0});
            EXPECT_EQ(by_location.method, BoundMethod::location_relaxation);
            if (count_plans(robot, circuits) > mode_budget) {
                EXPECT_EQ(by_mode.method, BoundMethod::mode_relaxation);
            }
            EXPECT_LE(by_mode.value, exact.value + 1e-9 * exact.value);
            EXPECT_LE(by_location.value, by_mode.value + 1e-9 * by_mode.value);
            EXPECT_GT(by_location.value, 0.0);
        }
    }
}

TEST(InstanceBound, BelowOracleAndHeuristic)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Instance inst = generate_instance(preset_config("tiny", seed));
        const auto bound = instance_lower_bound(inst);
        double sum = 0.0;
        for (const auto& b : bound.robots) sum += b.value;
        EXPECT_DOUBLE_EQ(bound.total, sum);
        const auto oracle = exhaustive_oracle(inst);
        if (!oracle.feasible) continue;
        EXPECT_LE(bound.total, oracle.solution->total_energy * (1.0 + 1e-9)) << "seed " << seed;

        HeuristicConfig cfg;
        cfg.seed = seed;
        cfg.evaluation_budget = 500;
        const auto rep = optimize(inst, cfg);
        if (rep.best) {
            EXPECT_LE(oracle.solution->total_energy, rep.best->total_energy * (1.0 + 1e-9)) << "seed " << seed;
        }
    }
}

TEST(InstanceBound, ThreadsDoNotChangeResult)
{
    const Instance inst = load_fixture("medium.json");
    const auto a = instance_lower_bound(inst);
    const auto b = instance_lower_bound(inst, BoundOptions{.threads = 4});
    ASSERT_EQ(a.robots.size(), b.robots.size());
    for (std::size_t r = 0; r < a.robots.size(); ++r) {
        EXPECT_EQ(a.robots[r].value, b.robots[r].value);
        EXPECT_EQ(a.robots[r].method, b.robots[r].method);
    }
    EXPECT_EQ(a.total, b.total);
}

TEST(InstanceBound, InfeasibleRobotReported)
{
    const Instance inst = load_fixture("infeasible.json");
    const auto rep = instance_lower_bound(inst);
    bool any = false;
    for (const auto& b : rep.robots)
        if (b.method == BoundMethod::infeasible) {
            any = true;
            EXPECT_EQ(b.value, kInf);
            EXPECT_FALSE(b.note.empty());
        }
    EXPECT_TRUE(any);
}

TEST(Oracle, SolutionIsFeasibleAndLimitsEnforced)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Instance inst = generate_instance(preset_config("tiny", seed));
        const auto res = exhaustive_oracle(inst);
        if (!res.feasible) continue;
        EXPECT_TRUE(check_solution(inst, *res.solution).feasible());
        EXPECT_EQ(res.solution->metadata.solver, "exhaustive-oracle");
        EXPECT_GT(res.leaves, 0u);
    }
    EXPECT_THROW(exhaustive_oracle(load_fixture("medium.json"), OracleOptions{.max_product = 1.0}), OracleLimitError);
}
