#include "support.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

using namespace cellopt;
using namespace cellopt::test;

namespace {

using Big = boost::multiprecision::cpp_bin_float_50;

double big_energy(const EnergyFunction& f, double d)
{
    Big x(d), sum(0);
    for (int i = 0; i < 5; ++i) sum += Big(f.coeffs[i]) * boost::multiprecision::pow(x, 1 - i);
    return static_cast<double>(sum);
}

Robot two_activity_robot(const std::string& id)
{
    return RobotBuilder(id).stat(id + "_home", 1.0, 20.0, {{50.0}}).stat(id + "_work", 1.0, 20.0, {{200.0}}).link(0, 1, 1.0, 4.0).link(1, 0, 1.0, 4.0).build();
}

// moves[i] enters statics[i]; home last.
RobotSchedule cycle_schedule(const Instance& inst, std::size_t r, double offset, std::size_t segments)
{
    const Robot& robot = inst.robots[r];
    auto move = [&](std::size_t e, double s, double d) {
        const auto& t = robot.moves[e].trajectories[0];
        return MoveSelection{e, 0, s, d, pwl_approximate(t.energy, t.d_min, t.d_max, segments)(d), energy_eval(t.energy, d)};
    };
    auto stat = [&](std::size_t v, double s, double d) {
        return StaticSelection{v, 0, 0, s, d, robot.statics[v].locations[0].power[0] * d};
    };
    RobotSchedule sch;
    sch.moves = {move(0, offset, 2.0), move(1, offset + 5.0, 2.0)};
    sch.statics = {stat(1, offset + 2.0, 3.0), stat(0, offset + 7.0, 3.0)};
    return sch;
}

Solution make_solution(const Instance& inst, std::vector<double> offsets)
{
    Solution sol;
    sol.status = SolutionStatus::feasible;
    for (std::size_t r = 0; r < inst.robots.size(); ++r) sol.robots.push_back(cycle_schedule(inst, r, offsets[r], sol.segments));
    sol.recompute_totals();
    return sol;
}

bool has_rule(const std::vector<Violation>& v, const std::string& rule)
{
    return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.rule == rule; });
}

} // namespace

TEST(EnergyEval, LinearCase) { EXPECT_DOUBLE_EQ(energy_eval(EnergyFunction{{1, 2, 0, 0, 0}}, 3.0), 5.0); }

TEST(EnergyEval, InverseTerm) { EXPECT_DOUBLE_EQ(energy_eval(EnergyFunction{{0, 0, 1, 0, 0}}, 2.0), 0.5); }

TEST(EnergyEval, MatchesHighPrecisionOracle)
{
    const EnergyFunction f{{0.5, 1, 4, 2, 1}};
    EXPECT_NEAR(energy_eval(f, 1.5), big_energy(f, 1.5), 1e-14 * big_energy(f, 1.5));
    CounterRng rng(7);
    for (int i = 0; i < 500; ++i) {
        EnergyFunction g{{rng.uniform(0, 20), rng.uniform(0, 50), rng.uniform(0, 400), rng.uniform(0, 100), rng.uniform(0, 20)}};
        const double d = rng.uniform(0.05, 10.0);
        const double ref = big_energy(g, d);
        EXPECT_NEAR(energy_eval(g, d), ref, 1e-13 * std::abs(ref)) << "draw " << i;
    }
}

TEST(EnergyEval, RejectsNonPositiveDuration)
{
    EXPECT_THROW(energy_eval(EnergyFunction{{1, 0, 0, 0, 0}}, 0.0), std::domain_error);
    EXPECT_THROW(energy_eval(EnergyFunction{{1, 0, 0, 0, 0}}, -1.0), std::domain_error);
}

TEST(Pwl, SingleChordOfInverse)
{
    const auto p = pwl_approximate(EnergyFunction{{0, 0, 1, 0, 0}}, 1.0, 2.0, 1);
    ASSERT_EQ(p.segments.size(), 1u);
    EXPECT_NEAR(p.segments[0].slope, -0.5, 1e-15);
    EXPECT_NEAR(p.segments[0].intercept, 1.5, 1e-15);
}

TEST(Pwl, ConstantFunctionIsFlat)
{
    const auto p = pwl_approximate(EnergyFunction{{0, 7.25, 0, 0, 0}}, 0.5, 3.0, 10);
    ASSERT_EQ(p.segments.size(), 10u);
    for (const auto& s : p.segments) {
        EXPECT_DOUBLE_EQ(s.slope, 0.0);
        EXPECT_DOUBLE_EQ(s.intercept, 7.25);
    }
}

TEST(Pwl, DegenerateDomainGivesOneConstantSegment)
{
    const EnergyFunction f{{1, 2, 3, 0, 0}};
    const auto p = pwl_approximate(f, 2.0, 2.0, 10);
    ASSERT_EQ(p.segments.size(), 1u);
    EXPECT_DOUBLE_EQ(p.segments[0].slope, 0.0);
    EXPECT_DOUBLE_EQ(p.segments[0](2.0), f(2.0));
}

TEST(Pwl, DominatesAndTouchesAtBreakpoints)
{
    CounterRng rng(11);
    for (int i = 0; i < 200; ++i) {
        EnergyFunction f{{rng.uniform(0, 20), rng.uniform(0, 50), rng.uniform(0, 400), rng.uniform(0, 100), rng.uniform(0, 20)}};
        const double lo = rng.uniform(0.3, 2.0), hi = lo * rng.uniform(1.5, 3.0);
        const auto p10 = pwl_approximate(f, lo, hi, 10);
        const auto p20 = pwl_approximate(f, lo, hi, 20);
        double gap10 = 0, gap20 = 0;
        for (int k = 0; k <= 1000; ++k) {
            const double d = lo + (hi - lo) * k / 1000.0;
            ASSERT_GE(p10(d), f(d) - 1e-9);
            gap10 = std::max(gap10, p10(d) - f(d));
            gap20 = std::max(gap20, p20(d) - f(d));
        }
        for (double b : p10.breakpoints()) EXPECT_NEAR(p10(b), f(b), 1e-9 * std::max(1.0, f(b)));
        EXPECT_LE(gap20, gap10 + 1e-12);
    }
}

TEST(Validate, WellFormedTwoRobotInstance)
{
    Instance inst;
    inst.cycle_time = 10.0;
    inst.robots = {two_activity_robot("a"), two_activity_robot("b")};
    EXPECT_TRUE(validate_instance(inst).empty());
}

TEST(Validate, TrajectoryWindowReversed)
{
    Instance inst = single_robot_instance(two_activity_robot("a"), 10.0);
    auto& t = inst.robots[0].moves[1].trajectories[0];
    t.d_min = 5.0;
    t.d_max = 3.0;
    const auto v = validate_instance(inst);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_NE(v[0].entity.find(t.id), std::string::npos);
    EXPECT_EQ(v[0].rule, "trajectory_duration_window");
}

TEST(Validate, ConcaveEnergyRejected)
{
    Instance inst = single_robot_instance(two_activity_robot("a"), 10.0);
    inst.robots[0].moves[0].trajectories[0].energy = EnergyFunction{{0, 0, -1, 0, 0}};
    EXPECT_TRUE(has_rule(validate_instance(inst), "energy_convex"));
}

TEST(Validate, FixturesAreClean)
{
    for (const char* name : {"example_cell.json", "tiny.json", "small.json", "medium.json", "infeasible.json"})
        EXPECT_TRUE(validate_instance(load_fixture(name)).empty()) << name;
}

TEST(CheckSolution, HandBuiltScheduleIsFeasible)
{
    const Instance inst = single_robot_instance(two_activity_robot("a"), 10.0);
    const auto rep = check_solution(inst, make_solution(inst, {0.0}));
    EXPECT_TRUE(rep.feasible()) << (rep.violations.empty() ? "" : rep.violations[0].detail);
}

TEST(CheckSolution, ShiftedStartBreaksTiming)
{
    const Instance inst = single_robot_instance(two_activity_robot("a"), 10.0);
    auto sol = make_solution(inst, {0.0});
    sol.robots[0].statics[0].start += 5.0;
    const auto rep = check_solution(inst, sol);
    ASSERT_FALSE(rep.feasible());
    EXPECT_EQ(rep.violations[0].constraint, "timing");
}

TEST(CheckSolution, ShiftedRobotCollides)
{
    Instance inst;
    inst.cycle_time = 10.0;
    inst.robots = {two_activity_robot("a"), two_activity_robot("b")};
    inst.time_lags.push_back({static_ref(0, 1), static_ref(1, 1), 3.0, 0});
    inst.collisions.push_back({static_ref(0, 1), 0, static_ref(1, 1), 0});
    ASSERT_TRUE(validate_instance(inst).empty());

    const auto ok = make_solution(inst, {0.0, 3.0});
    EXPECT_TRUE(check_solution(inst, ok).feasible());

    // whole robot shifted by CT/2: internally consistent, overlaps the other robot
    const auto bad = make_solution(inst, {0.0, 8.0});
    const auto rep = check_solution(inst, bad);
    ASSERT_FALSE(rep.feasible());
    for (const auto& v : rep.violations) EXPECT_TRUE(v.constraint == "collision" || v.constraint == "time_lag") << v.constraint;

    const auto late = make_solution(inst, {0.0, 2.5});
    const auto lag = check_solution(inst, late);
    ASSERT_FALSE(lag.feasible());
    EXPECT_EQ(lag.violations[0].constraint, "time_lag");
    EXPECT_NEAR(lag.violations[0].amount, 0.5, 1e-12);
}

TEST(CheckSolution, ReportsWrongEnergy)
{
    const Instance inst = single_robot_instance(two_activity_robot("a"), 10.0);
    auto sol = make_solution(inst, {0.0});
    sol.robots[0].moves[0].exact_energy += 1.0;
    const auto rep = check_solution(inst, sol);
    ASSERT_EQ(rep.violations.size(), 2u); // the move and the exact total
    for (const auto& v : rep.violations) EXPECT_EQ(v.constraint, "energy");
}

TEST(CheckSolution, IsPure)
{
    Instance inst;
    inst.cycle_time = 10.0;
    inst.robots = {two_activity_robot("a"), two_activity_robot("b")};
    inst.collisions.push_back({static_ref(0, 1), 0, static_ref(1, 1), 0});
    const auto sol = make_solution(inst, {0.0, 1.0});
    const auto a = check_solution(inst, sol), b = check_solution(inst, sol);
    ASSERT_EQ(a.violations.size(), b.violations.size());
    EXPECT_FALSE(a.feasible());
    for (std::size_t i = 0; i < a.violations.size(); ++i) {
        EXPECT_EQ(a.violations[i].constraint, b.violations[i].constraint);
        EXPECT_EQ(a.violations[i].detail, b.violations[i].detail);
        EXPECT_EQ(a.violations[i].amount, b.violations[i].amount);
    }
}

TEST(CheckSolution, GeneratorWitnessesAreFeasible)
{
    for (const char* preset : {"tiny", "small", "s5", "m8"})
        for (std::uint64_t seed = 0; seed < 25; ++seed) {
            const auto g = generated(preset, seed);
            const auto rep = check_solution(g.instance, g.witness);
            EXPECT_TRUE(rep.feasible()) << preset << " seed " << seed << ": " << (rep.violations.empty() ? "" : rep.violations[0].detail);
        }
}
