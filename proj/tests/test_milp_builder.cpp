#include "support.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>

using namespace cellopt;
using namespace cellopt::test;

namespace {

// Minimal reader for the LP text subset we write; shares no code with the writer.
struct ParsedRow {
    std::string name;
    std::vector<std::pair<double, std::string>> terms;
    std::string rel;
    double rhs = 0.0;
};

struct ParsedLp {
    std::vector<std::pair<double, std::string>> objective;
    std::vector<ParsedRow> rows;
    std::set<std::string> binaries;
    std::map<std::string, std::pair<double, double>> bounds;
};

std::vector<std::pair<double, std::string>> parse_terms(std::istringstream& in, std::string* stop, double* rhs)
{
    std::vector<std::pair<double, std::string>> out;
    double sign = 1.0, coef = 1.0;
    std::string tok;
    while (in >> tok) {
        if (tok == "+") continue;
        if (tok == "-") {
            sign = -1.0;
            continue;
        }
        if (tok == "<=" || tok == ">=" || tok == "=") {
            if (stop) *stop = tok;
            in >> *rhs;
            break;
        }
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end && *end == '\0') {
            coef = v;
            continue;
        }
        out.push_back({sign * coef, tok});
        sign = coef = 1.0;
    }
    return out;
}

ParsedLp read_lp(const std::string& text)
{
    // join continuation lines first
    std::vector<std::string> lines;
    std::istringstream all(text);
    for (std::string line; std::getline(all, line);) {
        if (line.rfind("   ", 0) == 0 && !lines.empty())
            lines.back() += " " + line;
        else
            lines.push_back(line);
    }
    ParsedLp lp;
    std::string section;
    for (const auto& line : lines) {
        if (line.empty() || line[0] == '\\') continue;
        if (line[0] != ' ') {
            section = line;
            continue;
        }
        std::istringstream in(line);
        if (section == "Minimize" || section == "Subject To") {
            std::string name;
            in >> name;
            name.pop_back(); // ':'
            if (section == "Minimize") {
                lp.objective = parse_terms(in, nullptr, nullptr);
            } else {
                ParsedRow row;
                row.name = name;
                row.terms = parse_terms(in, &row.rel, &row.rhs);
                lp.rows.push_back(std::move(row));
            }
        } else if (section == "Binary") {
            for (std::string tok; in >> tok;) lp.binaries.insert(tok);
        } else if (section == "Bounds") {
            std::vector<std::string> tok;
            for (std::string t; in >> t;) tok.push_back(t);
            if (tok.size() == 5)
                lp.bounds[tok[2]] = {std::stod(tok[0]), std::stod(tok[4])};
            else if (tok.size() == 3)
                lp.bounds[tok[0]] = {std::stod(tok[2]), kInf};
        }
    }
    return lp;
}

Instance hand_instance()
{
    Robot r = RobotBuilder("r").stat("h", 1.0, 8.0).stat("a", 2.0, 8.0).link(0, 1, 1.0, 3.0).link(1, 0, 1.0, 3.0).build();
    return single_robot_instance(r, 10.0);
}

std::vector<double> assignment(const MilpModel& m, const Instance& inst, const Solution& sol) { return solution_to_assignment(inst, m, sol); }

Solution shift_robot(const Instance& inst, Solution sol, std::size_t r, double delta)
{
    (void)inst;
    for (auto& s : sol.robots[r].statics) s.start += delta;
    for (auto& mv : sol.robots[r].moves) mv.start += delta;
    return sol;
}

} // namespace

TEST(MilpBuild, HandCountOneRobot)
{
    const Instance inst = hand_instance();
    const MilpModel m = build_milp(inst, 10);
    // W, s, d for 2 statics and 2 moves; x, z per static; y per move
    EXPECT_EQ(m.variables.size(), 12u + 2u + 2u + 2u);
    EXPECT_EQ(m.binary_count(), 6u);
    const std::map<std::string, std::size_t> expect{{"eq2", 2},  {"eq3", 20}, {"eq4", 2},  {"eq5", 2},  {"eq6", 2},
                                                    {"eq7", 2},  {"eq8", 2},  {"eq9", 3},  {"eq10", 1}, {"eq11", 0},
                                                    {"eq12", 0}, {"eq13", 0}, {"eq14", 2}, {"eq15", 4}, {"eq16", 0},
                                                    {"eq17", 0}, {"eq18", 0}, {"eq19", 0}};
    std::size_t total = 0;
    for (const auto& [tag, n] : expect) {
        EXPECT_EQ(m.count(tag), n) << tag;
        total += n;
    }
    EXPECT_EQ(m.constraints.size(), total);
    EXPECT_EQ(m.objective.size(), 4u);
}

TEST(MilpBuild, ExampleCellTimeLags)
{
    const Instance inst = load_fixture("example_cell.json");
    const MilpModel m = build_milp(inst);
    std::vector<const MilpConstraint*> lags;
    for (const auto& c : m.constraints)
        if (c.tag == "eq16") lags.push_back(&c);
    ASSERT_EQ(lags.size(), 2u);
    ASSERT_EQ(inst.time_lags[0].height, 0);
    ASSERT_EQ(inst.time_lags[1].height, 1);
    EXPECT_DOUBLE_EQ(lags[0]->rhs, inst.time_lags[0].length);
    EXPECT_DOUBLE_EQ(lags[1]->rhs, inst.time_lags[1].length - inst.cycle_time);
    EXPECT_EQ(lags[0]->relation, Relation::greater_equal);
    // s_to - s_from
    const auto& lag0 = inst.time_lags[0];
    ASSERT_TRUE(lag0.from.kind == ActivityKind::dynamic_activity);
    EXPECT_EQ(lags[0]->terms[0].column, m.s_static[lag0.to.robot][lag0.to.index]);
    EXPECT_EQ(lags[0]->terms[1].column, m.s_move[lag0.from.robot][lag0.from.index]);
}

TEST(MilpBuild, CollisionVariablesAndTags)
{
    const Instance none = load_fixture("example_cell.json");
    const MilpModel a = build_milp(none);
    EXPECT_TRUE(a.c.empty());
    EXPECT_EQ(a.count("eq18") + a.count("eq19"), 0u);
    EXPECT_EQ(export_lp_file(a).find("c_o"), std::string::npos);

    for (const char* name : {"tiny.json", "small.json", "medium.json"}) {
        const Instance inst = load_fixture(name);
        const MilpModel m = build_milp(inst);
        const std::size_t per = 2 * inst.robots.size() + 1;
        std::size_t cvars = 0;
        for (const auto& v : m.variables) cvars += v.name.rfind("c_o", 0) == 0;
        EXPECT_EQ(cvars, inst.collisions.size() * per) << name;
        EXPECT_EQ(m.count("eq18"), inst.collisions.size() * per);
        EXPECT_EQ(m.count("eq19"), inst.collisions.size() * per);
        std::size_t optional = 0;
        for (const auto& r : inst.robots)
            for (const auto& e : r.moves) optional += e.optional;
        EXPECT_EQ(m.count("eq11"), optional);
        for (const auto& c : m.constraints) {
            ASSERT_EQ(c.tag.rfind("eq", 0), 0u);
            const int k = std::stoi(c.tag.substr(2));
            EXPECT_GE(k, 2);
            EXPECT_LE(k, 19);
        }
    }
}

TEST(MilpBound, SingleStaticActivity)
{
    Robot r = RobotBuilder("r").stat("h", 1.0, 10.0, {{100.0}}).build();
    const Instance inst = single_robot_instance(r, 10.0);
    EXPECT_GE(upper_bound_energy(inst), 1000.0);
}

TEST(MilpBound, ZeroPowerSingleTrajectory)
{
    Robot r = RobotBuilder("r").stat("h", 1.0, 10.0, {{0.0}}).build();
    r.moves.push_back({"e", 0, 0, false, {traj("t", 0, 0, 0.5, 2.0, {3.0, 1.0, 40.0, 2.0, 1.0})}});
    const Instance inst = single_robot_instance(r, 10.0);
    const auto& t = r.moves[0].trajectories[0];
    const auto p = pwl_approximate(t.energy, t.d_min, t.d_max, 10);
    EXPECT_NEAR(upper_bound_energy(inst, 10), p.max_value(), 1e-9 * p.max_value());
}

TEST(MilpBound, ExceedsOracleOptimum)
{
    const Instance inst = load_fixture("tiny.json");
    const auto oracle = exhaustive_oracle(inst);
    ASSERT_TRUE(oracle.feasible);
    EXPECT_GE(upper_bound_energy(inst), oracle.solution->total_energy);
}

TEST(MilpExport, DeterministicAndReadable)
{
    for (const char* name : {"example_cell.json", "tiny.json", "medium.json"}) {
        const Instance inst = load_fixture(name);
        const MilpModel m = build_milp(inst);
        const std::string text = export_lp_file(m);
        EXPECT_EQ(text, export_lp_file(build_milp(inst)));
        const ParsedLp lp = read_lp(text);
        EXPECT_EQ(lp.rows.size(), m.constraints.size()) << name;
        EXPECT_EQ(lp.binaries.size(), m.binary_count());
        EXPECT_EQ(lp.objective.size(), m.objective.size());
        std::istringstream lines(text);
        for (std::string line; std::getline(lines, line);) EXPECT_LE(line.size(), 256u);
        // rows read back reproduce the model rows exactly
        for (std::size_t i = 0; i < m.constraints.size() && i < lp.rows.size(); ++i) {
            const auto& c = m.constraints[i];
            const auto& p = lp.rows[i];
            EXPECT_EQ(p.name, c.name);
            ASSERT_EQ(p.terms.size(), c.terms.size()) << c.name;
            for (std::size_t k = 0; k < c.terms.size(); ++k) {
                EXPECT_EQ(p.terms[k].first, c.terms[k].coeff);
                EXPECT_EQ(p.terms[k].second, m.variables[c.terms[k].column].name);
            }
            EXPECT_EQ(p.rhs, c.rhs);
            EXPECT_EQ(p.rel, c.relation == Relation::less_equal ? "<=" : c.relation == Relation::greater_equal ? ">=" : "=");
        }
        for (const auto& v : m.variables)
            if (v.kind == VarKind::continuous && v.upper < kInf) {
                ASSERT_TRUE(lp.bounds.count(v.name)) << v.name;
                EXPECT_EQ(lp.bounds.at(v.name).second, v.upper);
            }
    }
}

TEST(MilpLift, OracleSolutionsRoundTrip)
{
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const Instance inst = generate_instance(preset_config("tiny", seed));
        const auto oracle = exhaustive_oracle(inst);
        if (!oracle.feasible) continue;
        const Solution& sol = *oracle.solution;
        const MilpModel m = build_milp(inst, sol.segments);
        const auto val = assignment(m, inst, sol);
        EXPECT_TRUE(m.evaluate(val).empty()) << "seed " << seed << ": " << m.evaluate(val).front();
        EXPECT_NEAR(m.objective_value(val), sol.total_energy, 1e-6 * sol.total_energy);
        const Solution back = lift_milp_solution(inst, m, val);
        EXPECT_TRUE(check_solution(inst, back).feasible());
        ASSERT_EQ(back.robots.size(), sol.robots.size());
        for (std::size_t r = 0; r < sol.robots.size(); ++r) {
            ASSERT_EQ(back.robots[r].statics.size(), sol.robots[r].statics.size());
            for (std::size_t i = 0; i < sol.robots[r].statics.size(); ++i) {
                EXPECT_EQ(back.robots[r].statics[i].activity, sol.robots[r].statics[i].activity);
                EXPECT_EQ(back.robots[r].statics[i].location, sol.robots[r].statics[i].location);
                EXPECT_EQ(back.robots[r].statics[i].mode, sol.robots[r].statics[i].mode);
                EXPECT_EQ(back.robots[r].moves[i].activity, sol.robots[r].moves[i].activity);
                EXPECT_EQ(back.robots[r].moves[i].trajectory, sol.robots[r].moves[i].trajectory);
            }
        }
        EXPECT_NEAR(back.total_energy, sol.total_energy, 1e-9 * sol.total_energy);
        // by name, as an external solver would report it
        std::map<std::string, double> named;
        for (std::size_t j = 0; j < m.variables.size(); ++j) named[m.variables[j].name] = val[j];
        EXPECT_NEAR(lift_milp_solution(inst, named, sol.segments).total_energy, sol.total_energy, 1e-9 * sol.total_energy);
    }
}

TEST(MilpLift, TwoLocationsIsInconsistent)
{
    const Instance inst = load_fixture("example_cell.json");
    const MilpModel m = build_milp(inst);
    const auto g = exhaustive_oracle(inst);
    ASSERT_TRUE(g.feasible);
    auto val = assignment(m, inst, *g.solution);
    // a static activity with two locations gets both
    std::size_t r = 0, v = 0;
    bool found = false;
    for (r = 0; r < inst.robots.size() && !found; ++r)
        for (v = 0; v < inst.robots[r].statics.size() && !found; ++v)
            found = inst.robots[r].statics[v].locations.size() > 1;
    ASSERT_TRUE(found);
    --r, --v;
    for (auto j : m.x[r][v]) val[j] = 1.0;
    const auto bad = m.evaluate(val);
    EXPECT_TRUE(std::any_of(bad.begin(), bad.end(), [](const std::string& s) { return s.rfind("eq4_", 0) == 0; }));
    EXPECT_THROW(lift_milp_solution(inst, m, val), InputError);
    std::map<std::string, double> named{{"no_such_var", 1.0}};
    EXPECT_THROW(assignment_from_names(m, named), InputError);
}

TEST(MilpAgreement, CheckerAndModelAgreeOnShiftedSchedules)
{
    CounterRng rng(17);
    int feasible = 0, infeasible = 0;
    std::vector<Instance> instances;
    std::vector<Solution> solutions;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const auto g = generated("tiny", seed);
        instances.push_back(g.instance);
        solutions.push_back(g.witness);
    }
    {
        const Instance ex = load_fixture("example_cell.json");
        instances.push_back(ex);
        solutions.push_back(*exhaustive_oracle(ex).solution);
    }
    for (std::size_t k = 0; k < instances.size(); ++k) {
        const Instance& inst = instances[k];
        const MilpModel m = build_milp(inst, solutions[k].segments);
        for (int trial = 0; trial < 40; ++trial) {
            Solution sol = solutions[k];
            const std::size_t r = rng.index(inst.robots.size());
            sol = shift_robot(inst, sol, r, rng.uniform(0.0, inst.cycle_time));
            const bool checker = check_solution(inst, sol).feasible();
            const auto val = assignment(m, inst, sol);
            const auto bad = m.evaluate(val);
            EXPECT_EQ(checker, bad.empty()) << "instance " << k << " trial " << trial << (bad.empty() ? "" : ": " + bad.front());
            (checker ? feasible : infeasible)++;
            if (!checker) continue;
            // deactivated energy rows hold even with W = 0
            for (const auto& c : m.constraints) {
                if (c.tag != "eq2" && c.tag != "eq3") continue;
                double lhs = 0.0, binaries = 0.0;
                for (const auto& t : c.terms) {
                    if (m.variables[t.column].name.rfind("W_", 0) == 0) continue;
                    lhs += t.coeff * val[t.column];
                    if (m.variables[t.column].kind == VarKind::binary) binaries += val[t.column];
                }
                const bool active = c.tag == "eq2" ? binaries > 1.5 : binaries > 0.5;
                if (!active) {
                    EXPECT_LE(lhs, c.rhs + 1e-9) << c.name;
                }
            }
        }
    }
    EXPECT_GT(feasible, 20);
    EXPECT_GT(infeasible, 20);
}
