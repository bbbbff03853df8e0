#include "support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <sys/wait.h>

using namespace cellopt;
using namespace cellopt::test;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run invoke(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

// Runs the built executable; returns its exit status.
int spawn(const std::string& args, const std::string& out_file)
{
    const std::string cmd = std::string(CELLOPT_CLI_PATH) + " " + args + " > " + out_file + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> lines(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

} // namespace

TEST(Cli, GenerateValidateRoundTrip)
{
    TempDir dir;
    const auto inst = dir.file("i.json"), wit = dir.file("w.json");
    auto g = invoke({"generate", "--preset", "small", "--seed", "3", "-o", inst, "--witness", wit});
    ASSERT_EQ(g.code, exit_ok) << g.err;
    EXPECT_EQ(read_text(inst), serialize_instance(generate_instance(preset_config("small", 3))));
    EXPECT_EQ(invoke({"validate", inst}).code, exit_ok);
    const auto c = invoke({"check", inst, wit});
    EXPECT_EQ(c.code, exit_ok) << c.out;
    EXPECT_NE(c.out.find("feasible"), std::string::npos);

    const auto to_stdout = invoke({"generate", "--preset", "tiny", "--seed", "1"});
    ASSERT_EQ(to_stdout.code, exit_ok);
    EXPECT_EQ(to_stdout.out, serialize_instance(generate_instance(preset_config("tiny", 1))));
}

TEST(Cli, GenerateFromConfigFile)
{
    const auto r = invoke({"generate", "--config", data_path("generator_config.json")});
    ASSERT_EQ(r.code, exit_ok) << r.err;
    const auto cfg = parse_generator_config(read_text(data_path("generator_config.json")));
    EXPECT_EQ(r.out, serialize_instance(generate_instance(cfg)));
}

TEST(Cli, InputErrorsExitOne)
{
    TempDir dir;
    write_text(dir.file("bad.json"), "{\n  \"format\": \"cellopt/1\",\n  \"cycle_time\": ,\n}");
    auto r = invoke({"validate", dir.file("bad.json")});
    EXPECT_EQ(r.code, exit_input_error);
    EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
    EXPECT_EQ(invoke({"validate", dir.file("missing.json")}).code, exit_input_error);
    EXPECT_EQ(invoke({"generate", "--preset", "huge"}).code, exit_input_error);
    EXPECT_EQ(invoke({"generate"}).code, exit_input_error);
    EXPECT_EQ(invoke({"frobnicate"}).code, exit_input_error);
    EXPECT_EQ(invoke({}).code, exit_input_error);
    EXPECT_EQ(invoke({"optimize", data_path("tiny.json"), "--time-limit", "0"}).code, exit_input_error);
    EXPECT_EQ(invoke({"optimize", data_path("tiny.json"), "--threads", "0"}).code, exit_input_error);
    EXPECT_EQ(invoke({"export", data_path("tiny.json"), "--segments", "0"}).code, exit_input_error);
    EXPECT_EQ(invoke({"--help"}).code, exit_ok);
}

TEST(Cli, InvalidThreadEnvironment)
{
    ::setenv("CELLOPT_THREADS", "many", 1);
    const auto r = invoke({"optimize", data_path("tiny.json"), "--time-limit", "0.2"});
    ::unsetenv("CELLOPT_THREADS");
    EXPECT_EQ(r.code, exit_input_error);
    EXPECT_NE(r.err.find("CELLOPT_THREADS"), std::string::npos) << r.err;

    ::setenv("CELLOPT_THREADS", "2", 1);
    const auto ok = invoke({"optimize", data_path("tiny.json"), "--time-limit", "0.2"});
    ::unsetenv("CELLOPT_THREADS");
    EXPECT_EQ(ok.code, exit_ok) << ok.err;
}

TEST(Cli, OptimizeWritesSolutionReportAndProgress)
{
    TempDir dir;
    const auto sol = dir.file("s.json"), prog = dir.file("p.csv");
    const auto r = invoke({"optimize", data_path("small.json"), "--deterministic", "--evaluation-budget", "500", "-o", sol, "--progress", prog});
    ASSERT_EQ(r.code, exit_ok) << r.err;
    const Instance inst = load_fixture("small.json");
    const Solution s = parse_solution(inst, read_text(sol));
    EXPECT_TRUE(check_solution(inst, s).feasible());

    const auto report = nlohmann::json::parse(read_text(sol + ".report.json"));
    EXPECT_EQ(report["status"], "feasible");
    EXPECT_FALSE(report.contains("wall_time"));
    EXPECT_EQ(report["total_energy"].get<double>(), s.total_energy);

    const auto rows = lines(read_text(prog));
    ASSERT_GE(rows.size(), 2u);
    EXPECT_EQ(rows[0], "step,energy_J,worker_id");
    double last = kInf;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto c1 = rows[i].find(','), c2 = rows[i].rfind(',');
        const double e = std::stod(rows[i].substr(c1 + 1, c2 - c1 - 1));
        EXPECT_LT(e, last);
        last = e;
    }
    EXPECT_EQ(last, s.total_energy);
}

TEST(Cli, DeterministicRunsAreByteIdentical)
{
    TempDir dir;
    for (const char* seed : {"0", "5"}) {
        const auto a = invoke({"optimize", data_path("small.json"), "--deterministic", "--evaluation-budget", "400", "--seed", seed});
        const auto b = invoke({"optimize", data_path("small.json"), "--deterministic", "--evaluation-budget", "400", "--seed", seed});
        ASSERT_EQ(a.code, exit_ok);
        EXPECT_EQ(a.out, b.out);
        EXPECT_EQ(a.err, b.err);
    }
}

TEST(Cli, InfeasibleInstanceExitsThree)
{
    const auto r = invoke({"optimize", data_path("infeasible.json"), "--deterministic"});
    EXPECT_EQ(r.code, exit_infeasible);
    EXPECT_NE(r.err.find("infeasible"), std::string::npos) << r.err;
    EXPECT_EQ(invoke({"bound", data_path("infeasible.json")}).code, exit_infeasible);
}

TEST(Cli, CheckReportsViolations)
{
    TempDir dir;
    const auto g = generated("tiny", 2);
    write_text(dir.file("i.json"), serialize_instance(g.instance));
    Solution bad = g.witness;
    bad.robots[0].statics[0].start += 0.5;
    write_text(dir.file("s.json"), serialize_solution(g.instance, bad));
    const auto r = invoke({"check", dir.file("i.json"), dir.file("s.json")});
    EXPECT_EQ(r.code, exit_no_solution);
    EXPECT_NE(r.out.find("violation"), std::string::npos);
    EXPECT_NE(r.out.find("timing"), std::string::npos) << r.out;
}

TEST(Cli, ExportAndBound)
{
    TempDir dir;
    const auto lp = dir.file("m.lp");
    const auto e = invoke({"export", data_path("example_cell.json"), "-o", lp});
    ASSERT_EQ(e.code, exit_ok) << e.err;
    EXPECT_EQ(read_text(lp), export_lp_file(build_milp(load_fixture("example_cell.json"), 10)));
    EXPECT_NE(e.out.find("binary"), std::string::npos);

    const auto b = invoke({"bound", data_path("small.json")});
    ASSERT_EQ(b.code, exit_ok);
    const auto want = instance_lower_bound(load_fixture("small.json"));
    EXPECT_NE(b.out.find("lower bound: " + cli::num(want.total)), std::string::npos) << b.out;
}

TEST(Cli, BenchOverThreeInstances)
{
    TempDir dir;
    for (int s = 0; s < 3; ++s) write_text(dir.file("t" + std::to_string(s) + ".json"), serialize_instance(generate_instance(preset_config("tiny", s))));
    const auto csv = dir.file("bench.csv");
    const auto r = invoke({"bench", (dir.path() / "t*.json").string(), "--runs", "2", "--deterministic", "--evaluation-budget", "300", "-o", csv});
    ASSERT_EQ(r.code, exit_ok) << r.err;
    const auto rows = lines(read_text(csv));
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0], kBenchHeader);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].rfind("t" + std::to_string(i - 1) + ",2,", 0), 0u) << rows[i];
        EXPECT_EQ(rows[i].back(), ','); // no wall time in deterministic mode
    }
}

TEST(Cli, ExecutableBehavesLikeLibrary)
{
    TempDir dir;
    EXPECT_EQ(spawn("validate " + data_path("tiny.json"), dir.file("v.txt")), exit_ok);
    EXPECT_EQ(spawn("optimize " + data_path("infeasible.json") + " --deterministic", dir.file("o.txt")), exit_infeasible);
    EXPECT_EQ(spawn("validate " + dir.file("nothing.json"), dir.file("n.txt")), exit_input_error);
    ASSERT_EQ(spawn("optimize " + data_path("tiny.json") + " --deterministic --evaluation-budget 300 --seed 2", dir.file("a.json")), exit_ok);
    const auto lib = invoke({"optimize", data_path("tiny.json"), "--deterministic", "--evaluation-budget", "300", "--seed", "2"});
    EXPECT_EQ(read_text(dir.file("a.json")), lib.out);
}
