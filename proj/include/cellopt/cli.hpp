#pragma once

// Command-line front end: generate, validate, optimize, export, bound,
// check, bench. run_cli() is the whole program; tools/cellopt.cpp only
// forwards argv.
//
// Exit codes: 0 ok, 1 input error, 2 no solution / violations, 3 proven
// infeasible.

#include "cellopt/bounds.hpp"
#include "cellopt/heuristic_engine.hpp"
#include "cellopt/instance_io.hpp"
#include "cellopt/milp_builder.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fnmatch.h>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace cellopt {

enum ExitCode : int { exit_ok = 0, exit_input_error = 1, exit_no_solution = 2, exit_infeasible = 3 };

/// One line of the bench CSV.
struct BenchRow {
    std::string instance;
    std::size_t runs = 0;
    std::optional<double> best, avg, worst;
    double lower_bound = kInf;
    std::optional<double> gap_percent;
    std::size_t feasible_runs = 0;
    std::optional<double> wall_time;
};

inline constexpr const char* kBenchHeader = "instance,runs,best,avg,worst,lower_bound,gap_percent,feasible_runs,wall_time_s";

namespace cli {

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << text;
    if (!out) throw InputError("write failed: " + path);
}

inline Instance load_instance(const std::string& path)
{
    try {
        return parse_instance(read_file(path));
    } catch (const ParseError& e) {
        throw InputError(path + ": " + e.what());
    }
}

inline std::string num(double v, const char* fmt = "%.6f")
{
    if (!std::isfinite(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

/// --threads, else CELLOPT_THREADS, else the hardware.
inline std::size_t resolve_threads(std::optional<std::size_t> flag)
{
    if (flag) {
        if (*flag == 0) throw InputError("--threads must be positive");
        return *flag;
    }
    if (const char* env = std::getenv("CELLOPT_THREADS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v <= 0) throw InputError(std::string("CELLOPT_THREADS must be a positive integer, got \"") + env + "\"");
        return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Paths with '*', '?' or '[' are matched against their directory.
inline std::vector<std::string> expand_globs(const std::vector<std::string>& patterns)
{
    namespace fs = std::filesystem;
    std::vector<std::string> out;
    for (const auto& p : patterns) {
        if (p.find_first_of("*?[") == std::string::npos) {
            out.push_back(p);
            continue;
        }
        const fs::path pat(p);
        const fs::path dir = pat.has_parent_path() ? pat.parent_path() : fs::path(".");
        std::vector<std::string> hits;
        std::error_code ec;
        for (const auto& entry : fs::directory_iterator(dir, ec)) {
            if (!entry.is_regular_file()) continue;
            if (fnmatch(pat.filename().c_str(), entry.path().filename().c_str(), 0) == 0)
                hits.push_back(pat.has_parent_path() ? (dir / entry.path().filename()).string() : entry.path().filename().string());
        }
        if (hits.empty()) throw InputError("no file matches " + p);
        std::sort(hits.begin(), hits.end());
        out.insert(out.end(), hits.begin(), hits.end());
    }
    return out;
}

inline std::string summary(const Instance& inst)
{
    std::size_t statics = 0, moves = 0, optional = 0;
    for (const auto& r : inst.robots) {
        statics += r.statics.size();
        moves += r.moves.size();
        for (const auto& e : r.moves) optional += e.optional;
    }
    return std::to_string(inst.robots.size()) + " robots, " + std::to_string(statics + moves) + " activities (" + std::to_string(statics) +
           " static, " + std::to_string(moves) + " dynamic, " + std::to_string(optional) + " optional), " +
           std::to_string(inst.time_lags.size()) + " time lags, " + std::to_string(inst.collisions.size()) + " collisions, CT = " +
           detail::fmt_num(inst.cycle_time) + " s";
}

/// RunReport as JSON; timing fields are left out of deterministic runs.
inline std::string serialize_report(const Instance& inst, const RunReport& rep, bool deterministic)
{
    using detail::ojson;
    ojson j;
    j["status"] = rep.best ? "feasible" : rep.infeasibility_proof ? "infeasible" : "no-solution";
    j["message"] = rep.message;
    j["infeasibility_proof"] = rep.infeasibility_proof;
    if (rep.best) {
        j["total_energy"] = rep.best->total_energy;
        j["total_exact_energy"] = rep.best->total_exact_energy;
    }
    j["lp_evaluations"] = rep.lp_evaluations;
    j["worker_evaluations"] = rep.worker_evaluations;
    j["tuples_processed"] = rep.tuples_processed;
    j["feasible_evaluations"] = rep.feasible_evaluations;
    ojson robots = ojson::array();
    for (std::size_t r = 0; r < inst.robots.size(); ++r) {
        ojson o;
        o["robot"] = inst.robots[r].id;
        if (r < rep.alternatives_per_robot.size()) o["alternatives"] = rep.alternatives_per_robot[r];
        if (r < rep.enumeration_exhausted.size()) o["enumeration_exhausted"] = static_cast<bool>(rep.enumeration_exhausted[r]);
        robots.push_back(o);
    }
    j["robots"] = robots;
    if (!deterministic) {
        j["wall_time"] = rep.wall_time;
        j["lp_evaluations_per_second"] = rep.lp_evaluations_per_second;
        ojson prog = ojson::array();
        for (const auto& p : rep.progress) prog.push_back(ojson::array({p.time, p.energy, p.worker}));
        j["progress"] = prog;
    } else {
        ojson prog = ojson::array();
        for (const auto& p : rep.progress) prog.push_back(p.energy);
        j["progress_energy"] = prog;
    }
    return detail::to_text(j);
}

inline std::string bench_csv_line(const BenchRow& r)
{
    auto opt = [](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
    std::string name = r.instance;
    if (name.find_first_of(",\"\n") != std::string::npos) {
        std::string q = "\"";
        for (char ch : name) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        name = q + "\"";
    }
    return name + "," + std::to_string(r.runs) + "," + opt(r.best) + "," + opt(r.avg) + "," + opt(r.worst) + "," +
           (std::isfinite(r.lower_bound) ? num(r.lower_bound) : std::string()) + "," + (r.gap_percent ? num(*r.gap_percent, "%.4f") : std::string()) +
           "," + std::to_string(r.feasible_runs) + "," + (r.wall_time ? num(*r.wall_time, "%.3f") : std::string());
}

struct OptimizeArgs {
    double time_limit = 10.0;
    std::optional<std::size_t> threads;
    std::size_t phi_max = 0;
    std::size_t segments = 10;
    std::uint64_t seed = 0;
    bool deterministic = false;
    std::optional<std::uint64_t> evaluation_budget;
};

inline constexpr std::uint64_t kDefaultDeterministicBudget = 50000;

inline HeuristicConfig heuristic_config(const OptimizeArgs& a, std::ostream& err)
{
    HeuristicConfig cfg;
    cfg.time_limit = a.time_limit;
    cfg.phi_max = a.phi_max;
    cfg.segments = a.segments;
    cfg.seed = a.seed;
    cfg.workers = resolve_threads(a.threads);
    if (a.deterministic) {
        if (cfg.workers > 1 && a.threads) err << "note: --deterministic runs a single worker\n";
        cfg.workers = 1;
        cfg.evaluation_budget = a.evaluation_budget.value_or(kDefaultDeterministicBudget);
    } else if (a.evaluation_budget) {
        cfg.evaluation_budget = a.evaluation_budget;
    }
    if (!(cfg.time_limit > 0.0)) throw InputError("--time-limit must be positive");
    if (cfg.segments < 1) throw InputError("--segments must be at least 1");
    return cfg;
}

inline void add_optimize_options(CLI::App* cmd, OptimizeArgs& a)
{
    cmd->add_option("--time-limit", a.time_limit, "Wall-clock limit in seconds")->capture_default_str();
    cmd->add_option("--threads", a.threads, "Worker threads (fallback: CELLOPT_THREADS, then all cores)");
    cmd->add_option("--phi-max", a.phi_max, "Sub-heuristic iterations without improvement per tuple (0: 100/600/1000 by robot count)")
        ->capture_default_str();
    cmd->add_option("--segments", a.segments, "Linear pieces per energy function")->capture_default_str();
    cmd->add_option("--seed", a.seed, "Random seed")->capture_default_str();
    cmd->add_flag("--deterministic", a.deterministic, "Single worker stopped by an LP-evaluation budget instead of the clock");
    cmd->add_option("--evaluation-budget", a.evaluation_budget, "LP evaluations before stopping (default 50000 with --deterministic)");
}

//----------------------------------------------------------------------------//
// Commands
//----------------------------------------------------------------------------//

struct GenerateArgs {
    std::string preset;
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> robots;
    std::string out;
    std::string witness;
};

inline int cmd_generate(const GenerateArgs& a, std::ostream& out, std::ostream& err)
{
    if (a.preset.empty() == a.config.empty()) throw InputError("generate: give exactly one of --preset or --config");
    GeneratorConfig cfg;
    if (!a.preset.empty()) {
        cfg = preset_config(a.preset, a.seed.value_or(0));
    } else {
        try {
            cfg = parse_generator_config(read_file(a.config));
        } catch (const ParseError& e) {
            throw InputError(a.config + ": " + e.what());
        }
        if (a.seed) cfg.seed = *a.seed;
    }
    if (a.robots) cfg.robot_count = *a.robots;
    if (auto problems = generator_config_problems(cfg); !problems.empty()) throw InputError("generate: " + problems.front());
    const GeneratedInstance g = generate_instance_with_witness(cfg);
    const std::string text = serialize_instance(g.instance);
    if (a.out.empty()) {
        out << text;
        err << "generated " << summary(g.instance) << "\n";
    } else {
        write_file(a.out, text);
        out << "generated " << a.out << ": " << summary(g.instance) << "\n";
    }
    if (!a.witness.empty()) write_file(a.witness, serialize_solution(g.instance, g.witness));
    return exit_ok;
}

inline int cmd_validate(const std::string& path, std::ostream& out)
{
    const Instance inst = load_instance(path);
    out << "valid: " << summary(inst) << "\n";
    return exit_ok;
}

struct OptimizeFiles {
    std::string instance;
    std::string out;
    std::string progress;
    std::string report;
};

inline int cmd_optimize(const OptimizeFiles& f, const OptimizeArgs& a, std::ostream& out, std::ostream& err)
{
    const Instance inst = load_instance(f.instance);
    HeuristicConfig cfg = heuristic_config(a, err);

    std::ofstream progress;
    std::mutex progress_mutex;
    std::atomic<std::uint64_t> steps{0};
    if (!f.progress.empty()) {
        progress.open(f.progress, std::ios::binary);
        if (!progress) throw InputError("cannot write " + f.progress);
        // the clock is not reproducible; deterministic runs log the step count
        progress << (a.deterministic ? "step,energy_J,worker_id\n" : "time_s,energy_J,worker_id\n");
        progress.flush();
        if (a.deterministic) cfg.on_step = [&](std::size_t, SubHeuristic, const char*) { ++steps; };
        cfg.progress = [&](double t, double e, std::size_t w) {
            std::lock_guard lock(progress_mutex);
            progress << (a.deterministic ? std::to_string(steps.load()) : num(t)) << "," << detail::format_double(e) << "," << w << "\n";
            progress.flush();
        };
    }

    const RunReport rep = optimize(inst, cfg);

    const std::string report_path = !f.report.empty() ? f.report : f.out.empty() ? std::string() : f.out + ".report.json";
    if (!report_path.empty()) write_file(report_path, serialize_report(inst, rep, a.deterministic));

    if (!rep.best) {
        err << (rep.infeasibility_proof ? "infeasible: " : "no solution: ") << rep.message << "\n";
        if (rep.infeasibility_proof)
            for (std::size_t r = 0; r < inst.robots.size(); ++r)
                if (r < rep.enumeration_exhausted.size() && rep.enumeration_exhausted[r] && rep.alternatives_per_robot[r] == 0)
                    err << "  " << inst.robots[r].id << ": circuit enumeration exhausted, no circuit fits CT = " << detail::fmt_num(inst.cycle_time)
                        << " s\n";
        return rep.infeasibility_proof ? exit_infeasible : exit_no_solution;
    }
    const std::string text = serialize_solution(inst, *rep.best);
    std::ostream& info = f.out.empty() ? err : out;
    if (f.out.empty())
        out << text;
    else
        write_file(f.out, text);
    info << "feasible: " << num(rep.best->total_energy) << " J (exact " << num(rep.best->total_exact_energy) << " J), " << rep.lp_evaluations
         << " LP evaluations";
    if (!a.deterministic) info << " in " << num(rep.wall_time, "%.2f") << " s";
    info << "\n";
    return exit_ok;
}

inline int cmd_export(const std::string& instance, const std::string& out_path, std::size_t segments, std::ostream& out, std::ostream& err)
{
    if (segments < 1) throw InputError("--segments must be at least 1");
    const Instance inst = load_instance(instance);
    const MilpModel m = build_milp(inst, segments);
    const std::string text = export_lp_file(m);
    std::ostream& info = out_path.empty() ? err : out;
    if (out_path.empty())
        out << text;
    else
        write_file(out_path, text);
    info << "model: " << m.variables.size() << " variables (" << m.binary_count() << " binary), " << m.constraints.size()
         << " constraints, W_bar = " << detail::fmt_num(m.w_bar) << " J\n";
    return exit_ok;
}

inline int cmd_bound(const std::string& instance, const BoundOptions& opt, std::ostream& out)
{
    const Instance inst = load_instance(instance);
    const BoundReport rep = instance_lower_bound(inst, opt);
    bool infeasible = false;
    for (std::size_t r = 0; r < inst.robots.size(); ++r) {
        const auto& b = rep.robots[r];
        infeasible = infeasible || b.method == BoundMethod::infeasible;
        out << inst.robots[r].id << " " << num(b.value) << " J " << to_string(b.method) << " (" << num(b.combinations, "%.0f") << " plans)";
        if (!b.note.empty()) out << " " << b.note;
        out << "\n";
    }
    out << "lower bound: " << num(rep.total) << " J\n";
    return infeasible ? exit_infeasible : exit_ok;
}

inline int cmd_check(const std::string& instance, const std::string& solution, std::ostream& out)
{
    const Instance inst = load_instance(instance);
    Solution sol;
    try {
        sol = parse_solution(inst, read_file(solution));
    } catch (const ParseError& e) {
        throw InputError(solution + ": " + e.what());
    }
    const FeasibilityReport rep = check_solution(inst, sol);
    if (!rep.feasible()) {
        out << rep.violations.size() << " violation(s):\n";
        for (const auto& v : rep.violations) out << "  " << v.constraint << ": " << v.detail << "\n";
        return exit_no_solution;
    }
    out << "feasible: " << num(sol.total_energy) << " J (exact " << num(sol.total_exact_energy) << " J)\n";
    return exit_ok;
}

struct BenchArgs {
    std::vector<std::string> instances;
    std::size_t runs = 10;
    std::string out;
    double bound_budget = 1e5;
};

inline BenchRow bench_instance(const std::string& path, const BenchArgs& b, const OptimizeArgs& a, std::ostream& err)
{
    const Instance inst = load_instance(path);
    BenchRow row;
    row.instance = std::filesystem::path(path).stem().string();
    row.runs = b.runs;
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> values;
    for (std::size_t i = 0; i < b.runs; ++i) {
        OptimizeArgs run = a;
        run.seed = a.seed + i;
        const RunReport rep = optimize(inst, heuristic_config(run, err));
        if (rep.best) values.push_back(rep.best->total_energy);
    }
    BoundOptions bo;
    bo.segments = a.segments;
    bo.budget = b.bound_budget;
    row.lower_bound = instance_lower_bound(inst, bo).total;
    row.feasible_runs = values.size();
    if (!values.empty()) {
        row.best = *std::min_element(values.begin(), values.end());
        row.worst = *std::max_element(values.begin(), values.end());
        double s = 0.0;
        for (double v : values) s += v;
        row.avg = std::clamp(s / static_cast<double>(values.size()), *row.best, *row.worst);
        if (std::isfinite(row.lower_bound) && row.lower_bound > 0.0) row.gap_percent = 100.0 * (*row.best - row.lower_bound) / row.lower_bound;
    }
    if (!a.deterministic) row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

inline int cmd_bench(const BenchArgs& b, const OptimizeArgs& a, std::ostream& out, std::ostream& err)
{
    if (b.runs < 1) throw InputError("--runs must be at least 1");
    const auto paths = expand_globs(b.instances);
    std::string csv = std::string(kBenchHeader) + "\n";
    bool all_feasible = true;
    for (const auto& p : paths) {
        const BenchRow row = bench_instance(p, b, a, err);
        all_feasible = all_feasible && row.feasible_runs > 0;
        csv += bench_csv_line(row) + "\n";
        err << row.instance << ": " << row.feasible_runs << "/" << row.runs << " feasible runs\n";
    }
    if (b.out.empty())
        out << csv;
    else
        write_file(b.out, csv);
    return all_feasible ? exit_ok : exit_no_solution;
}

} // namespace cli

/// The program. `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Energy-optimal scheduling of robotic cells with a fixed cycle time", "cellopt"};
    app.require_subcommand(1);

    cli::GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Generate a random instance");
    generate->add_option("--preset", gen.preset, "tiny, small, s5, m8 or l12");
    generate->add_option("--config", gen.config, "Generator configuration JSON");
    generate->add_option("--seed", gen.seed, "Random seed");
    generate->add_option("--robots", gen.robots, "Override the robot count");
    generate->add_option("-o,--output", gen.out, "Instance file (default: stdout)");
    generate->add_option("--witness", gen.witness, "Also write the feasible schedule the instance was built around");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Parse and validate an instance");
    validate->add_option("instance", validate_path, "Instance JSON")->required();

    cli::OptimizeFiles of;
    cli::OptimizeArgs oa;
    auto* opt = app.add_subcommand("optimize", "Run the heuristic");
    opt->add_option("instance", of.instance, "Instance JSON")->required();
    opt->add_option("-o,--output", of.out, "Solution file (default: stdout)");
    opt->add_option("--progress", of.progress, "CSV stream of improvements: time_s,energy_J,worker_id");
    opt->add_option("--report", of.report, "Run report JSON (default: <output>.report.json)");
    cli::add_optimize_options(opt, oa);

    std::string exp_instance, exp_out;
    std::size_t exp_segments = 10;
    auto* exp = app.add_subcommand("export", "Write the MILP in CPLEX LP format");
    exp->add_option("instance", exp_instance, "Instance JSON")->required();
    exp->add_option("-o,--output", exp_out, "LP file (default: stdout)");
    exp->add_option("--segments", exp_segments, "Linear pieces per energy function")->capture_default_str();

    std::string bound_instance;
    BoundOptions bo;
    std::optional<std::size_t> bound_threads;
    auto* bound = app.add_subcommand("bound", "Per-robot lower bound");
    bound->add_option("instance", bound_instance, "Instance JSON")->required();
    bound->add_option("--segments", bo.segments, "Linear pieces per energy function")->capture_default_str();
    bound->add_option("--budget", bo.budget, "Plans per robot enumerated before relaxing")->capture_default_str();
    bound->add_option("--threads", bound_threads, "Robots bounded concurrently");

    std::string check_instance, check_solution_path;
    auto* check = app.add_subcommand("check", "Verify a solution against an instance");
    check->add_option("instance", check_instance, "Instance JSON")->required();
    check->add_option("solution", check_solution_path, "Solution JSON")->required();

    cli::BenchArgs ba;
    cli::OptimizeArgs boa;
    auto* bench = app.add_subcommand("bench", "Repeated runs per instance with best/avg/worst and bound gap");
    bench->add_option("instances", ba.instances, "Instance files or glob patterns")->required();
    bench->add_option("--runs", ba.runs, "Runs per instance")->capture_default_str();
    bench->add_option("-o,--output", ba.out, "CSV file (default: stdout)");
    bench->add_option("--bound-budget", ba.bound_budget, "Plans per robot for the lower bound")->capture_default_str();
    cli::add_optimize_options(bench, boa);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_input_error;
    }

    try {
        if (generate->parsed()) return cli::cmd_generate(gen, out, err);
        if (validate->parsed()) return cli::cmd_validate(validate_path, out);
        if (opt->parsed()) return cli::cmd_optimize(of, oa, out, err);
        if (exp->parsed()) return cli::cmd_export(exp_instance, exp_out, exp_segments, out, err);
        if (bound->parsed()) {
            bo.threads = bound_threads ? cli::resolve_threads(bound_threads) : 1;
            return cli::cmd_bound(bound_instance, bo, out);
        }
        if (check->parsed()) return cli::cmd_check(check_instance, check_solution_path, out);
        if (bench->parsed()) return cli::cmd_bench(ba, boa, out, err);
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return exit_input_error;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return exit_input_error;
    }
    return exit_input_error;
}

} // namespace cellopt
