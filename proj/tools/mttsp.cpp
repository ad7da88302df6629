#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mttsp/bench.hpp"
#include "mttsp/bnb.hpp"
#include "mttsp/formulations.hpp"
#include "mttsp/instance.hpp"
#include "mttsp/oracle.hpp"
#include "mttsp/text_format.hpp"

using namespace mttsp;

namespace {

enum ExitCode { kSuccess = 0, kInfeasible = 1, kLimitNoIncumbent = 2, kUsage = 3 };

void print_tour(const Tour& tour)
{
    std::printf("sequence");
    for (int node : tour.sequence)
        std::printf(" %d", node);
    std::printf("\n");
    for (std::size_t k = 0; k < tour.sequence.size(); ++k)
        std::printf("  node %d  t %.6f  p (%.6f, %.6f)\n", tour.sequence[k], tour.times[k],
                    tour.positions[k].x(), tour.positions[k].y());
}

int run_generate(int n, std::uint64_t seed, const std::vector<double>& durations, double v_min,
                 const std::string& out_dir, const std::string& prefix)
{
    GeneratorParams params;
    params.v_max = v_min;
    const Instance base = generate(static_cast<std::size_t>(n), seed, params);
    std::filesystem::create_directories(out_dir);
    const auto path_for = [&](const std::string& suffix) {
        return (std::filesystem::path(out_dir) / (prefix + suffix + ".mttsp")).string();
    };
    if (durations.empty()) {
        save_instance(base, path_for(""));
        std::printf("%s\n", path_for("").c_str());
        return kSuccess;
    }
    const WindowAssignment windows = assign_windows(base, durations, v_min, seed);
    for (std::size_t k = 0; k < durations.size(); ++k) {
        std::ostringstream suffix;
        suffix << "_tw" << durations[k];
        save_instance(windows.instances[k], path_for(suffix.str()));
        std::printf("%s\n", path_for(suffix.str()).c_str());
    }
    std::printf("construction tour completes at %.6f after %d attempts\n",
                windows.completion_time, windows.attempts);
    return kSuccess;
}

int run_solve(const std::string& instance_path, const std::string& formulation, double time_limit,
              double tol, double vmax, const std::string& tour_out, const std::string& log_path)
{
    Instance instance = load_instance(instance_path);
    if (vmax > 0.0)
        instance.v_max = vmax;
    MipSettings settings;
    settings.time_limit = time_limit;
    settings.rel_tol = tol;
    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path);
        if (!log)
            throw std::runtime_error("cannot write " + log_path);
        settings.log = &log;
    }
    const MipResult r = solve_mip(build(parse_formulation(formulation), instance), settings);
    std::printf("status %s\nz_P %.9g\nz_D %.9g\ngap_percent %.6g\nnodes %lld\nruntime %.3f\n",
                to_string(r.status), r.z_P, r.z_D, r.gap_percent, r.nodes_explored, r.runtime);
    if (r.incumbent) {
        print_tour(*r.incumbent);
        if (!tour_out.empty())
            save_tour(*r.incumbent, tour_out);
    }
    switch (r.status) {
    case MipStatus::optimal:
    case MipStatus::feasible: return kSuccess;
    case MipStatus::infeasible: return kInfeasible;
    case MipStatus::no_incumbent: return kLimitNoIncumbent;
    }
    return kSuccess;
}

int run_relax(const std::string& instance_path, const std::string& formulation, double vmax)
{
    Instance instance = load_instance(instance_path);
    if (vmax > 0.0)
        instance.v_max = vmax;
    const SolveResult r = solve(relax(build(parse_formulation(formulation), instance)));
    std::printf("status %s\nbound %.9g\niterations %d\nruntime %.3f\n", to_string(r.status),
                r.objective_value, r.iterations, r.solve_time);
    if (r.status == SolveStatus::infeasible)
        return kInfeasible;
    if (r.status != SolveStatus::optimal)
        return kLimitNoIncumbent;
    return kSuccess;
}

int run_oracle(const std::string& instance_path, double vmax, const std::string& tour_out)
{
    Instance instance = load_instance(instance_path);
    if (vmax > 0.0)
        instance.v_max = vmax;
    if (instance.size() > kBruteForceMaxTargets) {
        std::fprintf(stderr, "oracle: at most %zu targets\n", kBruteForceMaxTargets);
        return kUsage;
    }
    const BruteForceResult r = brute_force(instance);
    std::printf("sequences %lld (solved %lld)\n", r.sequences_enumerated, r.sequences_solved);
    if (!r.tour) {
        std::printf("status infeasible\n");
        return kInfeasible;
    }
    std::printf("status optimal\ncost %.9g\n", r.tour->cost);
    print_tour(*r.tour);
    if (!tour_out.empty())
        save_tour(*r.tour, tour_out);
    return kSuccess;
}

int run_check(const std::string& instance_path, const std::string& tour_path, double tol)
{
    const Instance instance = load_instance(instance_path);
    const Tour tour = load_tour(tour_path);
    const FeasibilityReport report = check_feasible(instance, tour, tol);
    if (report.ok()) {
        std::printf("feasible, cost %.9g\n", tour.path_length());
        return kSuccess;
    }
    for (const Violation& v : report.violations)
        std::printf("%s %.3g %s\n", to_string(v.kind), v.magnitude, v.message.c_str());
    return kInfeasible;
}

int run_bench(const std::string& config_path, const std::string& out_dir, const std::string& study)
{
    const ExperimentConfig config = load_config(config_path);
    std::filesystem::create_directories(out_dir);
    const auto write = [&](const std::string& name, const std::vector<ReportRow>& rows) {
        const std::filesystem::path dir(out_dir);
        std::ofstream records(dir / (name + "_records.csv"));
        write_records_csv(rows, records);
        std::ofstream summary(dir / (name + "_summary.csv"));
        write_summary_csv(rows, summary);
        write_summary_csv(rows, std::cout);
        for (const std::string& path : emit_plot_data(rows, (dir / (name + "_plot")).string()))
            std::printf("wrote %s\n", path.c_str());
    };
    std::vector<ReportRow> gap_rows;
    if (study == "gap" || study == "both") {
        gap_rows = run_gap_study(config);
        write("gap", gap_rows);
    }
    if (study == "relax" || study == "both")
        write("relax", run_relaxation_study(config, gap_rows));
    return kSuccess;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Exact solvers for the moving-target TSP with time windows"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("generate", "Generate an instance and its windowed variants");
    int n = 5;
    std::uint64_t seed = 1;
    std::vector<double> durations{25, 50, 75};
    double v_min = 4.0;
    std::string out_dir = ".";
    std::string prefix = "instance";
    gen->add_option("-n,--targets", n, "Number of targets")->check(CLI::PositiveNumber);
    gen->add_option("--seed", seed, "Random seed");
    gen->add_option("--durations", durations, "Window durations, ascending (empty: no windows)")
        ->delimiter(',');
    gen->add_option("--v-min", v_min, "Agent speed the windows must support");
    gen->add_option("-o,--out-dir", out_dir, "Output directory");
    gen->add_option("--prefix", prefix, "File name prefix");
    bool no_windows = false;
    gen->add_flag("--no-windows", no_windows, "Write only the full-horizon instance");

    std::string instance_path, formulation = "gcs", tour_out, log_path, tour_path;
    double time_limit = 120.0, tol = 1e-6, vmax = 0.0;
    bool deterministic = true;

    auto* solve_cmd = app.add_subcommand("solve", "Branch-and-bound on one instance");
    solve_cmd->add_option("instance", instance_path, "Instance file")->required()->check(CLI::ExistingFile);
    solve_cmd->add_option("--formulation", formulation, "bigm or gcs")
        ->check(CLI::IsMember({"bigm", "gcs"}));
    solve_cmd->add_option("--time-limit", time_limit, "Seconds")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--tol", tol, "Relative optimality tolerance")->check(CLI::NonNegativeNumber);
    solve_cmd->add_flag("--deterministic", deterministic, "Single-threaded search (the only mode)");
    solve_cmd->add_option("--vmax", vmax, "Override the agent speed");
    solve_cmd->add_option("--tour-out", tour_out, "Write the incumbent tour here");
    solve_cmd->add_option("--log", log_path, "CSV progress log");

    auto* relax_cmd = app.add_subcommand("relax", "Bound from the continuous relaxation");
    relax_cmd->add_option("instance", instance_path, "Instance file")->required()->check(CLI::ExistingFile);
    relax_cmd->add_option("--formulation", formulation, "bigm or gcs")
        ->check(CLI::IsMember({"bigm", "gcs"}));
    relax_cmd->add_option("--vmax", vmax, "Override the agent speed");

    auto* oracle_cmd = app.add_subcommand("oracle", "Brute force over all visit orders");
    oracle_cmd->add_option("instance", instance_path, "Instance file")->required()->check(CLI::ExistingFile);
    oracle_cmd->add_option("--vmax", vmax, "Override the agent speed");
    oracle_cmd->add_option("--tour-out", tour_out, "Write the optimal tour here");

    auto* check_cmd = app.add_subcommand("check", "Check a tour file against an instance");
    check_cmd->add_option("instance", instance_path, "Instance file")->required()->check(CLI::ExistingFile);
    check_cmd->add_option("tour", tour_path, "Tour file")->required()->check(CLI::ExistingFile);
    double check_tol = kFeasibilityTol;
    check_cmd->add_option("--tol", check_tol, "Absolute tolerance");

    auto* bench_cmd = app.add_subcommand("bench", "Run the experiment grid from a config file");
    std::string config_path, study = "both";
    bench_cmd->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    bench_cmd->add_option("-o,--out-dir", out_dir, "Output directory");
    bench_cmd->add_option("--study", study, "gap, relax or both")
        ->check(CLI::IsMember({"gap", "relax", "both"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kSuccess : kUsage;
    }

    try {
        if (*gen)
            return run_generate(n, seed, no_windows ? std::vector<double>{} : durations, v_min,
                                out_dir, prefix);
        if (*solve_cmd)
            return run_solve(instance_path, formulation, time_limit, tol, vmax, tour_out, log_path);
        if (*relax_cmd)
            return run_relax(instance_path, formulation, vmax);
        if (*oracle_cmd)
            return run_oracle(instance_path, vmax, tour_out);
        if (*check_cmd)
            return run_check(instance_path, tour_path, check_tol);
        if (*bench_cmd)
            return run_bench(config_path, out_dir, study);
    } catch (const ParseError& e) {
        std::fprintf(stderr, "parse error (line %zu, field %s): %s\n", e.line(), e.field().c_str(),
                     e.what());
        return kUsage;
    } catch (const GenerationError& e) {
        std::fprintf(stderr, "generation failed: %s\n", e.what());
        return kInfeasible;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    }
    return kUsage;
}
