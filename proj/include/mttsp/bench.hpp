#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mttsp/formulations.hpp"
#include "mttsp/instance.hpp"

namespace mttsp {

/// One experiment cell family: a window duration paired with an agent speed.
struct Experiment {
    std::string label;
    double duration = 0.0;
    double v_max = 0.0;
};

struct ExperimentConfig {
    std::vector<int> target_counts{5, 8, 10};
    int instances_per_count = 10;
    std::vector<double> durations{25.0, 50.0, 75.0};
    std::vector<double> speeds{4.0, 6.0, 8.0};
    double time_limit = 120.0;
    std::uint64_t seed = 1;
    std::vector<Formulation> formulations{Formulation::gcs, Formulation::bigm};
    GeneratorParams generator;

    /// Tw<d> at the slowest speed for every duration, then Spd<v> at the
    /// middle duration for every other speed.
    std::vector<Experiment> experiments() const;
    /// Throws std::invalid_argument on empty lists or a non-positive limit.
    void check() const;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);
std::string serialize(const ExperimentConfig& config);

/// The windowed instances of one target count, indexed [instance][duration].
struct InstanceBatch {
    int n = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<std::vector<Instance>> windowed;
};

/// Deterministic batch: instance k uses generate/assign_windows seeds derived
/// from (config.seed, n, k), reseeding when window assignment gives up.
InstanceBatch make_batch(const ExperimentConfig& config, int n);

/// Instance of `batch` for an experiment (its duration and speed applied).
Instance experiment_instance(const ExperimentConfig& config, const InstanceBatch& batch,
                             std::size_t index, const Experiment& experiment);

struct InstanceRecord {
    std::string label;
    std::string formulation;
    int n = 0;
    int index = 0;
    std::uint64_t seed = 0;
    std::string status;
    double z_P = 0.0;
    double z_D = 0.0;
    double gap_percent = 0.0;
    double runtime = 0.0;
    long long nodes = 0;
    /// Relaxation study only.
    double relaxed_bound = 0.0;
    double ratio = 0.0;
    std::string error;
};

struct ReportRow {
    std::string label;
    std::string formulation;
    int n = 0;
    double mean_gap = 0.0;
    double mean_runtime = 0.0;
    double mean_ratio = 0.0;
    int failures = 0;
    std::vector<InstanceRecord> records;
};

std::vector<ReportRow> run_gap_study(const ExperimentConfig& config);

/// Relaxed bounds of both formulations divided by the best bound of the
/// integer GCS program. Integer bounds come from `gap_rows` when they hold
/// the matching GCS cell, otherwise they are computed.
std::vector<ReportRow> run_relaxation_study(const ExperimentConfig& config,
                                            const std::vector<ReportRow>& gap_rows = {});

/// Per-instance CSV. Wall-clock columns are left out when `with_timing` is
/// false, which makes the output a pure function of the config.
void write_records_csv(const std::vector<ReportRow>& rows, std::ostream& os,
                       bool with_timing = true);
void write_summary_csv(const std::vector<ReportRow>& rows, std::ostream& os);

/// One CSV per experiment label in `directory` (n, formulation, mean_gap,
/// mean_runtime, mean_ratio). Returns the written paths.
std::vector<std::string> emit_plot_data(const std::vector<ReportRow>& rows,
                                        const std::string& directory);

}  // namespace mttsp
