#include "mttsp/bench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "mttsp/bnb.hpp"
#include "mttsp/text_format.hpp"

namespace mttsp {

namespace {

std::string trim_number(double value)
{
    std::ostringstream os;
    os << value;
    return os.str();
}

constexpr const char* kConfigHeader = "mttsp-bench";
constexpr int kReseedAttempts = 20;

}  // namespace

std::vector<Experiment> ExperimentConfig::experiments() const
{
    std::vector<Experiment> out;
    const double slowest = *std::min_element(speeds.begin(), speeds.end());
    for (double d : durations)
        out.push_back({"Tw" + trim_number(d), d, slowest});
    const double middle = durations[durations.size() / 2];
    for (double v : speeds)
        if (v != slowest)
            out.push_back({"Spd" + trim_number(v), middle, v});
    return out;
}

void ExperimentConfig::check() const
{
    if (target_counts.empty() || durations.empty() || speeds.empty() || formulations.empty())
        throw std::invalid_argument("bench config: lists must be non-empty");
    if (instances_per_count <= 0)
        throw std::invalid_argument("bench config: instances must be positive");
    if (!(time_limit > 0.0))
        throw std::invalid_argument("bench config: time_limit must be positive");
    for (int n : target_counts)
        if (n <= 0)
            throw std::invalid_argument("bench config: target counts must be positive");
    if (!std::is_sorted(durations.begin(), durations.end()))
        throw std::invalid_argument("bench config: durations must be ascending");
}

ExperimentConfig parse_config(std::string_view text)
{
    const std::vector<TextLine> lines = tokenize_lines(text);
    if (lines.empty() || lines.front().key() != kConfigHeader)
        throw ParseError(lines.empty() ? 0 : lines.front().number, kConfigHeader, "missing header");
    expect_tokens(lines.front(), 2, "version");
    if (parse_integer(lines.front(), 1, "version") != 1)
        throw ParseError(lines.front().number, "version", "unsupported version");

    ExperimentConfig config;
    std::set<std::string> seen;
    const auto numbers = [](const TextLine& line) {
        if (line.tokens.size() < 2)
            throw ParseError(line.number, line.key(), "expected at least one value");
        std::vector<double> out;
        for (std::size_t k = 1; k < line.tokens.size(); ++k)
            out.push_back(parse_number(line, k, line.key()));
        return out;
    };
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const TextLine& line = lines[k];
        const std::string& key = line.key();
        if (!seen.insert(key).second)
            throw ParseError(line.number, key, "duplicate field");
        if (key == "targets") {
            config.target_counts.clear();
            for (std::size_t i = 1; i < line.tokens.size(); ++i)
                config.target_counts.push_back(static_cast<int>(parse_integer(line, i, key)));
            if (config.target_counts.empty())
                throw ParseError(line.number, key, "expected at least one value");
        } else if (key == "instances") {
            expect_tokens(line, 2, key);
            config.instances_per_count = static_cast<int>(parse_integer(line, 1, key));
        } else if (key == "durations") {
            config.durations = numbers(line);
        } else if (key == "speeds") {
            config.speeds = numbers(line);
        } else if (key == "time_limit") {
            expect_tokens(line, 2, key);
            config.time_limit = parse_number(line, 1, key);
        } else if (key == "seed") {
            expect_tokens(line, 2, key);
            config.seed = static_cast<std::uint64_t>(parse_integer(line, 1, key));
        } else if (key == "formulations") {
            config.formulations.clear();
            for (std::size_t i = 1; i < line.tokens.size(); ++i) {
                try {
                    config.formulations.push_back(parse_formulation(line.tokens[i]));
                } catch (const std::invalid_argument& e) {
                    throw ParseError(line.number, key, e.what());
                }
            }
        } else if (key == "side") {
            expect_tokens(line, 2, key);
            config.generator.side = parse_number(line, 1, key);
        } else if (key == "horizon") {
            expect_tokens(line, 2, key);
            config.generator.horizon = parse_number(line, 1, key);
        } else if (key == "target_speed") {
            expect_tokens(line, 3, key);
            config.generator.speed_lo = parse_number(line, 1, key);
            config.generator.speed_hi = parse_number(line, 2, key);
        } else {
            throw ParseError(line.number, key, "unknown field");
        }
    }
    try {
        config.check();
    } catch (const std::invalid_argument& e) {
        throw ParseError(0, "config", e.what());
    }
    return config;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string serialize(const ExperimentConfig& config)
{
    std::ostringstream os;
    os << kConfigHeader << " 1\n";
    os << "targets";
    for (int n : config.target_counts)
        os << " " << n;
    os << "\ninstances " << config.instances_per_count << "\ndurations";
    for (double d : config.durations)
        os << " " << format_number(d);
    os << "\nspeeds";
    for (double v : config.speeds)
        os << " " << format_number(v);
    os << "\ntime_limit " << format_number(config.time_limit) << "\nseed " << config.seed
       << "\nformulations";
    for (Formulation f : config.formulations)
        os << " " << to_string(f);
    os << "\nside " << format_number(config.generator.side) << "\nhorizon "
       << format_number(config.generator.horizon) << "\ntarget_speed "
       << format_number(config.generator.speed_lo) << " "
       << format_number(config.generator.speed_hi) << "\n";
    return os.str();
}

InstanceBatch make_batch(const ExperimentConfig& config, int n)
{
    InstanceBatch batch;
    batch.n = n;
    GeneratorParams params = config.generator;
    params.v_max = *std::min_element(config.speeds.begin(), config.speeds.end());
    for (int k = 0; k < config.instances_per_count; ++k) {
        std::uint64_t seed = config.seed * 1000003ULL + static_cast<std::uint64_t>(n) * 1009ULL +
                             static_cast<std::uint64_t>(k);
        for (int attempt = 0;; ++attempt) {
            try {
                const Instance base = generate(static_cast<std::size_t>(n), seed, params);
                WindowAssignment windows =
                    assign_windows(base, config.durations, params.v_max, seed);
                batch.seeds.push_back(seed);
                batch.windowed.push_back(std::move(windows.instances));
                break;
            } catch (const GenerationError&) {
                if (attempt + 1 >= kReseedAttempts)
                    throw;
                seed += 7919ULL;
            }
        }
    }
    return batch;
}

Instance experiment_instance(const ExperimentConfig& config, const InstanceBatch& batch,
                             std::size_t index, const Experiment& experiment)
{
    const auto it = std::find(config.durations.begin(), config.durations.end(), experiment.duration);
    if (it == config.durations.end())
        throw std::invalid_argument("experiment duration not in config");
    Instance instance = batch.windowed.at(index)[it - config.durations.begin()];
    instance.v_max = experiment.v_max;
    return instance;
}

namespace {

void summarise(ReportRow& row)
{
    double gap = 0.0, runtime = 0.0, ratio = 0.0;
    for (const InstanceRecord& r : row.records) {
        gap += r.gap_percent;
        runtime += r.runtime;
        ratio += r.ratio;
        if (!r.error.empty())
            ++row.failures;
    }
    const double count = static_cast<double>(row.records.size());
    row.mean_gap = gap / count;
    row.mean_runtime = runtime / count;
    row.mean_ratio = ratio / count;
}

InstanceRecord solve_record(const Instance& instance, Formulation formulation, double time_limit)
{
    InstanceRecord rec;
    rec.formulation = to_string(formulation);
    try {
        MipSettings settings;
        settings.time_limit = time_limit;
        const MipResult r = solve_mip(build(formulation, instance), settings);
        rec.status = to_string(r.status);
        rec.z_P = r.z_P;
        rec.z_D = r.z_D;
        rec.gap_percent = r.gap_percent;
        rec.runtime = r.runtime;
        rec.nodes = r.nodes_explored;
    } catch (const std::exception& e) {
        rec.status = "error";
        rec.error = e.what();
        rec.gap_percent = std::numeric_limits<double>::infinity();
    }
    return rec;
}

}  // namespace

std::vector<ReportRow> run_gap_study(const ExperimentConfig& config)
{
    config.check();
    std::vector<ReportRow> rows;
    const std::vector<Experiment> experiments = config.experiments();
    for (int n : config.target_counts) {
        const InstanceBatch batch = make_batch(config, n);
        for (const Experiment& experiment : experiments) {
            for (Formulation formulation : config.formulations) {
                ReportRow row;
                row.label = experiment.label;
                row.formulation = to_string(formulation);
                row.n = n;
                for (int k = 0; k < config.instances_per_count; ++k) {
                    InstanceRecord rec =
                        solve_record(experiment_instance(config, batch, k, experiment),
                                     formulation, config.time_limit);
                    rec.label = experiment.label;
                    rec.n = n;
                    rec.index = k;
                    rec.seed = batch.seeds[k];
                    row.records.push_back(std::move(rec));
                }
                summarise(row);
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

std::vector<ReportRow> run_relaxation_study(const ExperimentConfig& config,
                                            const std::vector<ReportRow>& gap_rows)
{
    config.check();
    std::vector<ReportRow> rows;
    const std::vector<Experiment> experiments = config.experiments();
    for (int n : config.target_counts) {
        const InstanceBatch batch = make_batch(config, n);
        for (const Experiment& experiment : experiments) {
            const ReportRow* known = nullptr;
            for (const ReportRow& row : gap_rows)
                if (row.label == experiment.label && row.n == n && row.formulation == "gcs" &&
                    static_cast<int>(row.records.size()) == config.instances_per_count)
                    known = &row;

            std::vector<double> integer_bound(config.instances_per_count);
            for (int k = 0; k < config.instances_per_count; ++k)
                integer_bound[k] = known ? known->records[k].z_D
                                         : solve_record(experiment_instance(config, batch, k, experiment),
                                                        Formulation::gcs, config.time_limit)
                                               .z_D;

            for (Formulation formulation : {Formulation::gcs, Formulation::bigm}) {
                ReportRow row;
                row.label = experiment.label;
                row.formulation = std::string(to_string(formulation)) + "-relaxed";
                row.n = n;
                for (int k = 0; k < config.instances_per_count; ++k) {
                    InstanceRecord rec;
                    rec.label = experiment.label;
                    rec.formulation = row.formulation;
                    rec.n = n;
                    rec.index = k;
                    rec.seed = batch.seeds[k];
                    rec.z_D = integer_bound[k];
                    const Instance instance = experiment_instance(config, batch, k, experiment);
                    const SolveResult r = solve(relax(build(formulation, instance)));
                    rec.status = to_string(r.status);
                    rec.runtime = r.solve_time;
                    if (r.status == SolveStatus::optimal) {
                        rec.relaxed_bound = r.objective_value;
                        rec.ratio = r.objective_value / integer_bound[k];
                    } else {
                        rec.error = "relaxation " + rec.status;
                        rec.ratio = std::numeric_limits<double>::quiet_NaN();
                    }
                    row.records.push_back(std::move(rec));
                }
                summarise(row);
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

void write_records_csv(const std::vector<ReportRow>& rows, std::ostream& os, bool with_timing)
{
    os << "label,formulation,n,index,seed,status,z_P,z_D,gap_percent,nodes,relaxed_bound,ratio";
    if (with_timing)
        os << ",runtime";
    os << ",error\n";
    for (const ReportRow& row : rows) {
        for (const InstanceRecord& r : row.records) {
            os << r.label << "," << r.formulation << "," << r.n << "," << r.index << "," << r.seed
               << "," << r.status << "," << format_number(r.z_P) << "," << format_number(r.z_D)
               << "," << format_number(r.gap_percent) << "," << r.nodes << ","
               << format_number(r.relaxed_bound) << "," << format_number(r.ratio);
            if (with_timing)
                os << "," << format_number(r.runtime);
            std::string error = r.error;
            std::replace(error.begin(), error.end(), ',', ';');
            os << "," << error << "\n";
        }
    }
}

void write_summary_csv(const std::vector<ReportRow>& rows, std::ostream& os)
{
    os << "label,formulation,n,mean_gap,mean_runtime,mean_ratio,failures\n";
    for (const ReportRow& row : rows)
        os << row.label << "," << row.formulation << "," << row.n << ","
           << format_number(row.mean_gap) << "," << format_number(row.mean_runtime) << ","
           << format_number(row.mean_ratio) << "," << row.failures << "\n";
}

std::vector<std::string> emit_plot_data(const std::vector<ReportRow>& rows,
                                        const std::string& directory)
{
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec)
        throw std::runtime_error("cannot create " + directory + ": " + ec.message());

    std::map<std::string, std::vector<const ReportRow*>> by_label;
    std::vector<std::string> order;
    for (const ReportRow& row : rows) {
        if (!by_label.contains(row.label))
            order.push_back(row.label);
        by_label[row.label].push_back(&row);
    }
    std::vector<std::string> paths;
    for (const std::string& label : order) {
        const std::string path = (std::filesystem::path(directory) / (label + ".csv")).string();
        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("cannot write " + path);
        out << "n,formulation,mean_gap,mean_runtime,mean_ratio\n";
        for (const ReportRow* row : by_label[label])
            out << row->n << "," << row->formulation << "," << format_number(row->mean_gap) << ","
                << format_number(row->mean_runtime) << "," << format_number(row->mean_ratio)
                << "\n";
        if (!out)
            throw std::runtime_error("write failed: " + path);
        paths.push_back(path);
    }
    return paths;
}

}  // namespace mttsp
