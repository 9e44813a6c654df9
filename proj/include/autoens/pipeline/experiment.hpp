#pragma once

#include "autoens/core/split.hpp"
#include "autoens/core/synthetic.hpp"
#include "autoens/ensemble/ensemble.hpp"
#include "autoens/hpo/tuner.hpp"
#include "autoens/metrics/metrics.hpp"
#include "autoens/pipeline/models.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace autoens {

/// Either a dataset manifest on disk or a synthetic generator spec.
struct DatasetSource {
    std::optional<std::filesystem::path> manifest;
    std::optional<SyntheticSpec> synthetic;
    std::uint64_t synthetic_seed = 0;

    [[nodiscard]] Dataset load() const;
};

nlohmann::json to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);

struct ExperimentConfig {
    std::string name;  // empty: derived from the tuner ("Hyperband_iter_15") or "without_HPO"
    DatasetSource dataset;
    bool use_hpo = false;
    std::optional<TunerSettings> tuner;
    std::vector<std::uint64_t> seeds{0};
    std::vector<double> quantiles = default_quantiles();
    std::filesystem::path output_dir;  // empty: no artifacts written
    ModelSettings models;
    BasinHoppingSettings ensemble;
    int workers = 1;  // seeds run concurrently up to this count

    /// Tuner present iff use_hpo; non-empty seeds; valid quantiles and model settings.
    void validate() const;
    [[nodiscard]] std::string experiment_name() const;
};

/// Relative manifest paths resolve against `base_dir`.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const ExperimentConfig& cfg);

/// One pipeline run, in the columns of the results tables.
struct ExperimentRecord {
    std::string experiment;
    std::string dataset;
    std::string version;  // seed label: a, b, c, ...
    double error = 0.0;   // validation avg-wQL of the final ensemble
    double pipeline_latency_s = 0.0;
    double hpo_latency_s = 0.0;

    friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

/// Seed index 0 -> "a", 1 -> "b", ..., 26 -> "aa".
std::string version_label(std::size_t seed_index);

struct StageTimings {
    double data_prep_s = 0.0;
    double hpo_s = 0.0;
    double model_training_s = 0.0;  // stage-2 models on z_{1:t-2k}
    double final_training_s = 0.0;  // retrained on z_{1:t-k}
    double ensemble_s = 0.0;
};

struct NeuralTuningSummary {
    std::string algorithm;
    nlohmann::json best_config;
    double best_loss = 0.0;
    double default_loss = 0.0;
    double cost_s = 0.0;
    double latency_s = 0.0;
    std::size_t trials = 0;
};

struct RunOutcome {
    ExperimentRecord record;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string failed_stage;
    std::string message;
    StageTimings timings;
    std::vector<NeuralTuningSummary> tuning;
    std::vector<TrialResult> trials;  // all tuning trials, model after model
    std::vector<std::string> trial_models;  // algorithm of each entry in `trials`
    EnsembleFit ensemble;
    std::vector<AlgorithmForecasts> validation_forecasts;  // single models retrained on z_{1:t-k}
};

/// One seed of the four-stage pipeline on an already loaded dataset.
RunOutcome run_pipeline(const ExperimentConfig& cfg, const Dataset& data, std::size_t seed_index);

/// All seeds; a failing stage marks its outcome failed and the sweep goes on.
/// Writes artifacts and appends successful records to `<output_dir>/records.csv`
/// when an output directory is configured.
std::vector<RunOutcome> run_experiment(const ExperimentConfig& cfg);

/// Per-item reports averaged; forecasts must cover every item of the window with its horizon.
MetricReport backtest(const std::vector<QuantileForecast>& forecasts, const Dataset& window, const Dataset& history);

/// Raises Error unless the tuning windows lie inside the training window of `ranges`.
void check_tuning_ranges(const SplitRanges& ranges, std::size_t tune_train_length, std::size_t tune_validation_length);

// Records CSV: Experiment,Dataset,Version,Error,Pipeline,HPO
const std::vector<std::string>& record_columns();
void write_records(std::ostream& out, const std::vector<ExperimentRecord>& records, bool include_header = true);
std::vector<ExperimentRecord> read_records(std::istream& in);
void save_records(const std::filesystem::path& path, const std::vector<ExperimentRecord>& records);
/// Appends, writing the header when the file is new; an existing file must have the same header.
void append_records(const std::filesystem::path& path, const std::vector<ExperimentRecord>& records);
std::vector<ExperimentRecord> load_records(const std::filesystem::path& path);

/// item,step,tau,value with shortest round-trip numbers.
void write_forecasts_csv(std::ostream& out, const std::vector<QuantileForecast>& forecasts);
std::vector<QuantileForecast> read_forecasts_csv(std::istream& in);

/// Writes forecasts.csv, ensemble.json, summary.json and per-model trial logs into `dir`.
void write_run_artifacts(const std::filesystem::path& dir, const RunOutcome& outcome);

}  // namespace autoens
