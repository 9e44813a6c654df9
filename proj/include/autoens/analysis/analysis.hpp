#pragma once

#include "autoens/pipeline/experiment.hpp"

#include <json.hpp>

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace autoens {

/// "Hyperband_iter_15" -> {"Hyperband", 15}; labels without "_iter_" keep jobs = 0.
struct ExperimentLabel {
    std::string strategy;
    int max_training_jobs = 0;
};
ExperimentLabel parse_experiment_label(const std::string& experiment);

struct ConfigSummary {
    std::string label;
    double mean_error = 0.0;
    double std_error = 0.0;  // population
    double mean_hpo_latency_s = 0.0;
    double std_latency = 0.0;  // population
    double mean_pipeline_latency_s = 0.0;
    double dataset_mean_hpo_latency_s = 0.0;  // mean of per-dataset means
    std::size_t n_runs = 0;
};

/// Grand mean and population standard deviation per experiment label, in
/// order of first appearance.
std::vector<ConfigSummary> aggregate(const std::vector<ExperimentRecord>& records);

/// Summaries of one strategy, ordered by max_training_jobs.
std::vector<ConfigSummary> select_strategy(const std::vector<ConfigSummary>& summaries, const std::string& strategy);

/// v_i / sum(v); every value must be positive.
std::vector<double> normalize(std::span<const double> values);

struct NormalizedTable {
    std::vector<std::string> labels;
    std::vector<double> error;
    std::vector<double> latency;
};

/// Normalizes mean error and mean HPO latency over the given configurations.
NormalizedTable normalize(const std::vector<ConfigSummary>& summaries);

/// theta * latency + (1 - theta) * error, per configuration.
std::vector<double> tradeoff_cost(double theta, const NormalizedTable& table);

/// Theta where the two configurations' cost lines meet; Error("no crossover") when parallel.
double crossover_theta(const NormalizedTable& table, const std::string& config_a, const std::string& config_b);

struct TradeoffGrid {
    std::vector<double> thetas;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> cost;  // cost[theta][config]
    std::vector<std::size_t> argmin;        // first minimum per theta
};

/// 0, 0.04, ..., 1.56.
std::vector<double> default_theta_grid();
TradeoffGrid theta_sweep(const NormalizedTable& table, std::span<const double> thetas);

struct Crossover {
    std::string from;
    std::string to;
    double theta = 0.0;
};

/// Exact crossover for every change of the grid argmin between consecutive thetas.
std::vector<Crossover> argmin_crossovers(const NormalizedTable& table, const TradeoffGrid& grid);

void write_normalized_csv(std::ostream& out, const NormalizedTable& table);
/// Reads the format of write_normalized_csv (config,normalized_error,normalized_latency).
NormalizedTable read_normalized_csv(std::istream& in);
void write_tradeoff_csv(std::ostream& out, const TradeoffGrid& grid);
/// Cost heat map (rows theta, columns configuration) with the argmin marked.
void write_tradeoff_svg(std::ostream& out, const TradeoffGrid& grid);

struct StrategyPair {
    int max_training_jobs = 0;
    double mean_error_a = 0.0;
    double mean_error_b = 0.0;
    double mean_latency_a = 0.0;
    double mean_latency_b = 0.0;
    double error_change = 0.0;    // (a - b) / b
    double latency_change = 0.0;  // (a - b) / b
};

struct StrategyComparison {
    std::string strategy_a;
    std::string strategy_b;
    std::vector<StrategyPair> pairs;
    double mean_error_change = 0.0;
    double mean_latency_change = 0.0;
    double latency_sd_a = 0.0;  // population sd of the per-config mean latencies over matched pairs
    double latency_sd_b = 0.0;
};

/// Matches configurations by max_training_jobs; Error when no pair matches.
StrategyComparison compare_strategies(const std::vector<ExperimentRecord>& records, const std::string& strategy_a,
                                      const std::string& strategy_b);
nlohmann::json to_json(const StrategyComparison& c);

}  // namespace autoens
