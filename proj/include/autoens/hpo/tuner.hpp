#pragma once

#include "autoens/hpo/search_space.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace autoens {

enum class Strategy { Hyperband, Bayesian, Random };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view name);

struct TunerSettings {
    Strategy strategy = Strategy::Hyperband;
    int max_training_jobs = 15;  // distinct configurations evaluated
    int max_parallel_jobs = 5;
    int max_resource = 27;       // R, in epochs
    double eta = 3.0;
    std::uint64_t seed = 0;
    int ei_candidates = 1024;

    /// 1 <= max_parallel_jobs <= max_training_jobs, eta > 1, R >= 1.
    void validate() const;
};

nlohmann::json to_json(const TunerSettings& s);
TunerSettings tuner_settings_from_json(const nlohmann::json& j);

/// One evaluation handed to the objective. `config_id` identifies a
/// configuration across Hyperband rungs; `previous_resource` is the number of
/// epochs the same configuration was already trained for (0 on first sight),
/// so the objective may resume from a checkpoint.
struct TrialRequest {
    int trial_id = 0;
    int config_id = 0;
    HyperparameterConfig config;
    int resource = 0;
    int previous_resource = 0;
};

/// Returns the validation loss. Called concurrently for distinct config ids.
using Objective = std::function<double(const TrialRequest&)>;

struct TrialResult {
    int trial_id = 0;
    int config_id = 0;
    HyperparameterConfig config;
    int resource = 0;
    double loss = 0.0;  // +inf for a failed trial
    double wall_time_s = 0.0;
    bool failed = false;
    std::string error;
};

struct TuningResult {
    HyperparameterConfig best;
    double best_loss = 0.0;
    std::vector<TrialResult> trials;  // in trial-id order
    double cost_s = 0.0;              // sum of trial wall times
    double latency_s = 0.0;           // sum over synchronous phases of their schedule makespan
};

struct Bracket {
    int s = 0;
    int n = 0;
    double r = 0.0;
    std::vector<std::pair<int, double>> rungs;  // (n_i, r_i)
};

/// Closed-form Hyperband bracket table, s = s_max down to 0.
std::vector<Bracket> hyperband_schedule(double max_resource, double eta);

/// Indices of the k smallest losses; ties keep the earlier index. Result is sorted by loss.
std::vector<std::size_t> top_k(std::span<const double> losses, int k);

TuningResult run_hyperband(const SearchSpace& space, const TunerSettings& settings, const Objective& objective);
TuningResult run_bayesian(const SearchSpace& space, const TunerSettings& settings, const Objective& objective);
TuningResult run_random_search(const SearchSpace& space, const TunerSettings& settings, const Objective& objective);

/// Dispatches on settings.strategy.
TuningResult run_tuning(const SearchSpace& space, const TunerSettings& settings, const Objective& objective);

/// Trial log CSV: trial_id,strategy,bracket,rung,config_json,resource,loss,wall_time_s
void write_trial_log(std::ostream& out, const std::vector<TrialResult>& trials, bool include_header = true);
std::string trial_log_header();

}  // namespace autoens
