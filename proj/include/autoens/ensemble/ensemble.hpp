#pragma once

#include "autoens/core/time_series.hpp"
#include "autoens/metrics/metrics.hpp"
#include "autoens/models/quantile_forecast.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace autoens {

/// Forecasts of one algorithm for every item of a dataset.
struct AlgorithmForecasts {
    std::string algorithm;
    std::vector<QuantileForecast> items;

    [[nodiscard]] const QuantileForecast& for_item(const std::string& item_id) const;
};

struct ErrorMatrix {
    std::vector<std::string> algorithms;
    std::vector<std::string> items;
    std::vector<std::vector<double>> err;  // err[a][i], per-item avg-wQL
    std::vector<double> global;            // unweighted item mean per algorithm
};

/// Missing forecasts raise a ValidationError naming (algorithm, item).
ErrorMatrix compute_error_matrix(const std::vector<AlgorithmForecasts>& forecasts, const Dataset& actuals);

struct EnsembleParams {
    double p_local = 0.0;
    double p_global = 0.0;
    double p_comb = 0.0;

    void validate() const;
    [[nodiscard]] std::array<double, 3> as_array() const { return {p_local, p_global, p_comb}; }
    static EnsembleParams from_array(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }
};

enum class EnsembleMode { Local, Global };

struct ItemAssignment {
    std::string item_id;
    EnsembleMode mode = EnsembleMode::Local;
    std::vector<std::string> members;  // in algorithm order
};

using EnsembleAssignment = std::vector<ItemAssignment>;

/// Local set: err <= (1 + p_local) * item minimum. Global set: aggregate
/// error <= (1 + p_global) * best aggregate. An item goes local when its
/// minimum error <= (1 - p_comb) * mean error of the global set on that item.
EnsembleAssignment select_members(const ErrorMatrix& errors, const EnsembleParams& params);

/// Element-wise mean of the members' quantile matrices, crossing repaired.
std::vector<QuantileForecast> ensemble_forecast(const EnsembleAssignment& assignment,
                                                const std::vector<AlgorithmForecasts>& forecasts);

struct BasinHoppingSettings {
    int iterations = 50;
    double step_scale = 0.2;
    std::uint64_t seed = 0;
};

struct BasinHoppingResult {
    EnsembleParams best;
    double best_value = 0.0;
    double start_value = 0.0;
    int evaluations = 0;
};

using EnsembleObjective = std::function<double(const EnsembleParams&)>;

/// Starts from the better of (0,0,0) and (1,1,1); Gaussian perturbation
/// clipped to the unit box, coordinate-descent refinement with a shrinking
/// grid, improvement-only acceptance.
BasinHoppingResult basin_hopping(const EnsembleObjective& objective, const BasinHoppingSettings& settings);

/// Unweighted mean over items of per-item avg-wQL.
double mean_avg_wql(const std::vector<QuantileForecast>& forecasts, const Dataset& actuals);

struct EnsembleFit {
    EnsembleParams params;
    EnsembleAssignment assignment;                 // from test-window errors
    std::vector<QuantileForecast> forecasts;       // ensemble on the validation window
    MetricReport validation;                       // mean of per-item reports
    double objective = 0.0;                        // validation avg-wQL of the ensemble
    std::vector<std::pair<std::string, double>> single_model_avg_wql;  // validation, per algorithm
    ErrorMatrix test_errors;
    std::string warning;
};

/// `test_forecasts` come from models trained on z_{1:t-2k} and predict the
/// test window; `validation_forecasts` come from the same algorithms retrained
/// on z_{1:t-k} and predict the validation window. `history` holds z_{1:t-k}
/// per item (for MASE).
EnsembleFit fit_ensemble(const std::vector<AlgorithmForecasts>& test_forecasts, const Dataset& test_actuals,
                         const std::vector<AlgorithmForecasts>& validation_forecasts,
                         const Dataset& validation_actuals, const Dataset& history,
                         const BasinHoppingSettings& settings);

nlohmann::json to_json(const EnsembleParams& p);
EnsembleParams ensemble_params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EnsembleAssignment& a);
nlohmann::json to_json(const EnsembleFit& fit);

}  // namespace autoens
