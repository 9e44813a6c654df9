#pragma once

#include "autoens/models/quantile_forecast.hpp"

#include <optional>
#include <span>

namespace autoens {

struct EtsModel {
    double theta = 0.0;          // smoothing weight in [0, 1]
    double last_smoothed = 0.0;  // one-step prediction after the last observation
    double sigma = 0.0;          // RMSE of in-sample one-step errors
};

/// Simple exponential smoothing seeded with the first observation.
/// With `forced_theta` unset, theta is the SSE minimizer over {0, 0.05, ..., 1}.
EtsModel fit_ets(std::span<const double> train, std::optional<double> forced_theta = std::nullopt);

QuantileForecast forecast_ets(const EtsModel& model, std::size_t horizon, std::span<const double> taus,
                              const std::string& item_id = {});

QuantileForecast fit_forecast_ets(std::span<const double> train, std::size_t horizon, std::span<const double> taus,
                                  std::optional<double> forced_theta = std::nullopt, const std::string& item_id = {});

}  // namespace autoens
