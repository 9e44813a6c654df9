#pragma once

#include "autoens/models/quantile_forecast.hpp"

#include <json.hpp>

#include <span>
#include <vector>

namespace autoens {

struct ArimaSpec {
    int p = 2;
    int d = 1;
    int q = 1;

    /// p, q >= 0, p + q >= 1, 0 <= d <= 2.
    void validate() const;
};

/// d-fold first differences; output length is input length minus d.
std::vector<double> difference(std::span<const double> series, int d);

/// Continues a series from its d preceding values (`heads`, oldest first)
/// given the next d-th differences. `heads ++ result` undoes `difference`.
std::vector<double> inverse_difference(std::span<const double> diffed, std::span<const double> heads, int d);

/// Sample partial autocorrelations at lags 1..max_lag (Levinson-Durbin).
std::vector<double> pacf(std::span<const double> series, int max_lag);

/// Sample autocorrelations at lags 0..max_lag.
std::vector<double> acf(std::span<const double> series, int max_lag);

struct ArimaModel {
    ArimaSpec spec;
    double intercept = 0.0;
    std::vector<double> ar;  // phi_1..phi_p
    std::vector<double> ma;  // theta_1..theta_q
    double sigma = 0.0;

    // State needed to forecast from the end of the training series.
    std::vector<double> differenced_tail;  // last p differenced values, oldest first
    std::vector<double> residual_tail;     // last q residuals, oldest first
    std::vector<double> heads;             // last d original values, oldest first
    std::vector<double> residuals;         // in-sample one-step residuals on the differenced scale
};

/// Hannan-Rissanen: a long autoregression supplies residual estimates, then
/// the series is regressed on its lags and the lagged residuals.
ArimaModel fit_arima(std::span<const double> train, const ArimaSpec& spec);

/// Iterated one-step forecasts, inverse-differenced, with Gaussian intervals
/// from the psi-weight variance of the integrated model.
QuantileForecast forecast_arima(const ArimaModel& model, std::size_t horizon, std::span<const double> taus,
                                const std::string& item_id = {});

nlohmann::json to_json(const ArimaModel& model);
ArimaModel arima_from_json(const nlohmann::json& j);

}  // namespace autoens
