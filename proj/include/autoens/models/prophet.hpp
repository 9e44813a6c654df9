#pragma once

#include "autoens/models/quantile_forecast.hpp"

#include <cstdint>
#include <functional>
#include <set>
#include <span>
#include <vector>

namespace autoens {

enum class TrendKind { LinearPiecewise, Logistic };

/// Time is the zero-based step index of the training series; future steps
/// continue the count.
struct ProphetSpec {
    TrendKind trend_kind = TrendKind::LinearPiecewise;
    int n_changepoints = 10;
    int fourier_order = 3;
    double period = 7.0;
    /// Each set lists the step indices (past and future) on which one event occurs.
    std::vector<std::set<long>> holidays;
    /// Carrying capacity C(t); logistic trend only. Defaults to 1.2 * max(train).
    std::function<double(double)> capacity;
    int n_samples = 200;
};

/// Logistic trend g(t) = C / (1 + exp(-(k + a(t)'delta) (t - (m + a(t)'gamma)))),
/// with a_j(t) = 1 once t >= s_j.
double logistic_trend(double t, double capacity, double k, double m, std::span<const double> changepoints,
                      std::span<const double> deltas, std::span<const double> gammas);

/// Offsets that keep the logistic trend continuous at each changepoint.
std::vector<double> logistic_gammas(double k, double m, std::span<const double> changepoints,
                                    std::span<const double> deltas);

struct ProphetModel {
    ProphetSpec spec;
    std::size_t n_train = 0;
    std::vector<double> changepoints;  // s_1 < ... < s_S
    double k = 0.0;                    // base growth rate
    double m = 0.0;                    // base offset
    std::vector<double> deltas;        // rate adjustments
    std::vector<double> gammas;        // offset adjustments
    std::vector<double> fourier;       // a_1, b_1, ..., a_N, b_N
    std::vector<double> kappa;         // holiday effects
    std::vector<double> residuals;     // in-sample residuals
    double capacity_default = 0.0;

    [[nodiscard]] double trend(double t) const;
    [[nodiscard]] double seasonality(double t) const;
    [[nodiscard]] double holiday_effect(double t) const;
    [[nodiscard]] double predict(double t) const { return trend(t) + seasonality(t) + holiday_effect(t); }
};

ProphetModel fit_prophet(std::span<const double> train, const ProphetSpec& spec);

/// Point path g + s + h over the next `horizon` steps plus residual-bootstrap quantiles.
QuantileForecast forecast_prophet(const ProphetModel& model, std::size_t horizon, std::span<const double> taus,
                                  std::uint64_t seed, const std::string& item_id = {});

QuantileForecast fit_forecast_prophet(std::span<const double> train, const ProphetSpec& spec, std::size_t horizon,
                                      std::span<const double> taus, std::uint64_t seed,
                                      const std::string& item_id = {});

}  // namespace autoens
