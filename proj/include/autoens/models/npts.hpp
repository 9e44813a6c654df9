#pragma once

#include "autoens/models/quantile_forecast.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace autoens {

struct NptsSpec {
    double lambda = 0.05;  // exponential decay rate of the sampling kernel
    int n_samples = 200;
};

/// Sampling probabilities over a history of length t: w_i proportional to
/// exp(-lambda * (t - i)), i = 1..t, normalized to sum to one.
std::vector<double> npts_weights(std::size_t t, double lambda);

/// Each future step is an independent draw from the past observations with
/// npts_weights probabilities; quantiles are per-step empirical quantiles.
QuantileForecast forecast_npts(std::span<const double> train, std::size_t horizon, const NptsSpec& spec,
                               std::span<const double> taus, std::uint64_t seed, const std::string& item_id = {});

/// Kernel density estimate at `y` with K(u) = (lambda/2) exp(-lambda |u|) and
/// bandwidth h. Diagnostic only; forecasting uses the sampling form.
double npts_kernel_density(std::span<const double> history, double y, double bandwidth, double lambda);

}  // namespace autoens
