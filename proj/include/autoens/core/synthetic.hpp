#pragma once

#include "autoens/core/time_series.hpp"

#include <cstdint>
#include <string>

namespace autoens {

/// Per-item values are `level + slope*t + amplitude*sin(2*pi*t/m + phase) + noise`.
struct SyntheticSpec {
    std::string name = "synthetic";
    std::size_t n_items = 10;
    std::size_t n_steps = 120;
    Frequency freq = Frequency::Daily;
    int horizon_k = 7;
    int seasonality_m = 7;
    double level = 0.0;
    double trend_slope = 0.0;
    double seasonal_amplitude = 0.0;
    double noise_sd = 0.0;
    /// Items get independent random level offsets, slopes and phases scaled by this.
    double item_heterogeneity = 0.0;
    std::int64_t start = 1577836800;  // 2020-01-01T00:00:00Z
};

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace autoens
