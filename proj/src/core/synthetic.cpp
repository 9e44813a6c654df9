#include "autoens/core/synthetic.hpp"

#include "autoens/core/error.hpp"
#include "autoens/core/random.hpp"

#include <cmath>
#include <numbers>

namespace autoens {

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.horizon_k < 1 || spec.n_steps < 3 * static_cast<std::size_t>(spec.horizon_k)) {
        throw ValidationError("synthetic n_steps must be at least 3*horizon_k");
    }
    if (spec.seasonality_m < 1) throw ValidationError("seasonality_m must be positive");

    Dataset d;
    d.name = spec.name;
    d.freq = spec.freq;
    d.horizon_k = spec.horizon_k;
    d.seasonality_m = spec.seasonality_m;

    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double two_pi = 2.0 * std::numbers::pi;

    for (std::size_t i = 0; i < spec.n_items; ++i) {
        const double h = spec.item_heterogeneity;
        const double level = spec.level * (1.0 + h * (unit(rng) - 0.5));
        const double slope = spec.trend_slope * (1.0 + h * (unit(rng) - 0.5));
        const double phase = h > 0.0 ? two_pi * h * unit(rng) : 0.0;

        TimeSeries ts;
        ts.item_id = "item_" + std::to_string(i);
        ts.freq = spec.freq;
        ts.start = spec.start;
        ts.values.resize(spec.n_steps);
        for (std::size_t t = 0; t < spec.n_steps; ++t) {
            const double x = static_cast<double>(t);
            double v = level + slope * x;
            if (spec.seasonal_amplitude != 0.0) {
                v += spec.seasonal_amplitude * std::sin(two_pi * x / spec.seasonality_m + phase);
            }
            if (spec.noise_sd > 0.0) v += spec.noise_sd * gauss(rng);
            ts.values[t] = v;
        }
        d.items.push_back(std::move(ts));
    }
    return d;
}

}  // namespace autoens
