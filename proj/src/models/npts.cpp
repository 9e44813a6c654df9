#include "autoens/models/npts.hpp"

#include "autoens/core/error.hpp"
#include "autoens/core/random.hpp"

#include <cmath>

namespace autoens {

std::vector<double> npts_weights(std::size_t t, double lambda) {
    if (t < 1) throw ValidationError("NPTS: history must be non-empty");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("NPTS: lambda must be non-negative");
    std::vector<double> w(t);
    double total = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
        // Zero-based i maps to one-based i+1, so the lag is t - (i + 1).
        w[i] = std::exp(-lambda * static_cast<double>(t - 1 - i));
        total += w[i];
    }
    for (double& v : w) v /= total;
    return w;
}

QuantileForecast forecast_npts(std::span<const double> train, std::size_t horizon, const NptsSpec& spec,
                               std::span<const double> taus, std::uint64_t seed, const std::string& item_id) {
    if (train.empty()) throw ValidationError("NPTS: empty training series");
    if (spec.n_samples < 1) throw ValidationError("NPTS: n_samples must be positive");
    const auto w = npts_weights(train.size(), spec.lambda);
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    Rng rng(seed);
    std::vector<std::vector<double>> paths(static_cast<std::size_t>(spec.n_samples), std::vector<double>(horizon));
    for (auto& path : paths) {
        for (double& v : path) v = train[pick(rng)];
    }
    return forecast_from_samples(item_id, paths, taus);
}

double npts_kernel_density(std::span<const double> history, double y, double bandwidth, double lambda) {
    if (history.empty() || bandwidth <= 0.0 || lambda <= 0.0) {
        throw ValidationError("NPTS density: need history, bandwidth > 0 and lambda > 0");
    }
    const double alpha = lambda / 2.0;
    double s = 0.0;
    for (double yi : history) s += alpha * std::exp(-lambda * std::abs((y - yi) / bandwidth));
    return s / (static_cast<double>(history.size()) * bandwidth);
}

}  // namespace autoens
