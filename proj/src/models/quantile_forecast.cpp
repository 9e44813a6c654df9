#include "autoens/models/quantile_forecast.hpp"

#include "autoens/core/error.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>

namespace autoens {

QuantileForecast::QuantileForecast(std::string item_id, std::vector<double> taus, std::size_t horizon)
    : item_id_(std::move(item_id)), taus_(std::move(taus)), horizon_(horizon), values_(taus_.size() * horizon, 0.0) {}

std::span<const double> QuantileForecast::row(std::size_t q) const {
    return {values_.data() + q * horizon_, horizon_};
}

std::span<double> QuantileForecast::row(std::size_t q) {
    return {values_.data() + q * horizon_, horizon_};
}

std::span<const double> QuantileForecast::quantile(double tau) const {
    for (std::size_t q = 0; q < taus_.size(); ++q) {
        if (std::abs(taus_[q] - tau) < 1e-12) return row(q);
    }
    throw ValidationError("forecast for '" + item_id_ + "' has no quantile " + std::to_string(tau));
}

void QuantileForecast::repair_crossing() {
    std::vector<double> column(taus_.size());
    for (std::size_t k = 0; k < horizon_; ++k) {
        for (std::size_t q = 0; q < taus_.size(); ++q) column[q] = at(q, k);
        std::sort(column.begin(), column.end());
        for (std::size_t q = 0; q < taus_.size(); ++q) at(q, k) = column[q];
    }
}

bool QuantileForecast::is_monotone() const {
    for (std::size_t k = 0; k < horizon_; ++k) {
        for (std::size_t q = 1; q < taus_.size(); ++q) {
            if (at(q, k) < at(q - 1, k)) return false;
        }
    }
    return true;
}

std::map<double, std::vector<double>> QuantileForecast::as_map() const {
    std::map<double, std::vector<double>> out;
    for (std::size_t q = 0; q < taus_.size(); ++q) {
        auto r = row(q);
        out.emplace(taus_[q], std::vector<double>(r.begin(), r.end()));
    }
    return out;
}

double empirical_quantile(std::span<const double> sorted, double tau) {
    if (sorted.empty()) throw ValidationError("empirical_quantile: empty sample");
    const double h = tau * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double normal_quantile(double tau) {
    static const boost::math::normal_distribution<double> standard;
    return boost::math::quantile(standard, tau);
}

void check_taus(std::span<const double> taus) {
    if (taus.empty()) throw ValidationError("quantile set is empty");
    for (std::size_t q = 0; q < taus.size(); ++q) {
        if (!(taus[q] > 0.0 && taus[q] < 1.0)) throw ValidationError("quantile levels must lie in (0, 1)");
        if (q > 0 && taus[q] <= taus[q - 1]) throw ValidationError("quantile levels must be strictly increasing");
    }
}

QuantileForecast gaussian_forecast(std::string item_id, std::span<const double> mean, std::span<const double> sd,
                                   std::span<const double> taus) {
    check_taus(taus);
    if (mean.size() != sd.size()) throw ValidationError("gaussian_forecast: mean/sd length mismatch");
    QuantileForecast f(std::move(item_id), {taus.begin(), taus.end()}, mean.size());
    for (std::size_t q = 0; q < taus.size(); ++q) {
        const double z = taus[q] == 0.5 ? 0.0 : normal_quantile(taus[q]);
        for (std::size_t k = 0; k < mean.size(); ++k) f.at(q, k) = mean[k] + z * sd[k];
    }
    f.repair_crossing();
    return f;
}

QuantileForecast forecast_from_samples(std::string item_id, const std::vector<std::vector<double>>& paths,
                                       std::span<const double> taus) {
    check_taus(taus);
    if (paths.empty()) throw ValidationError("forecast_from_samples: no sample paths");
    const std::size_t horizon = paths.front().size();
    QuantileForecast f(std::move(item_id), {taus.begin(), taus.end()}, horizon);
    std::vector<double> column(paths.size());
    for (std::size_t k = 0; k < horizon; ++k) {
        for (std::size_t s = 0; s < paths.size(); ++s) column[s] = paths[s].at(k);
        std::sort(column.begin(), column.end());
        for (std::size_t q = 0; q < taus.size(); ++q) f.at(q, k) = empirical_quantile(column, taus[q]);
    }
    return f;
}

}  // namespace autoens
