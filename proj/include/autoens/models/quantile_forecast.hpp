#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace autoens {

/// Q x K matrix of quantile predictions: row q holds the tau_q quantile for
/// each of the K forecast steps.
class QuantileForecast {
public:
    QuantileForecast() = default;
    QuantileForecast(std::string item_id, std::vector<double> taus, std::size_t horizon);

    [[nodiscard]] const std::string& item_id() const { return item_id_; }
    [[nodiscard]] const std::vector<double>& taus() const { return taus_; }
    [[nodiscard]] std::size_t num_quantiles() const { return taus_.size(); }
    [[nodiscard]] std::size_t horizon() const { return horizon_; }

    double& at(std::size_t q, std::size_t k) { return values_[q * horizon_ + k]; }
    [[nodiscard]] double at(std::size_t q, std::size_t k) const { return values_[q * horizon_ + k]; }

    [[nodiscard]] std::span<const double> row(std::size_t q) const;
    std::span<double> row(std::size_t q);

    /// Row for `tau`; throws if the level is not present.
    [[nodiscard]] std::span<const double> quantile(double tau) const;

    /// Sorts every column ascending so quantiles are monotone in tau.
    void repair_crossing();
    [[nodiscard]] bool is_monotone() const;

    [[nodiscard]] std::map<double, std::vector<double>> as_map() const;

    friend bool operator==(const QuantileForecast&, const QuantileForecast&) = default;

private:
    std::string item_id_;
    std::vector<double> taus_;
    std::size_t horizon_ = 0;
    std::vector<double> values_;
};

/// Type-7 (linear interpolation) quantile of an ascending-sorted sample.
double empirical_quantile(std::span<const double> sorted, double tau);

/// Standard normal inverse CDF.
double normal_quantile(double tau);

/// Quantiles from a point path and per-step standard deviations.
QuantileForecast gaussian_forecast(std::string item_id, std::span<const double> mean, std::span<const double> sd,
                                   std::span<const double> taus);

/// Per-step empirical quantiles of sample paths (each path has the forecast horizon length).
QuantileForecast forecast_from_samples(std::string item_id, const std::vector<std::vector<double>>& paths,
                                       std::span<const double> taus);

/// Validates taus: non-empty, strictly increasing, inside (0, 1).
void check_taus(std::span<const double> taus);

}  // namespace autoens
