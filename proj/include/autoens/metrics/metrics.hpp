#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace autoens {

/// Quantile levels used for avg-wQL unless a caller supplies its own.
std::vector<double> default_quantiles();  // 0.1, 0.2, ..., 0.9

/// Mean absolute percentage error. Throws if any actual value is zero.
double eval_mape(std::span<const double> actual, std::span<const double> predicted);

/// Mean absolute error scaled by the in-sample seasonal naive MAE of `train`.
double eval_mase(std::span<const double> actual, std::span<const double> predicted, std::span<const double> train,
                 int m);

double eval_wape(std::span<const double> actual, std::span<const double> predicted);

/// Weighted quantile loss for a single level tau in (0, 1).
double eval_wql(std::span<const double> actual, std::span<const double> quantile_pred, double tau);

/// Arithmetic mean of eval_wql over `taus`; `quantile_preds` must hold a row for every tau.
double eval_avg_wql(std::span<const double> actual, const std::map<double, std::vector<double>>& quantile_preds,
                    std::span<const double> taus);

struct MetricReport {
    double mape = 0.0;
    double mase = 0.0;
    double wape = 0.0;
    double wql_10 = 0.0;
    double wql_50 = 0.0;
    double wql_90 = 0.0;
    double avg_wql = 0.0;

    static const std::vector<std::string>& field_names();
    [[nodiscard]] std::vector<double> values() const;
    static MetricReport from_values(std::span<const double> values);
};

/// Unweighted mean of per-item reports.
MetricReport mean_report(std::span<const MetricReport> reports);

/// CSV row for a report keyed by (experiment, dataset, seed).
std::string metric_csv_header();
std::string to_csv_row(const std::string& experiment, const std::string& dataset, std::uint64_t seed,
                       const MetricReport& report);
struct KeyedMetricReport {
    std::string experiment;
    std::string dataset;
    std::uint64_t seed = 0;
    MetricReport report;
};
KeyedMetricReport parse_csv_row(const std::string& line);

}  // namespace autoens
