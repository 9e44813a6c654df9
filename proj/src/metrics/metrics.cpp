#include "autoens/metrics/metrics.hpp"

#include "autoens/core/error.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace autoens {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.empty()) throw ValidationError(std::string(what) + ": empty series");
    if (a.size() != b.size()) {
        throw ValidationError(std::string(what) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");
    }
}

double abs_sum(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += std::abs(v);
    return s;
}

std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

std::vector<double> default_quantiles() {
    return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
}

double eval_mape(std::span<const double> actual, std::span<const double> predicted) {
    require_same_length(actual, predicted, "MAPE");
    double s = 0.0;
    for (std::size_t t = 0; t < actual.size(); ++t) {
        if (actual[t] == 0.0) throw ValidationError("MAPE undefined: actual value is zero at index " + std::to_string(t));
        s += std::abs((actual[t] - predicted[t]) / actual[t]);
    }
    return s / static_cast<double>(actual.size());
}

double eval_mase(std::span<const double> actual, std::span<const double> predicted, std::span<const double> train,
                 int m) {
    require_same_length(actual, predicted, "MASE");
    if (m < 1) throw ValidationError("MASE: seasonality must be >= 1");
    const auto season = static_cast<std::size_t>(m);
    if (train.size() <= season) {
        throw ValidationError("MASE: training length " + std::to_string(train.size()) + " must exceed m=" +
                              std::to_string(m));
    }
    double naive = 0.0;
    for (std::size_t j = season; j < train.size(); ++j) naive += std::abs(train[j] - train[j - season]);
    naive /= static_cast<double>(train.size() - season);
    if (naive == 0.0) throw ValidationError("MASE undefined: seasonal naive error on the training series is zero");
    double s = 0.0;
    for (std::size_t t = 0; t < actual.size(); ++t) s += std::abs(actual[t] - predicted[t]) / naive;
    return s / static_cast<double>(actual.size());
}

double eval_wape(std::span<const double> actual, std::span<const double> predicted) {
    require_same_length(actual, predicted, "WAPE");
    const double denom = abs_sum(actual);
    if (denom == 0.0) throw ValidationError("WAPE undefined: actual values sum to zero");
    double s = 0.0;
    for (std::size_t t = 0; t < actual.size(); ++t) s += std::abs(actual[t] - predicted[t]);
    return s / denom;
}

double eval_wql(std::span<const double> actual, std::span<const double> quantile_pred, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("wQL: tau must lie in (0, 1), got " + fmt(tau));
    require_same_length(actual, quantile_pred, "wQL");
    const double denom = abs_sum(actual);
    if (denom == 0.0) throw ValidationError("wQL undefined: actual values sum to zero");
    double s = 0.0;
    for (std::size_t t = 0; t < actual.size(); ++t) {
        const double diff = actual[t] - quantile_pred[t];
        s += diff > 0.0 ? tau * diff : (1.0 - tau) * (-diff);
    }
    return 2.0 * s / denom;
}

double eval_avg_wql(std::span<const double> actual, const std::map<double, std::vector<double>>& quantile_preds,
                    std::span<const double> taus) {
    if (taus.empty()) throw ValidationError("avg-wQL: empty quantile set");
    double s = 0.0;
    for (double tau : taus) {
        auto it = quantile_preds.find(tau);
        if (it == quantile_preds.end()) throw ValidationError("avg-wQL: no prediction for tau=" + fmt(tau));
        s += eval_wql(actual, it->second, tau);
    }
    return s / static_cast<double>(taus.size());
}

const std::vector<std::string>& MetricReport::field_names() {
    static const std::vector<std::string> names{"mape", "mase", "wape", "wql_10", "wql_50", "wql_90", "avg_wql"};
    return names;
}

std::vector<double> MetricReport::values() const {
    return {mape, mase, wape, wql_10, wql_50, wql_90, avg_wql};
}

MetricReport MetricReport::from_values(std::span<const double> v) {
    if (v.size() != 7) throw ValidationError("MetricReport needs 7 values");
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
}

MetricReport mean_report(std::span<const MetricReport> reports) {
    if (reports.empty()) throw ValidationError("mean_report: no reports");
    std::vector<double> acc(7, 0.0);
    for (const auto& r : reports) {
        const auto v = r.values();
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
    }
    for (double& a : acc) a /= static_cast<double>(reports.size());
    return MetricReport::from_values(acc);
}

std::string metric_csv_header() {
    std::string h = "experiment,dataset,seed";
    for (const auto& n : MetricReport::field_names()) h += "," + n;
    return h;
}

std::string to_csv_row(const std::string& experiment, const std::string& dataset, std::uint64_t seed,
                       const MetricReport& report) {
    std::string row = experiment + "," + dataset + "," + std::to_string(seed);
    for (double v : report.values()) row += "," + fmt(v);
    return row;
}

KeyedMetricReport parse_csv_row(const std::string& line) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 10) throw ValidationError("metric row needs 10 fields, got " + std::to_string(f.size()));
    KeyedMetricReport out;
    out.experiment = f[0];
    out.dataset = f[1];
    auto [p, ec] = std::from_chars(f[2].data(), f[2].data() + f[2].size(), out.seed);
    if (ec != std::errc{}) throw ValidationError("bad seed '" + f[2] + "'");
    std::vector<double> v(7);
    for (std::size_t i = 0; i < 7; ++i) {
        const auto& s = f[3 + i];
        auto [ptr, e] = std::from_chars(s.data(), s.data() + s.size(), v[i]);
        if (e != std::errc{} || ptr != s.data() + s.size()) throw ValidationError("bad metric value '" + s + "'");
    }
    out.report = MetricReport::from_values(v);
    return out;
}

}  // namespace autoens
