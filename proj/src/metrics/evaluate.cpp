#include "autoens/metrics/evaluate.hpp"

#include "autoens/core/error.hpp"

#include <limits>

namespace autoens {

double forecast_avg_wql(std::span<const double> actual, const QuantileForecast& f) {
    if (actual.size() != f.horizon()) {
        throw ValidationError("forecast for '" + f.item_id() + "' has horizon " + std::to_string(f.horizon()) +
                              " but " + std::to_string(actual.size()) + " actual values were given");
    }
    double s = 0.0;
    for (std::size_t q = 0; q < f.num_quantiles(); ++q) s += eval_wql(actual, f.row(q), f.taus()[q]);
    return s / static_cast<double>(f.num_quantiles());
}

MetricReport evaluate_forecast(std::span<const double> actual, const QuantileForecast& f,
                               std::span<const double> history, int m) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    MetricReport r;
    const auto median = f.quantile(0.5);
    try {
        r.mape = eval_mape(actual, median);
    } catch (const ValidationError&) {
        r.mape = nan;
    }
    try {
        r.mase = eval_mase(actual, median, history, m);
    } catch (const ValidationError&) {
        r.mase = nan;
    }
    r.wape = eval_wape(actual, median);
    r.wql_10 = eval_wql(actual, f.quantile(0.1), 0.1);
    r.wql_50 = eval_wql(actual, median, 0.5);
    r.wql_90 = eval_wql(actual, f.quantile(0.9), 0.9);
    r.avg_wql = forecast_avg_wql(actual, f);
    return r;
}

}  // namespace autoens
