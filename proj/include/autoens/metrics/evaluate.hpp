#pragma once

#include "autoens/metrics/metrics.hpp"
#include "autoens/models/quantile_forecast.hpp"

#include <span>

namespace autoens {

/// avg-wQL of a quantile forecast over the levels it carries.
double forecast_avg_wql(std::span<const double> actual, const QuantileForecast& f);

/// Full report for one item. Point metrics use the 0.5 row; wQL fields need
/// the 0.1, 0.5 and 0.9 rows. MAPE or MASE are NaN when undefined for the
/// data (zero actuals, flat history) instead of aborting the report.
MetricReport evaluate_forecast(std::span<const double> actual, const QuantileForecast& f,
                               std::span<const double> history, int m);

}  // namespace autoens
