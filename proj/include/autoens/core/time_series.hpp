#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace autoens {

enum class Frequency { Hourly, Daily };

std::string_view to_string(Frequency freq);
Frequency frequency_from_string(std::string_view name);

/// Seconds between consecutive observations.
std::int64_t step_seconds(Frequency freq);

/// 24 for hourly data, 7 for daily data.
int default_seasonality(Frequency freq);

struct TimeSeries {
    std::string item_id;
    std::int64_t start = 0;  // epoch seconds
    Frequency freq = Frequency::Daily;
    std::vector<double> values;

    [[nodiscard]] std::size_t size() const { return values.size(); }

    /// Sub-series over the zero-based half-open index range [first, last).
    [[nodiscard]] TimeSeries slice(std::size_t first, std::size_t last) const;
};

struct Dataset {
    std::string name;
    Frequency freq = Frequency::Daily;
    int horizon_k = 1;
    int seasonality_m = 1;
    std::vector<TimeSeries> items;

    [[nodiscard]] std::size_t size() const { return items.size(); }
    [[nodiscard]] std::size_t min_length() const;
    [[nodiscard]] const TimeSeries& item(std::string_view id) const;

    /// Same metadata, no items.
    [[nodiscard]] Dataset empty_like() const;
};

/// Throws ValidationError if the dataset violates its invariants
/// (non-empty finite items, shared frequency, positive horizon and seasonality).
void validate(const Dataset& d);

}  // namespace autoens
