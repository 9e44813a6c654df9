#include "autoens/core/time_series.hpp"

#include "autoens/core/error.hpp"

#include <algorithm>
#include <cmath>

namespace autoens {

std::string_view to_string(Frequency freq) {
    return freq == Frequency::Hourly ? "hourly" : "daily";
}

Frequency frequency_from_string(std::string_view name) {
    if (name == "hourly" || name == "H" || name == "1H") return Frequency::Hourly;
    if (name == "daily" || name == "D" || name == "1D") return Frequency::Daily;
    throw ValidationError("unknown frequency '" + std::string(name) + "'");
}

std::int64_t step_seconds(Frequency freq) {
    return freq == Frequency::Hourly ? 3600 : 86400;
}

int default_seasonality(Frequency freq) {
    return freq == Frequency::Hourly ? 24 : 7;
}

TimeSeries TimeSeries::slice(std::size_t first, std::size_t last) const {
    if (first > last || last > values.size()) {
        throw ValidationError("slice [" + std::to_string(first) + ", " + std::to_string(last) +
                              ") out of range for item '" + item_id + "'");
    }
    TimeSeries out;
    out.item_id = item_id;
    out.freq = freq;
    out.start = start + static_cast<std::int64_t>(first) * step_seconds(freq);
    out.values.assign(values.begin() + static_cast<std::ptrdiff_t>(first),
                      values.begin() + static_cast<std::ptrdiff_t>(last));
    return out;
}

std::size_t Dataset::min_length() const {
    if (items.empty()) return 0;
    std::size_t n = items.front().size();
    for (const auto& ts : items) n = std::min(n, ts.size());
    return n;
}

const TimeSeries& Dataset::item(std::string_view id) const {
    auto it = std::find_if(items.begin(), items.end(),
                           [&](const TimeSeries& ts) { return ts.item_id == id; });
    if (it == items.end()) throw ValidationError("unknown item '" + std::string(id) + "'");
    return *it;
}

Dataset Dataset::empty_like() const {
    Dataset out;
    out.name = name;
    out.freq = freq;
    out.horizon_k = horizon_k;
    out.seasonality_m = seasonality_m;
    return out;
}

void validate(const Dataset& d) {
    if (d.horizon_k < 1) throw ValidationError("horizon_k must be positive");
    if (d.seasonality_m < 1) throw ValidationError("seasonality_m must be positive");
    for (const auto& ts : d.items) {
        if (ts.values.empty()) throw ValidationError("item '" + ts.item_id + "' has no values");
        if (ts.freq != d.freq) throw ValidationError("item '" + ts.item_id + "' has a different frequency");
        for (double v : ts.values) {
            if (!std::isfinite(v)) throw ValidationError("item '" + ts.item_id + "' has non-finite values");
        }
    }
}

}  // namespace autoens
