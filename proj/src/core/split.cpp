#include "autoens/core/split.hpp"

#include "autoens/core/error.hpp"

namespace autoens {

SplitRanges three_way_ranges(std::size_t length, int horizon_k) {
    const auto k = static_cast<std::size_t>(horizon_k);
    if (horizon_k < 1 || length < 3 * k) {
        throw ValidationError("series of length " + std::to_string(length) +
                              " is too short for a three-way split with horizon " +
                              std::to_string(horizon_k));
    }
    return {{1, length - 2 * k}, {length - 2 * k + 1, length - k}, {length - k + 1, length}};
}

SplitSet split_three_way(const Dataset& d) {
    SplitSet out{d.empty_like(), d.empty_like(), d.empty_like()};
    const auto k = static_cast<std::size_t>(d.horizon_k);
    for (const auto& ts : d.items) {
        const std::size_t t = ts.size();
        if (t < 3 * k) {
            throw ValidationError("item '" + ts.item_id + "' has length " + std::to_string(t) +
                                  " < 3*horizon (" + std::to_string(3 * k) + ")");
        }
        out.train.items.push_back(ts.slice(0, t - 2 * k));
        out.test.items.push_back(ts.slice(t - 2 * k, t - k));
        out.validation.items.push_back(ts.slice(t - k, t));
    }
    return out;
}

std::pair<Dataset, Dataset> tuning_split(const Dataset& train) {
    std::pair<Dataset, Dataset> out{train.empty_like(), train.empty_like()};
    const auto k = static_cast<std::size_t>(train.horizon_k);
    for (const auto& ts : train.items) {
        const std::size_t l = ts.size();
        if (l < 2 * k) {
            throw ValidationError("item '" + ts.item_id + "' has training length " + std::to_string(l) +
                                  " < 2*horizon (" + std::to_string(2 * k) + ")");
        }
        out.first.items.push_back(ts.slice(0, l - k));
        out.second.items.push_back(ts.slice(l - k, l));
    }
    return out;
}

Dataset concat(const Dataset& head, const Dataset& tail) {
    if (head.size() != tail.size()) throw ValidationError("concat: item counts differ");
    Dataset out = head.empty_like();
    for (std::size_t i = 0; i < head.size(); ++i) {
        const auto& a = head.items[i];
        const auto& b = tail.items[i];
        if (a.item_id != b.item_id) throw ValidationError("concat: item order differs at '" + a.item_id + "'");
        TimeSeries ts = a;
        ts.values.insert(ts.values.end(), b.values.begin(), b.values.end());
        out.items.push_back(std::move(ts));
    }
    return out;
}

}  // namespace autoens
