#pragma once

#include "autoens/core/time_series.hpp"

#include <utility>

namespace autoens {

/// Disjoint backtest windows: train z[1..t-2k], test z[t-2k+1..t-k],
/// validation z[t-k+1..t].
struct SplitSet {
    Dataset train;
    Dataset test;
    Dataset validation;
};

/// Index range [first, last] in one-based inclusive coordinates, matching the
/// way windows are usually written for backtests.
struct WindowRange {
    std::size_t first = 0;
    std::size_t last = 0;
    [[nodiscard]] std::size_t length() const { return last + 1 - first; }
};

struct SplitRanges {
    WindowRange train;
    WindowRange test;
    WindowRange validation;
};

SplitRanges three_way_ranges(std::size_t length, int horizon_k);

SplitSet split_three_way(const Dataset& d);

/// Splits the training window for tuning: z[1..l-k] and z[l-k+1..l].
std::pair<Dataset, Dataset> tuning_split(const Dataset& train);

/// Item-wise concatenation of two datasets with matching item order.
Dataset concat(const Dataset& head, const Dataset& tail);

}  // namespace autoens
