#pragma once

#include <map>
#include <string>
#include <vector>

namespace autoens {

struct CorrelationMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> rho;  // rho[i][j], symmetric
};

/// Observations as (label, values) pairs; all vectors the same length >= 2.
CorrelationMatrix pearson_matrix(const std::vector<std::pair<std::string, std::vector<double>>>& observations);

/// Per-column mean of the correlation matrix, diagonal included.
std::map<std::string, double> representativity(const CorrelationMatrix& c);

}  // namespace autoens
