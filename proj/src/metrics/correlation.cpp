#include "autoens/metrics/correlation.hpp"

#include "autoens/core/error.hpp"

#include <algorithm>
#include <cmath>

namespace autoens {

CorrelationMatrix pearson_matrix(const std::vector<std::pair<std::string, std::vector<double>>>& observations) {
    if (observations.empty()) throw ValidationError("pearson_matrix: no metrics");
    const std::size_t n = observations.front().second.size();
    if (n < 2) throw ValidationError("pearson_matrix: need at least 2 observations per metric");

    const std::size_t k = observations.size();
    std::vector<std::vector<double>> centered(k);
    std::vector<double> norm(k);
    CorrelationMatrix out;
    for (std::size_t i = 0; i < k; ++i) {
        const auto& [label, x] = observations[i];
        if (x.size() != n) throw ValidationError("pearson_matrix: metric '" + label + "' has a different length");
        double mean = 0.0;
        for (double v : x) mean += v;
        mean /= static_cast<double>(n);
        centered[i].resize(n);
        double ss = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            centered[i][t] = x[t] - mean;
            ss += centered[i][t] * centered[i][t];
        }
        if (ss == 0.0) throw ValidationError("pearson_matrix: metric '" + label + "' has zero variance");
        norm[i] = std::sqrt(ss);
        out.labels.push_back(label);
    }
    out.rho.assign(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i) {
        out.rho[i][i] = 1.0;
        for (std::size_t j = i + 1; j < k; ++j) {
            double cov = 0.0;
            for (std::size_t t = 0; t < n; ++t) cov += centered[i][t] * centered[j][t];
            const double r = std::clamp(cov / (norm[i] * norm[j]), -1.0, 1.0);
            out.rho[i][j] = r;
            out.rho[j][i] = r;
        }
    }
    return out;
}

std::map<std::string, double> representativity(const CorrelationMatrix& c) {
    std::map<std::string, double> out;
    const std::size_t k = c.labels.size();
    if (c.rho.size() != k) throw ValidationError("representativity: matrix shape does not match labels");
    for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) s += c.rho.at(i).at(j);
        out[c.labels[j]] = s / static_cast<double>(k);
    }
    return out;
}

}  // namespace autoens
