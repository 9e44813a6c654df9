#pragma once

#include "autoens/core/random.hpp"

#include <json.hpp>

#include <map>
#include <set>
#include <string>
#include <vector>

namespace autoens {

enum class DimensionKind { Uniform, LogUniform, Integer };

struct Dimension {
    std::string name;
    DimensionKind kind = DimensionKind::Uniform;
    double lo = 0.0;
    double hi = 1.0;  // inclusive for integers; lo == hi pins the value
};

struct SearchSpace {
    std::vector<Dimension> dimensions;

    /// Unique names, lo <= hi, positive bounds for log-uniform, integral bounds for integers.
    void validate() const;
    [[nodiscard]] const Dimension& dimension(const std::string& name) const;
};

struct HyperparameterConfig {
    std::map<std::string, double> values;
    std::set<std::string> integers;  // names whose values are integral

    std::string strategy;  // provenance
    int bracket = -1;
    int rung = -1;

    [[nodiscard]] double get(const std::string& name) const;
    [[nodiscard]] int get_int(const std::string& name) const;
    [[nodiscard]] nlohmann::json values_json() const;
    [[nodiscard]] bool same_values(const HyperparameterConfig& other) const { return values == other.values; }
};

/// One independent draw per dimension; log-uniform dimensions are uniform in log space.
HyperparameterConfig sample_configuration(const SearchSpace& space, Rng& rng);

/// Maps a configuration into [0, 1]^d (log scale for log-uniform dimensions)
/// and back; decoding rounds integer dimensions and clamps to bounds.
std::vector<double> to_unit(const SearchSpace& space, const HyperparameterConfig& config);
HyperparameterConfig from_unit(const SearchSpace& space, const std::vector<double>& unit);

/// Throws ValidationError naming the first value outside its dimension.
void check_in_bounds(const SearchSpace& space, const HyperparameterConfig& config);

/// Learning rate log-uniform on [1e-4, 1e-1], context length integer on [ceil(k/2), 4k].
SearchSpace neural_search_space(int horizon);

nlohmann::json to_json(const SearchSpace& space);
SearchSpace search_space_from_json(const nlohmann::json& j);

}  // namespace autoens
