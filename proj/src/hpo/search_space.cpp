#include "autoens/hpo/search_space.hpp"

#include "autoens/core/error.hpp"

#include <algorithm>
#include <cmath>

namespace autoens {

namespace {

std::string_view kind_name(DimensionKind k) {
    switch (k) {
        case DimensionKind::Uniform: return "uniform";
        case DimensionKind::LogUniform: return "log_uniform";
        case DimensionKind::Integer: return "integer";
    }
    return "uniform";
}

DimensionKind kind_from_name(const std::string& s) {
    if (s == "uniform") return DimensionKind::Uniform;
    if (s == "log_uniform") return DimensionKind::LogUniform;
    if (s == "integer") return DimensionKind::Integer;
    throw ValidationError("unknown dimension kind '" + s + "'");
}

}  // namespace

void SearchSpace::validate() const {
    if (dimensions.empty()) throw ValidationError("search space has no dimensions");
    std::set<std::string> seen;
    for (const auto& d : dimensions) {
        if (!seen.insert(d.name).second) throw ValidationError("duplicate dimension '" + d.name + "'");
        if (!(d.lo <= d.hi)) throw ValidationError("dimension '" + d.name + "': lo must not exceed hi");
        if (d.kind == DimensionKind::LogUniform && !(d.lo > 0.0)) {
            throw ValidationError("dimension '" + d.name + "': log-uniform bounds must be positive");
        }
        if (d.kind == DimensionKind::Integer && (std::floor(d.lo) != d.lo || std::floor(d.hi) != d.hi)) {
            throw ValidationError("dimension '" + d.name + "': integer bounds must be integral");
        }
    }
}

const Dimension& SearchSpace::dimension(const std::string& name) const {
    for (const auto& d : dimensions) {
        if (d.name == name) return d;
    }
    throw ValidationError("no dimension named '" + name + "'");
}

double HyperparameterConfig::get(const std::string& name) const {
    const auto it = values.find(name);
    if (it == values.end()) throw ValidationError("configuration has no value for '" + name + "'");
    return it->second;
}

int HyperparameterConfig::get_int(const std::string& name) const {
    return static_cast<int>(std::lround(get(name)));
}

nlohmann::json HyperparameterConfig::values_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, v] : values) {
        if (integers.contains(name)) j[name] = std::llround(v);
        else j[name] = v;
    }
    return j;
}

HyperparameterConfig sample_configuration(const SearchSpace& space, Rng& rng) {
    HyperparameterConfig c;
    for (const auto& d : space.dimensions) {
        double v = d.lo;
        switch (d.kind) {
            case DimensionKind::Uniform:
                v = d.lo + (d.hi - d.lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                break;
            case DimensionKind::LogUniform:
                v = std::exp(std::log(d.lo) +
                             (std::log(d.hi) - std::log(d.lo)) * std::uniform_real_distribution<double>(0.0, 1.0)(rng));
                break;
            case DimensionKind::Integer:
                v = static_cast<double>(std::uniform_int_distribution<long>(static_cast<long>(d.lo),
                                                                            static_cast<long>(d.hi))(rng));
                c.integers.insert(d.name);
                break;
        }
        c.values[d.name] = std::clamp(v, d.lo, d.hi);
    }
    return c;
}

std::vector<double> to_unit(const SearchSpace& space, const HyperparameterConfig& config) {
    std::vector<double> u;
    for (const auto& d : space.dimensions) {
        const double v = config.get(d.name);
        if (d.hi == d.lo) {
            u.push_back(0.5);
        } else if (d.kind == DimensionKind::LogUniform) {
            u.push_back((std::log(v) - std::log(d.lo)) / (std::log(d.hi) - std::log(d.lo)));
        } else {
            u.push_back((v - d.lo) / (d.hi - d.lo));
        }
    }
    return u;
}

HyperparameterConfig from_unit(const SearchSpace& space, const std::vector<double>& unit) {
    if (unit.size() != space.dimensions.size()) throw ValidationError("unit vector has the wrong dimension");
    HyperparameterConfig c;
    for (std::size_t i = 0; i < unit.size(); ++i) {
        const auto& d = space.dimensions[i];
        const double u = std::clamp(unit[i], 0.0, 1.0);
        double v;
        if (d.kind == DimensionKind::LogUniform) {
            v = std::exp(std::log(d.lo) + u * (std::log(d.hi) - std::log(d.lo)));
        } else {
            v = d.lo + u * (d.hi - d.lo);
        }
        if (d.kind == DimensionKind::Integer) {
            v = std::round(v);
            c.integers.insert(d.name);
        }
        c.values[d.name] = std::clamp(v, d.lo, d.hi);
    }
    return c;
}

void check_in_bounds(const SearchSpace& space, const HyperparameterConfig& config) {
    for (const auto& d : space.dimensions) {
        const double v = config.get(d.name);
        if (v < d.lo || v > d.hi) {
            throw ValidationError("value " + std::to_string(v) + " for '" + d.name + "' is outside [" +
                                  std::to_string(d.lo) + ", " + std::to_string(d.hi) + "]");
        }
        if (d.kind == DimensionKind::Integer && std::floor(v) != v) {
            throw ValidationError("value for '" + d.name + "' must be an integer");
        }
    }
}

SearchSpace neural_search_space(int horizon) {
    if (horizon < 1) throw ValidationError("horizon must be positive");
    SearchSpace s;
    s.dimensions.push_back({"learning_rate", DimensionKind::LogUniform, 1e-4, 1e-1});
    s.dimensions.push_back({"context_length", DimensionKind::Integer, static_cast<double>((horizon + 1) / 2),
                            static_cast<double>(4 * horizon)});
    return s;
}

nlohmann::json to_json(const SearchSpace& space) {
    nlohmann::json dims = nlohmann::json::array();
    for (const auto& d : space.dimensions) {
        dims.push_back({{"name", d.name}, {"kind", kind_name(d.kind)}, {"lo", d.lo}, {"hi", d.hi}});
    }
    return {{"dimensions", dims}};
}

SearchSpace search_space_from_json(const nlohmann::json& j) {
    SearchSpace s;
    for (const auto& d : j.at("dimensions")) {
        s.dimensions.push_back({d.at("name").get<std::string>(), kind_from_name(d.at("kind").get<std::string>()),
                                d.at("lo").get<double>(), d.at("hi").get<double>()});
    }
    s.validate();
    return s;
}

}  // namespace autoens
