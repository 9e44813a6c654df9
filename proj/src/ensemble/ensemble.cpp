#include "autoens/ensemble/ensemble.hpp"

#include "autoens/core/error.hpp"
#include "autoens/core/random.hpp"
#include "autoens/metrics/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace autoens {

const QuantileForecast& AlgorithmForecasts::for_item(const std::string& item_id) const {
    for (const auto& f : items) {
        if (f.item_id() == item_id) return f;
    }
    throw ValidationError("no forecast from algorithm '" + algorithm + "' for item '" + item_id + "'");
}

ErrorMatrix compute_error_matrix(const std::vector<AlgorithmForecasts>& forecasts, const Dataset& actuals) {
    if (forecasts.empty()) throw ValidationError("compute_error_matrix: no algorithms");
    ErrorMatrix m;
    for (const auto& ts : actuals.items) m.items.push_back(ts.item_id);
    for (const auto& alg : forecasts) {
        m.algorithms.push_back(alg.algorithm);
        std::vector<double> row;
        for (const auto& ts : actuals.items) {
            const double e = forecast_avg_wql(ts.values, alg.for_item(ts.item_id));
            if (!std::isfinite(e) || e < 0.0) {
                throw ValidationError("non-finite error for algorithm '" + alg.algorithm + "' on item '" +
                                      ts.item_id + "'");
            }
            row.push_back(e);
        }
        double mean = 0.0;
        for (double e : row) mean += e;
        m.global.push_back(row.empty() ? 0.0 : mean / static_cast<double>(row.size()));
        m.err.push_back(std::move(row));
    }
    return m;
}

void EnsembleParams::validate() const {
    for (double p : as_array()) {
        if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("ensemble parameters must lie in [0, 1]");
    }
}

EnsembleAssignment select_members(const ErrorMatrix& errors, const EnsembleParams& params) {
    params.validate();
    const std::size_t n_alg = errors.algorithms.size();
    const double best_global = *std::min_element(errors.global.begin(), errors.global.end());
    std::vector<std::size_t> global_set;
    for (std::size_t a = 0; a < n_alg; ++a) {
        if (errors.global[a] <= (1.0 + params.p_global) * best_global) global_set.push_back(a);
    }
    EnsembleAssignment out;
    for (std::size_t i = 0; i < errors.items.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < n_alg; ++a) best = std::min(best, errors.err[a][i]);
        double global_mean = 0.0;
        for (std::size_t a : global_set) global_mean += errors.err[a][i];
        global_mean /= static_cast<double>(global_set.size());

        ItemAssignment item;
        item.item_id = errors.items[i];
        item.mode = best <= (1.0 - params.p_comb) * global_mean ? EnsembleMode::Local : EnsembleMode::Global;
        if (item.mode == EnsembleMode::Local) {
            for (std::size_t a = 0; a < n_alg; ++a) {
                if (errors.err[a][i] <= (1.0 + params.p_local) * best) item.members.push_back(errors.algorithms[a]);
            }
        } else {
            for (std::size_t a : global_set) item.members.push_back(errors.algorithms[a]);
        }
        out.push_back(std::move(item));
    }
    return out;
}

std::vector<QuantileForecast> ensemble_forecast(const EnsembleAssignment& assignment,
                                                const std::vector<AlgorithmForecasts>& forecasts) {
    auto find_alg = [&](const std::string& name) -> const AlgorithmForecasts& {
        for (const auto& a : forecasts) {
            if (a.algorithm == name) return a;
        }
        throw ValidationError("no forecasts for algorithm '" + name + "'");
    };
    std::vector<QuantileForecast> out;
    for (const auto& item : assignment) {
        if (item.members.empty()) throw ValidationError("item '" + item.item_id + "' has no ensemble members");
        const auto& first = find_alg(item.members.front()).for_item(item.item_id);
        // Mean written as first + mean deviation so identical members reproduce it exactly.
        QuantileForecast dev(item.item_id, first.taus(), first.horizon());
        for (const auto& name : item.members) {
            const auto& f = find_alg(name).for_item(item.item_id);
            if (f.taus() != first.taus() || f.horizon() != first.horizon()) {
                throw ValidationError("forecasts for item '" + item.item_id + "' disagree in shape");
            }
            for (std::size_t q = 0; q < f.num_quantiles(); ++q) {
                for (std::size_t k = 0; k < f.horizon(); ++k) dev.at(q, k) += f.at(q, k) - first.at(q, k);
            }
        }
        const double n = static_cast<double>(item.members.size());
        QuantileForecast sum = first;
        for (std::size_t q = 0; q < sum.num_quantiles(); ++q) {
            for (std::size_t k = 0; k < sum.horizon(); ++k) sum.at(q, k) += dev.at(q, k) / n;
        }
        sum.repair_crossing();
        out.push_back(std::move(sum));
    }
    return out;
}

namespace {

struct Evaluator {
    const EnsembleObjective& objective;
    int count = 0;

    double operator()(const std::array<double, 3>& p) {
        ++count;
        return objective(EnsembleParams::from_array(p));
    }
};

// Coordinate descent with a shrinking step, staying inside the unit box.
void refine(Evaluator& eval, std::array<double, 3>& p, double& value) {
    for (double step = 0.1; step >= 1e-3; step *= 0.5) {
        bool moved = true;
        while (moved) {
            moved = false;
            for (std::size_t d = 0; d < 3; ++d) {
                for (double dir : {-1.0, 1.0}) {
                    auto trial = p;
                    trial[d] = std::clamp(trial[d] + dir * step, 0.0, 1.0);
                    if (trial[d] == p[d]) continue;
                    const double v = eval(trial);
                    if (v < value) {
                        value = v;
                        p = trial;
                        moved = true;
                    }
                }
            }
        }
    }
}

}  // namespace

BasinHoppingResult basin_hopping(const EnsembleObjective& objective, const BasinHoppingSettings& settings) {
    if (settings.iterations < 0) throw ValidationError("basin hopping: iterations must be >= 0");
    if (!(settings.step_scale > 0.0)) throw ValidationError("basin hopping: step_scale must be positive");
    Evaluator eval{objective};
    std::array<double, 3> current{0.0, 0.0, 0.0};
    double value = eval(current);
    const std::array<double, 3> ones{1.0, 1.0, 1.0};
    const double at_ones = eval(ones);
    if (at_ones < value) {
        current = ones;
        value = at_ones;
    }
    BasinHoppingResult r;
    r.start_value = value;
    refine(eval, current, value);

    Rng rng(settings.seed);
    std::normal_distribution<double> step(0.0, settings.step_scale);
    for (int it = 0; it < settings.iterations; ++it) {
        auto candidate = current;
        for (double& c : candidate) c = std::clamp(c + step(rng), 0.0, 1.0);
        double cand_value = eval(candidate);
        refine(eval, candidate, cand_value);
        if (cand_value < value) {
            current = candidate;
            value = cand_value;
        }
    }
    r.best = EnsembleParams::from_array(current);
    r.best_value = value;
    r.evaluations = eval.count;
    return r;
}

double mean_avg_wql(const std::vector<QuantileForecast>& forecasts, const Dataset& actuals) {
    if (actuals.items.empty()) throw ValidationError("mean_avg_wql: no items");
    double s = 0.0;
    for (const auto& ts : actuals.items) {
        const auto it = std::find_if(forecasts.begin(), forecasts.end(),
                                     [&](const QuantileForecast& f) { return f.item_id() == ts.item_id; });
        if (it == forecasts.end()) throw ValidationError("no forecast for item '" + ts.item_id + "'");
        s += forecast_avg_wql(ts.values, *it);
    }
    return s / static_cast<double>(actuals.items.size());
}

EnsembleFit fit_ensemble(const std::vector<AlgorithmForecasts>& test_forecasts, const Dataset& test_actuals,
                         const std::vector<AlgorithmForecasts>& validation_forecasts,
                         const Dataset& validation_actuals, const Dataset& history,
                         const BasinHoppingSettings& settings) {
    EnsembleFit fit;
    fit.test_errors = compute_error_matrix(test_forecasts, test_actuals);
    const EnsembleObjective objective = [&](const EnsembleParams& p) {
        return mean_avg_wql(ensemble_forecast(select_members(fit.test_errors, p), validation_forecasts),
                            validation_actuals);
    };
    const auto bh = basin_hopping(objective, settings);
    fit.params = bh.best;
    fit.objective = bh.best_value;
    fit.assignment = select_members(fit.test_errors, fit.params);
    fit.forecasts = ensemble_forecast(fit.assignment, validation_forecasts);

    std::vector<MetricReport> reports;
    for (const auto& ts : validation_actuals.items) {
        const auto it = std::find_if(fit.forecasts.begin(), fit.forecasts.end(),
                                     [&](const QuantileForecast& f) { return f.item_id() == ts.item_id; });
        reports.push_back(evaluate_forecast(ts.values, *it, history.item(ts.item_id).values,
                                            validation_actuals.seasonality_m));
    }
    fit.validation = mean_report(reports);
    for (const auto& alg : validation_forecasts) {
        fit.single_model_avg_wql.emplace_back(alg.algorithm, mean_avg_wql(alg.items, validation_actuals));
    }
    fit.warning =
        "ensemble parameters were chosen by their validation-window score, which is also the reported score; "
        "it is optimistic";
    return fit;
}

nlohmann::json to_json(const EnsembleParams& p) {
    return {{"p_local", p.p_local}, {"p_global", p.p_global}, {"p_comb", p.p_comb}};
}

EnsembleParams ensemble_params_from_json(const nlohmann::json& j) {
    EnsembleParams p{j.at("p_local").get<double>(), j.at("p_global").get<double>(), j.at("p_comb").get<double>()};
    p.validate();
    return p;
}

nlohmann::json to_json(const EnsembleAssignment& a) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& item : a) {
        out.push_back({{"item_id", item.item_id},
                       {"mode", item.mode == EnsembleMode::Local ? "local" : "global"},
                       {"members", item.members}});
    }
    return out;
}

nlohmann::json to_json(const EnsembleFit& fit) {
    nlohmann::json singles = nlohmann::json::object();
    for (const auto& [name, v] : fit.single_model_avg_wql) singles[name] = v;
    nlohmann::json report = nlohmann::json::object();
    const auto values = fit.validation.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
        report[MetricReport::field_names()[i]] = std::isfinite(values[i]) ? nlohmann::json(values[i]) : nullptr;
    }
    return {{"params", to_json(fit.params)},
            {"objective_avg_wql", fit.objective},
            {"assignment", to_json(fit.assignment)},
            {"validation_metrics", report},
            {"single_model_avg_wql", singles},
            {"warning", fit.warning}};
}

}  // namespace autoens
