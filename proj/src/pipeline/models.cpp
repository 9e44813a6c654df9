#include "autoens/pipeline/models.hpp"

#include "autoens/core/error.hpp"
#include "autoens/core/random.hpp"
#include "autoens/models/ets.hpp"
#include "autoens/models/prophet.hpp"

#include <map>
#include <memory>
#include <mutex>

namespace autoens {

std::string_view to_string(Algorithm a) {
    switch (a) {
        case Algorithm::Arima: return "arima";
        case Algorithm::Ets: return "ets";
        case Algorithm::Npts: return "npts";
        case Algorithm::Prophet: return "prophet";
        case Algorithm::MqLite: return "mq_lite";
        case Algorithm::DeepArLite: return "deepar_lite";
    }
    return "arima";
}

Algorithm algorithm_from_string(std::string_view name) {
    for (Algorithm a : all_algorithms()) {
        if (to_string(a) == name) return a;
    }
    throw ValidationError("unknown algorithm '" + std::string(name) + "'");
}

const std::vector<Algorithm>& all_algorithms() {
    static const std::vector<Algorithm> all{Algorithm::Arima,   Algorithm::Ets,    Algorithm::Npts,
                                            Algorithm::Prophet, Algorithm::MqLite, Algorithm::DeepArLite};
    return all;
}

bool is_neural(Algorithm a) { return a == Algorithm::MqLite || a == Algorithm::DeepArLite; }

NeuralKind neural_kind(Algorithm a) {
    if (a == Algorithm::MqLite) return NeuralKind::MqLite;
    if (a == Algorithm::DeepArLite) return NeuralKind::DeepArLite;
    throw ValidationError(std::string(to_string(a)) + " is not a neural algorithm");
}

void ModelSettings::validate() const {
    arima.validate();
    if (!(npts.lambda >= 0.0) || npts.n_samples < 1) throw ValidationError("npts: lambda >= 0 and n_samples >= 1");
    if (prophet_changepoints < 0 || prophet_fourier_order < 0 || prophet_samples < 1) {
        throw ValidationError("prophet settings must be non-negative with at least one sample");
    }
    if (final_epochs < 1) throw ValidationError("final_epochs must be >= 1");
    if (neural_samples < 1) throw ValidationError("neural_samples must be >= 1");
    if (algorithms.empty()) throw ValidationError("at least one algorithm is required");
}

nlohmann::json to_json(const ModelSettings& s) {
    nlohmann::json algs = nlohmann::json::array();
    for (Algorithm a : s.algorithms) algs.push_back(std::string(to_string(a)));
    return {{"arima", {{"p", s.arima.p}, {"d", s.arima.d}, {"q", s.arima.q}}},
            {"npts", {{"lambda", s.npts.lambda}, {"n_samples", s.npts.n_samples}}},
            {"prophet",
             {{"n_changepoints", s.prophet_changepoints},
              {"fourier_order", s.prophet_fourier_order},
              {"n_samples", s.prophet_samples}}},
            {"neural", to_json(s.neural)},
            {"final_epochs", s.final_epochs},
            {"neural_samples", s.neural_samples},
            {"algorithms", algs}};
}

ModelSettings model_settings_from_json(const nlohmann::json& j) {
    ModelSettings s;
    for (const auto& [key, v] : j.items()) {
        if (key == "arima") {
            s.arima.p = v.value("p", s.arima.p);
            s.arima.d = v.value("d", s.arima.d);
            s.arima.q = v.value("q", s.arima.q);
        } else if (key == "npts") {
            s.npts.lambda = v.value("lambda", s.npts.lambda);
            s.npts.n_samples = v.value("n_samples", s.npts.n_samples);
        } else if (key == "prophet") {
            s.prophet_changepoints = v.value("n_changepoints", s.prophet_changepoints);
            s.prophet_fourier_order = v.value("fourier_order", s.prophet_fourier_order);
            s.prophet_samples = v.value("n_samples", s.prophet_samples);
        } else if (key == "neural") {
            s.neural = neural_hyperparams_from_json(v);
        } else if (key == "final_epochs") {
            s.final_epochs = v.get<int>();
        } else if (key == "neural_samples") {
            s.neural_samples = v.get<int>();
        } else if (key == "algorithms") {
            s.algorithms.clear();
            for (const auto& name : v) s.algorithms.push_back(algorithm_from_string(name.get<std::string>()));
        } else {
            throw ValidationError("unknown model setting '" + key + "'");
        }
    }
    s.validate();
    return s;
}

AlgorithmForecasts forecast_classical(Algorithm a, const Dataset& train, std::span<const double> taus,
                                      const ModelSettings& settings, std::uint64_t seed) {
    if (is_neural(a)) throw ValidationError("forecast_classical called with a neural algorithm");
    AlgorithmForecasts out{std::string(to_string(a)), {}};
    const auto horizon = static_cast<std::size_t>(train.horizon_k);
    for (std::size_t i = 0; i < train.items.size(); ++i) {
        const auto& ts = train.items[i];
        const std::uint64_t item_seed = derive_seed({seed, i});
        try {
            switch (a) {
                case Algorithm::Arima:
                    out.items.push_back(forecast_arima(fit_arima(ts.values, settings.arima), horizon, taus, ts.item_id));
                    break;
                case Algorithm::Ets:
                    out.items.push_back(fit_forecast_ets(ts.values, horizon, taus, std::nullopt, ts.item_id));
                    break;
                case Algorithm::Npts:
                    out.items.push_back(forecast_npts(ts.values, horizon, settings.npts, taus, item_seed, ts.item_id));
                    break;
                case Algorithm::Prophet: {
                    ProphetSpec spec;
                    spec.n_changepoints = settings.prophet_changepoints;
                    spec.fourier_order = settings.prophet_fourier_order;
                    spec.period = static_cast<double>(train.seasonality_m);
                    spec.n_samples = settings.prophet_samples;
                    out.items.push_back(fit_forecast_prophet(ts.values, spec, horizon, taus, item_seed, ts.item_id));
                    break;
                }
                default: break;
            }
        } catch (const Error& e) {
            throw Error(std::string(to_string(a)) + " failed on item '" + ts.item_id + "': " + e.what());
        }
    }
    return out;
}

AlgorithmForecasts forecast_neural_algorithm(Algorithm a, const Dataset& train, const NeuralHyperparams& hp,
                                             int epochs, std::span<const double> taus, const ModelSettings& settings,
                                             std::uint64_t seed) {
    const auto model = train_neural(neural_kind(a), train, hp, epochs, seed);
    return {std::string(to_string(a)),
            forecast_neural(model, train, taus, settings.neural_samples, derive_seed({seed, 1}))};
}

NeuralHyperparams apply_config(const NeuralHyperparams& base, const HyperparameterConfig& config) {
    NeuralHyperparams hp = base;
    hp.learning_rate = config.get("learning_rate");
    hp.context_length = config.get_int("context_length");
    return hp;
}

Objective neural_tuning_objective(NeuralKind kind, const Dataset& tune_train, const Dataset& tune_validation,
                                  const NeuralHyperparams& base, std::span<const double> taus, int n_samples,
                                  std::uint64_t seed) {
    struct Cache {
        std::mutex mutex;
        std::map<int, NeuralModel> models;
    };
    auto cache = std::make_shared<Cache>();
    std::vector<double> levels(taus.begin(), taus.end());
    return [=, &tune_train, &tune_validation](const TrialRequest& req) {
        const NeuralHyperparams hp = apply_config(base, req.config);
        const std::uint64_t config_seed = derive_seed({seed, static_cast<std::uint64_t>(req.config_id)});
        std::optional<NeuralModel> previous;
        if (req.previous_resource > 0) {
            std::lock_guard lock(cache->mutex);
            const auto it = cache->models.find(req.config_id);
            if (it != cache->models.end() && it->second.epochs_done == req.previous_resource) previous = it->second;
        }
        auto model = train_neural(kind, tune_train, hp, req.resource, config_seed, previous ? &*previous : nullptr);
        const auto forecasts = forecast_neural(model, tune_train, levels, n_samples, derive_seed({config_seed, 1}));
        const double loss = mean_avg_wql(forecasts, tune_validation);
        {
            std::lock_guard lock(cache->mutex);
            cache->models[req.config_id] = std::move(model);
        }
        return loss;
    };
}

NeuralTuning tune_neural(NeuralKind kind, const Dataset& tune_train, const Dataset& tune_validation,
                         const ModelSettings& settings, const TunerSettings& tuner, std::span<const double> taus,
                         std::uint64_t seed) {
    const auto space = neural_search_space(tune_train.horizon_k);
    const auto objective =
        neural_tuning_objective(kind, tune_train, tune_validation, settings.neural, taus, settings.neural_samples, seed);
    NeuralTuning out;
    out.result = run_tuning(space, tuner, objective);
    out.best = apply_config(settings.neural, out.result.best);

    HyperparameterConfig base_config;
    base_config.values = {{"learning_rate", settings.neural.learning_rate},
                          {"context_length", static_cast<double>(settings.neural.context_for(tune_train.horizon_k))}};
    base_config.integers = {"context_length"};
    TrialRequest default_request;
    default_request.config_id = -1;
    default_request.config = base_config;
    default_request.resource = settings.final_epochs;
    out.default_loss = objective(default_request);
    return out;
}

}  // namespace autoens
