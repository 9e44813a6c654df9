#pragma once

#include "autoens/core/time_series.hpp"
#include "autoens/ensemble/ensemble.hpp"
#include "autoens/hpo/tuner.hpp"
#include "autoens/models/arima.hpp"
#include "autoens/models/npts.hpp"
#include "autoens/neural/neural_model.hpp"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace autoens {

enum class Algorithm { Arima, Ets, Npts, Prophet, MqLite, DeepArLite };

std::string_view to_string(Algorithm a);
Algorithm algorithm_from_string(std::string_view name);
const std::vector<Algorithm>& all_algorithms();
bool is_neural(Algorithm a);
NeuralKind neural_kind(Algorithm a);

/// Defaults for every model family. Neural models that are not tuned use
/// `neural` as is; tuned ones override learning rate and context length.
struct ModelSettings {
    ArimaSpec arima;
    NptsSpec npts;
    int prophet_changepoints = 10;
    int prophet_fourier_order = 3;
    int prophet_samples = 200;
    NeuralHyperparams neural;
    int final_epochs = 27;  // training budget of the neural models outside tuning
    int neural_samples = 100;  // DeepAR-lite sample paths per forecast
    std::vector<Algorithm> algorithms = all_algorithms();

    void validate() const;
};

nlohmann::json to_json(const ModelSettings& s);
ModelSettings model_settings_from_json(const nlohmann::json& j);

/// Forecasts the horizon after the end of every item in `train`.
AlgorithmForecasts forecast_classical(Algorithm a, const Dataset& train, std::span<const double> taus,
                                      const ModelSettings& settings, std::uint64_t seed);

/// Trains a neural model on `train` for `epochs` and forecasts past every item.
AlgorithmForecasts forecast_neural_algorithm(Algorithm a, const Dataset& train, const NeuralHyperparams& hp,
                                             int epochs, std::span<const double> taus, const ModelSettings& settings,
                                             std::uint64_t seed);

/// Hyperparameters of `base` with the tuned learning rate and context length.
NeuralHyperparams apply_config(const NeuralHyperparams& base, const HyperparameterConfig& config);

/// Tuning objective: trains on `tune_train` for the requested epochs (resuming
/// the same configuration's earlier model) and returns the mean avg-wQL of its
/// forecasts on `tune_validation`. Safe to call concurrently.
Objective neural_tuning_objective(NeuralKind kind, const Dataset& tune_train, const Dataset& tune_validation,
                                  const NeuralHyperparams& base, std::span<const double> taus, int n_samples,
                                  std::uint64_t seed);

struct NeuralTuning {
    TuningResult result;
    NeuralHyperparams best;
    double default_loss = 0.0;  // base config at `default_epochs` on the same split
};

NeuralTuning tune_neural(NeuralKind kind, const Dataset& tune_train, const Dataset& tune_validation,
                         const ModelSettings& settings, const TunerSettings& tuner, std::span<const double> taus,
                         std::uint64_t seed);

}  // namespace autoens
