#pragma once

#include "autoens/core/time_series.hpp"
#include "autoens/models/quantile_forecast.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace autoens {

enum class NeuralKind { MqLite, DeepArLite };

std::string_view to_string(NeuralKind kind);
NeuralKind neural_kind_from_string(std::string_view name);

struct NeuralHyperparams {
    double learning_rate = 1e-3;
    int context_length = 0;  // 0 means "equal to the horizon"
    int epochs = 20;         // default training budget when no resource is given
    int hidden_size = 32;
    int batch_size = 16;
    int windows_per_item = 4;  // training windows drawn per item and epoch
    double grad_clip = 5.0;    // global gradient norm cap; 0 disables

    [[nodiscard]] int context_for(int horizon) const { return context_length > 0 ? context_length : horizon; }

    /// Positive sizes and rate; context within [ceil(k/2), 4k] once resolved.
    void validate(int horizon) const;
};

nlohmann::json to_json(const NeuralHyperparams& hp);
NeuralHyperparams neural_hyperparams_from_json(const nlohmann::json& j, NeuralHyperparams base = {});

/// Parameters of either stand-in live in one flat buffer; the layout is a
/// function of (kind, hidden size, context, horizon, number of quantiles).
struct NeuralModel {
    NeuralKind kind = NeuralKind::MqLite;
    NeuralHyperparams hp;
    std::uint64_t seed = 0;
    int horizon = 1;
    int seasonality = 1;
    std::vector<double> taus;  // quantile levels emitted by MQ-lite; empty for DeepAR-lite
    int epochs_done = 0;
    std::vector<double> epoch_losses;
    std::vector<double> params;
    double sigma_floor = 1e-3;  // DeepAR-lite: sigma = softplus(a) + floor

    [[nodiscard]] int context() const { return hp.context_for(horizon); }
};

/// Number of parameters implied by a model's shape fields.
std::size_t parameter_count(const NeuralModel& shape);

/// Model with freshly initialized parameters and no training.
NeuralModel init_neural_model(NeuralKind kind, const NeuralHyperparams& hp, int horizon, int seasonality,
                              std::uint64_t seed, std::span<const double> taus = {});

/// A window of context + horizon consecutive values starting at `start` in its series.
struct TrainingWindow {
    std::span<const double> values;
    std::size_t start = 0;
};

/// Loss of one window and its gradient with respect to model.params
/// (accumulated into `grad` when non-null, same length as params).
double window_loss(const NeuralModel& model, const TrainingWindow& window, std::vector<double>* grad);

/// Trains until `total_epochs` epochs have been run. When `resume` is given,
/// training continues from its parameters and epoch count; window order
/// depends only on (seed, epoch), so resuming matches an uninterrupted run.
NeuralModel train_neural(NeuralKind kind, const Dataset& train, const NeuralHyperparams& hp, int total_epochs,
                         std::uint64_t seed, const NeuralModel* resume = nullptr);

inline NeuralModel train_mq_lite(const Dataset& train, const NeuralHyperparams& hp, int total_epochs,
                                 std::uint64_t seed, const NeuralModel* resume = nullptr) {
    return train_neural(NeuralKind::MqLite, train, hp, total_epochs, seed, resume);
}

inline NeuralModel train_deepar_lite(const Dataset& train, const NeuralHyperparams& hp, int total_epochs,
                                     std::uint64_t seed, const NeuralModel* resume = nullptr) {
    return train_neural(NeuralKind::DeepArLite, train, hp, total_epochs, seed, resume);
}

/// Forecast of the `horizon` steps after the end of `series`.
/// MQ-lite reads quantiles directly (linear interpolation between trained
/// levels, clamped at the ends); DeepAR-lite draws n_samples ancestral paths.
QuantileForecast forecast_neural(const NeuralModel& model, const TimeSeries& series, std::span<const double> taus,
                                 int n_samples, std::uint64_t seed);

std::vector<QuantileForecast> forecast_neural(const NeuralModel& model, const Dataset& data,
                                              std::span<const double> taus, int n_samples, std::uint64_t seed);

/// Versioned binary checkpoint; `save_checkpoint` also writes `<path>.json` metadata.
void save_checkpoint(const NeuralModel& model, const std::filesystem::path& path);
NeuralModel load_checkpoint(const std::filesystem::path& path);
nlohmann::json checkpoint_metadata(const NeuralModel& model);

}  // namespace autoens
