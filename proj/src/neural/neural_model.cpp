#include "autoens/neural/neural_model.hpp"

#include "autoens/core/error.hpp"
#include "autoens/core/random.hpp"
#include "autoens/metrics/metrics.hpp"
#include "autoens/neural/losses.hpp"
#include "autoens/neural/lstm.hpp"
#include "layout.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace autoens {

using detail::DeepArLayout;
using detail::MqLayout;

namespace {

constexpr char kMagic[4] = {'A', 'E', 'N', 'M'};
constexpr std::uint32_t kCheckpointVersion = 1;

void fill_normal(std::vector<double>& p, const detail::Block& b, double sd, Rng& rng) {
    std::normal_distribution<double> g(0.0, sd);
    for (std::size_t i = 0; i < b.size(); ++i) p[b.offset + i] = g(rng);
}

void check_lengths(const Dataset& data, std::size_t need) {
    for (const auto& ts : data.items) {
        if (ts.size() < need) {
            throw ValidationError("item '" + ts.item_id + "' has length " + std::to_string(ts.size()) +
                                  " < context + horizon = " + std::to_string(need));
        }
    }
}

void clip_norm(std::vector<double>& g, double cap) {
    if (cap <= 0.0) return;
    double sq = 0.0;
    for (double v : g) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > cap) {
        for (double& v : g) v *= cap / norm;
    }
}

}  // namespace

std::string_view to_string(NeuralKind kind) {
    return kind == NeuralKind::MqLite ? "mq_lite" : "deepar_lite";
}

NeuralKind neural_kind_from_string(std::string_view name) {
    if (name == "mq_lite") return NeuralKind::MqLite;
    if (name == "deepar_lite") return NeuralKind::DeepArLite;
    throw ValidationError("unknown neural model '" + std::string(name) + "' (expected mq_lite or deepar_lite)");
}

void NeuralHyperparams::validate(int horizon) const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ValidationError("learning_rate must be positive");
    }
    if (epochs < 1 || hidden_size < 1 || batch_size < 1 || windows_per_item < 1) {
        throw ValidationError("epochs, hidden_size, batch_size and windows_per_item must be positive");
    }
    if (grad_clip < 0.0) throw ValidationError("grad_clip must be >= 0");
    const int c = context_for(horizon);
    const int lo = (horizon + 1) / 2;
    if (c < std::max(lo, 1) || c > 4 * horizon) {
        throw ValidationError("context_length " + std::to_string(c) + " outside [" + std::to_string(lo) + ", " +
                              std::to_string(4 * horizon) + "] for horizon " + std::to_string(horizon));
    }
}

nlohmann::json to_json(const NeuralHyperparams& hp) {
    return {{"learning_rate", hp.learning_rate}, {"context_length", hp.context_length},
            {"epochs", hp.epochs},               {"hidden_size", hp.hidden_size},
            {"batch_size", hp.batch_size},       {"windows_per_item", hp.windows_per_item},
            {"grad_clip", hp.grad_clip}};
}

NeuralHyperparams neural_hyperparams_from_json(const nlohmann::json& j, NeuralHyperparams base) {
    for (const auto& [key, value] : j.items()) {
        if (key == "learning_rate") base.learning_rate = value.get<double>();
        else if (key == "context_length") base.context_length = value.get<int>();
        else if (key == "epochs") base.epochs = value.get<int>();
        else if (key == "hidden_size") base.hidden_size = value.get<int>();
        else if (key == "batch_size") base.batch_size = value.get<int>();
        else if (key == "windows_per_item") base.windows_per_item = value.get<int>();
        else if (key == "grad_clip") base.grad_clip = value.get<double>();
        else throw ValidationError("unknown neural hyperparameter '" + key + "'");
    }
    return base;
}

std::size_t parameter_count(const NeuralModel& shape) {
    return shape.kind == NeuralKind::MqLite ? MqLayout(shape).total : DeepArLayout(shape).total;
}

NeuralModel init_neural_model(NeuralKind kind, const NeuralHyperparams& hp, int horizon, int seasonality,
                              std::uint64_t seed, std::span<const double> taus) {
    hp.validate(horizon);
    if (seasonality < 1) throw ValidationError("seasonality must be >= 1");
    NeuralModel m;
    m.kind = kind;
    m.hp = hp;
    m.seed = seed;
    m.horizon = horizon;
    m.seasonality = seasonality;
    if (kind == NeuralKind::MqLite) {
        const auto levels = taus.empty() ? default_quantiles() : std::vector<double>(taus.begin(), taus.end());
        check_taus(levels);
        m.taus = levels;
    }
    Rng rng(derive_seed({seed, 0x696e6974ULL}));
    const double h = hp.hidden_size;
    if (kind == NeuralKind::MqLite) {
        const MqLayout L(m);
        m.params.assign(L.total, 0.0);
        fill_normal(m.params, L.w1a, 1.0 / std::sqrt(2.0), rng);
        fill_normal(m.params, L.w1b, 1.0 / std::sqrt(2.0), rng);
        fill_normal(m.params, L.w2a, 1.0 / std::sqrt(2.0 * h), rng);
        fill_normal(m.params, L.w2b, 1.0 / std::sqrt(2.0 * h), rng);
        fill_normal(m.params, L.wg, 1.0 / std::sqrt(2.0 * h), rng);
        fill_normal(m.params, L.wl, 0.1 / std::sqrt(static_cast<double>(L.wl.cols)), rng);
    } else {
        const DeepArLayout L(m);
        m.params.assign(L.total, 0.0);
        fill_normal(m.params, L.w, 1.0 / std::sqrt(detail::kRecurrentInputs + h), rng);
        for (int i = 0; i < hp.hidden_size; ++i) m.params[L.b.offset + static_cast<std::size_t>(i)] = 1.0;
        fill_normal(m.params, L.wmu, 1.0 / std::sqrt(h), rng);
        fill_normal(m.params, L.wsig, 0.1 / std::sqrt(h), rng);
    }
    return m;
}

double window_loss(const NeuralModel& model, const TrainingWindow& window, std::vector<double>* grad) {
    const auto need = static_cast<std::size_t>(model.context() + model.horizon);
    if (window.values.size() != need) {
        throw ValidationError("window length " + std::to_string(window.values.size()) + " != context + horizon = " +
                              std::to_string(need));
    }
    if (grad && grad->size() != model.params.size()) throw ValidationError("gradient buffer size mismatch");
    return model.kind == NeuralKind::MqLite ? detail::mq_window_loss(model, window, grad)
                                            : detail::deepar_window_loss(model, window, grad);
}

NeuralModel train_neural(NeuralKind kind, const Dataset& train, const NeuralHyperparams& hp, int total_epochs,
                         std::uint64_t seed, const NeuralModel* resume) {
    if (total_epochs < 0) throw ValidationError("total_epochs must be >= 0");
    NeuralModel model;
    if (resume) {
        if (resume->kind != kind || resume->seed != seed || to_json(resume->hp) != to_json(hp) ||
            resume->horizon != train.horizon_k) {
            throw ValidationError("checkpoint does not match the requested model, seed or hyperparameters");
        }
        if (resume->epochs_done > total_epochs) {
            throw ValidationError("checkpoint already has " + std::to_string(resume->epochs_done) + " epochs");
        }
        model = *resume;
    } else {
        model = init_neural_model(kind, hp, train.horizon_k, train.seasonality_m, seed);
    }
    const auto length = static_cast<std::size_t>(model.context() + model.horizon);
    check_lengths(train, length);
    if (train.items.empty()) throw ValidationError("training dataset has no items");

    struct Slot {
        std::size_t item;
        std::size_t start;
    };
    std::vector<double> grad(model.params.size());
    for (int epoch = model.epochs_done; epoch < total_epochs; ++epoch) {
        Rng rng(derive_seed({seed, static_cast<std::uint64_t>(epoch), 0x65706f6368ULL}));
        std::vector<Slot> slots;
        for (std::size_t i = 0; i < train.items.size(); ++i) {
            std::uniform_int_distribution<std::size_t> pick(0, train.items[i].size() - length);
            for (int w = 0; w < hp.windows_per_item; ++w) slots.push_back({i, pick(rng)});
        }
        std::shuffle(slots.begin(), slots.end(), rng);

        double epoch_loss = 0.0;
        const auto batch = static_cast<std::size_t>(hp.batch_size);
        for (std::size_t first = 0; first < slots.size(); first += batch) {
            const std::size_t last = std::min(slots.size(), first + batch);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t s = first; s < last; ++s) {
                const auto& values = train.items[slots[s].item].values;
                const TrainingWindow w{std::span<const double>(values).subspan(slots[s].start, length),
                                       slots[s].start};
                epoch_loss += window_loss(model, w, &grad);
            }
            const double inv = 1.0 / static_cast<double>(last - first);
            for (double& v : grad) v *= inv;
            clip_norm(grad, hp.grad_clip);
            for (std::size_t j = 0; j < grad.size(); ++j) model.params[j] -= hp.learning_rate * grad[j];
        }
        model.epoch_losses.push_back(epoch_loss / static_cast<double>(slots.size()));
        model.epochs_done = epoch + 1;
    }
    return model;
}

QuantileForecast forecast_neural(const NeuralModel& model, const TimeSeries& series, std::span<const double> taus,
                                 int n_samples, std::uint64_t seed) {
    check_taus(taus);
    const int C = model.context();
    const int K = model.horizon;
    if (series.size() < static_cast<std::size_t>(C)) {
        throw ValidationError("item '" + series.item_id + "' is shorter than the context length " +
                              std::to_string(C));
    }
    const std::size_t n = series.size();
    const auto context = std::span<const double>(series.values).subspan(n - static_cast<std::size_t>(C));

    if (model.kind == NeuralKind::MqLite) {
        Eigen::MatrixXd raw = detail::mq_predict(model, context, n);
        for (Eigen::Index k = 0; k < raw.cols(); ++k) std::sort(raw.col(k).begin(), raw.col(k).end());
        const auto& levels = model.taus;
        QuantileForecast f(series.item_id, {taus.begin(), taus.end()}, static_cast<std::size_t>(K));
        for (std::size_t q = 0; q < taus.size(); ++q) {
            const double tau = taus[q];
            const auto upper = std::lower_bound(levels.begin(), levels.end(), tau);
            for (int k = 0; k < K; ++k) {
                double v;
                if (upper == levels.begin()) {
                    v = raw(0, k);
                } else if (upper == levels.end()) {
                    v = raw(raw.rows() - 1, k);
                } else {
                    const auto hi = upper - levels.begin();
                    const double w = (tau - levels[static_cast<std::size_t>(hi - 1)]) /
                                     (levels[static_cast<std::size_t>(hi)] - levels[static_cast<std::size_t>(hi - 1)]);
                    v = (1.0 - w) * raw(hi - 1, k) + w * raw(hi, k);
                }
                f.at(q, static_cast<std::size_t>(k)) = v;
            }
        }
        f.repair_crossing();
        return f;
    }

    if (n_samples < 1) throw ValidationError("n_samples must be positive");
    const DeepArLayout L(model);
    const auto& p = model.params;
    const auto w = detail::view(p, L.w);
    const auto b = detail::vview(p, L.b);
    const auto wmu = detail::view(p, L.wmu);
    const auto wsig = detail::view(p, L.wsig);
    const double bmu = p[L.bmu.offset];
    const double bsig = p[L.bsig.offset];
    const double scale = detail::context_scale(context);
    const int T = C + K;

    LstmState conditioned{Eigen::VectorXd::Zero(L.hidden), Eigen::VectorXd::Zero(L.hidden)};
    for (int t = 0; t < C; ++t) {
        const double lagged = t >= 1 ? context[static_cast<std::size_t>(t - 1)] / scale : 0.0;
        const auto x = detail::recurrent_input(lagged, n - static_cast<std::size_t>(C - t), t, T, model.seasonality);
        conditioned = lstm_cell_step(x, conditioned, w, b);
    }
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<std::vector<double>> paths(static_cast<std::size_t>(n_samples), std::vector<double>(K));
    for (auto& path : paths) {
        LstmState state = conditioned;
        double lagged = context.back() / scale;
        for (int k = 0; k < K; ++k) {
            const auto x = detail::recurrent_input(lagged, n + static_cast<std::size_t>(k), C + k, T,
                                                   model.seasonality);
            state = lstm_cell_step(x, state, w, b);
            const double mu = (wmu * state.h)(0) + bmu;
            const double sigma = softplus((wsig * state.h)(0) + bsig) + model.sigma_floor;
            const double y = mu + sigma * g(rng);
            path[static_cast<std::size_t>(k)] = y * scale;
            lagged = y;
        }
    }
    auto f = forecast_from_samples(series.item_id, paths, taus);
    f.repair_crossing();
    return f;
}

std::vector<QuantileForecast> forecast_neural(const NeuralModel& model, const Dataset& data,
                                              std::span<const double> taus, int n_samples, std::uint64_t seed) {
    std::vector<QuantileForecast> out;
    out.reserve(data.items.size());
    for (std::size_t i = 0; i < data.items.size(); ++i) {
        out.push_back(forecast_neural(model, data.items[i], taus, n_samples, derive_seed({seed, i})));
    }
    return out;
}

nlohmann::json checkpoint_metadata(const NeuralModel& model) {
    return {{"format_version", kCheckpointVersion},
            {"kind", to_string(model.kind)},
            {"hyperparameters", to_json(model.hp)},
            {"seed", model.seed},
            {"horizon", model.horizon},
            {"seasonality", model.seasonality},
            {"taus", model.taus},
            {"sigma_floor", model.sigma_floor},
            {"epochs_done", model.epochs_done},
            {"parameter_count", model.params.size()},
            {"final_train_loss", model.epoch_losses.empty() ? nlohmann::json(nullptr)
                                                            : nlohmann::json(model.epoch_losses.back())}};
}

void save_checkpoint(const NeuralModel& model, const std::filesystem::path& path) {
    const std::string meta = checkpoint_metadata(model).dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    const std::uint64_t meta_len = meta.size();
    const std::uint64_t n_params = model.params.size();
    const std::uint64_t n_losses = model.epoch_losses.size();
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&kCheckpointVersion), sizeof kCheckpointVersion);
    out.write(reinterpret_cast<const char*>(&meta_len), sizeof meta_len);
    out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    out.write(reinterpret_cast<const char*>(&n_params), sizeof n_params);
    out.write(reinterpret_cast<const char*>(model.params.data()), static_cast<std::streamsize>(n_params * 8));
    out.write(reinterpret_cast<const char*>(&n_losses), sizeof n_losses);
    out.write(reinterpret_cast<const char*>(model.epoch_losses.data()), static_cast<std::streamsize>(n_losses * 8));
    if (!out) throw Error("failed writing checkpoint " + path.string());

    std::ofstream side(path.string() + ".json");
    side << checkpoint_metadata(model).dump(2) << '\n';
}

NeuralModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint " + path.string());
    char magic[4];
    std::uint32_t version = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw ValidationError(path.string() + " is not a checkpoint");
    if (version != kCheckpointVersion) {
        throw ValidationError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                              std::to_string(kCheckpointVersion) + ")");
    }
    std::uint64_t meta_len = 0;
    in.read(reinterpret_cast<char*>(&meta_len), sizeof meta_len);
    std::string meta(meta_len, '\0');
    in.read(meta.data(), static_cast<std::streamsize>(meta_len));
    const auto j = nlohmann::json::parse(meta);

    NeuralModel m;
    m.kind = neural_kind_from_string(j.at("kind").get<std::string>());
    m.hp = neural_hyperparams_from_json(j.at("hyperparameters"));
    m.seed = j.at("seed").get<std::uint64_t>();
    m.horizon = j.at("horizon").get<int>();
    m.seasonality = j.at("seasonality").get<int>();
    m.taus = j.at("taus").get<std::vector<double>>();
    m.sigma_floor = j.at("sigma_floor").get<double>();
    m.epochs_done = j.at("epochs_done").get<int>();

    std::uint64_t n_params = 0;
    in.read(reinterpret_cast<char*>(&n_params), sizeof n_params);
    if (n_params != parameter_count(m)) throw ValidationError("checkpoint parameter count does not match its shape");
    m.params.resize(n_params);
    in.read(reinterpret_cast<char*>(m.params.data()), static_cast<std::streamsize>(n_params * 8));
    std::uint64_t n_losses = 0;
    in.read(reinterpret_cast<char*>(&n_losses), sizeof n_losses);
    m.epoch_losses.resize(n_losses);
    in.read(reinterpret_cast<char*>(m.epoch_losses.data()), static_cast<std::streamsize>(n_losses * 8));
    if (!in) throw ValidationError("truncated checkpoint " + path.string());
    return m;
}

}  // namespace autoens
