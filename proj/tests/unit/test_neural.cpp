#include <doctest.h>

#include "autoens/core/error.hpp"
#include "autoens/core/synthetic.hpp"
#include "autoens/neural/losses.hpp"
#include "autoens/neural/lstm.hpp"
#include "autoens/neural/neural_model.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace autoens;

namespace {

// |a - n| relative to the larger magnitude; gradients below 1e-6 in both are compared absolutely.
double rel_error(double analytic, double numeric) {
    return std::fabs(analytic - numeric) / std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double sd) {
    std::normal_distribution<double> g(0.0, sd);
    Eigen::VectorXd v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

// Worst relative error of the analytic window gradient against central differences over all parameters.
double worst_window_gradient_error(NeuralModel m, const TrainingWindow& w) {
    std::vector<double> grad(m.params.size(), 0.0);
    (void)window_loss(m, w, &grad);
    const double h = 1e-4;
    double worst = 0.0;
    for (std::size_t j = 0; j < m.params.size(); ++j) {
        const double saved = m.params[j];
        m.params[j] = saved + h;
        const double up = window_loss(m, w, nullptr);
        m.params[j] = saved - h;
        const double down = window_loss(m, w, nullptr);
        m.params[j] = saved;
        worst = std::max(worst, rel_error(grad[j], (up - down) / (2 * h)));
    }
    return worst;
}

Dataset constant_dataset(double c, int items, int length, int horizon) {
    Dataset d;
    d.horizon_k = horizon;
    d.seasonality_m = 7;
    for (int i = 0; i < items; ++i) {
        TimeSeries ts;
        ts.item_id = "c" + std::to_string(i);
        ts.values.assign(static_cast<std::size_t>(length), c);
        d.items.push_back(ts);
    }
    return d;
}

Dataset seasonal_dataset(std::uint64_t seed, int items = 6) {
    SyntheticSpec spec;
    spec.n_items = items;
    spec.n_steps = 80;
    spec.horizon_k = 7;
    spec.seasonality_m = 7;
    spec.level = 20.0;
    spec.seasonal_amplitude = 5.0;
    spec.noise_sd = 1.0;
    spec.item_heterogeneity = 0.3;
    return generate_synthetic(spec, seed);
}

NeuralHyperparams small_hp() {
    NeuralHyperparams hp;
    hp.hidden_size = 8;
    hp.learning_rate = 0.05;
    hp.batch_size = 8;
    return hp;
}

}  // namespace

TEST_CASE("lstm cell: saturated gates keep the cell state") {
    LstmCellParams p(2, 3);
    p.b.segment(0, 3).setConstant(50.0);   // forget gate open
    p.b.segment(3, 3).setConstant(-50.0);  // input gate shut
    LstmState s{Eigen::VectorXd::Constant(3, 0.2), Eigen::Vector3d(0.5, -1.0, 2.0)};
    const auto next = lstm_cell_step(Eigen::Vector2d(1.0, -2.0), s, p);
    CHECK((next.c - s.c).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("lstm cell: zero parameters give zero state") {
    LstmCellParams p(3, 4);
    LstmState s{Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4)};
    const auto next = lstm_cell_step(Eigen::Vector3d(1, 2, 3), s, p);
    CHECK(next.c.norm() == 0.0);
    CHECK(next.h.norm() == 0.0);
    CHECK_THROWS_AS((void)lstm_cell_step(Eigen::Vector2d(1, 2), s, p), ValidationError);
}

TEST_CASE("lstm cell: analytic gradients of |h'|^2 + |c'|^2 match finite differences") {
    std::mt19937_64 rng(101);
    double worst = 0.0;
    for (int instance = 0; instance < 25; ++instance) {
        const Eigen::Index in = 1 + static_cast<Eigen::Index>(rng() % 4);
        const Eigen::Index hid = 1 + static_cast<Eigen::Index>(rng() % 5);
        LstmCellParams p(in, hid);
        p.w = Eigen::Map<Eigen::MatrixXd>(random_vector(rng, p.w.size(), 0.7).data(), p.w.rows(), p.w.cols());
        p.b = random_vector(rng, p.b.size(), 0.5);
        Eigen::VectorXd x = random_vector(rng, in, 1.0);
        LstmState s{random_vector(rng, hid, 0.5), random_vector(rng, hid, 0.5)};

        auto objective = [&](const LstmCellParams& q, const Eigen::VectorXd& xx, const LstmState& st) {
            const auto n = lstm_cell_step(xx, st, q);
            return n.h.squaredNorm() + 0.5 * n.c.squaredNorm();
        };
        LstmCache cache;
        const auto next = lstm_cell_step(x, s, p, &cache);
        Eigen::MatrixXd dw = Eigen::MatrixXd::Zero(p.w.rows(), p.w.cols());
        Eigen::VectorXd db = Eigen::VectorXd::Zero(p.b.size());
        const auto back = lstm_cell_backward(cache, p.w, 2.0 * next.h, next.c, dw, db);

        const double h = 1e-4;
        auto numeric = [&](double& slot) {
            const double saved = slot;
            slot = saved + h;
            const double up = objective(p, x, s);
            slot = saved - h;
            const double down = objective(p, x, s);
            slot = saved;
            return (up - down) / (2 * h);
        };
        for (Eigen::Index i = 0; i < p.w.size(); ++i) worst = std::max(worst, rel_error(dw(i), numeric(p.w(i))));
        for (Eigen::Index i = 0; i < p.b.size(); ++i) worst = std::max(worst, rel_error(db(i), numeric(p.b(i))));
        for (Eigen::Index i = 0; i < x.size(); ++i) worst = std::max(worst, rel_error(back.dx(i), numeric(x(i))));
        for (Eigen::Index i = 0; i < hid; ++i) {
            worst = std::max(worst, rel_error(back.dh_prev(i), numeric(s.h(i))));
            worst = std::max(worst, rel_error(back.dc_prev(i), numeric(s.c(i))));
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("quantile loss: hand values") {
    CHECK(quantile_loss(3.0, 3.0, 0.3) == 0.0);
    CHECK(quantile_loss(10.0, 8.0, 0.9) == doctest::Approx(1.8));
    CHECK(quantile_loss(8.0, 10.0, 0.9) == doctest::Approx(0.2));
    CHECK_THROWS_AS((void)quantile_loss(1.0, 1.0, 0.0), ValidationError);
}

TEST_CASE("MQ-lite window gradient matches finite differences on random instances") {
    std::mt19937_64 rng(7);
    double worst = 0.0;
    for (int instance = 0; instance < 20; ++instance) {
        NeuralHyperparams hp;
        hp.hidden_size = 2 + static_cast<int>(rng() % 3);
        const int horizon = 2 + static_cast<int>(rng() % 2);
        hp.context_length = horizon + static_cast<int>(rng() % 4);
        const std::vector<double> taus{0.1, 0.5, 0.9};
        auto m = init_neural_model(NeuralKind::MqLite, hp, horizon, 5, rng(), taus);
        const auto noise = random_vector(rng, static_cast<Eigen::Index>(m.params.size()), 0.4);
        for (std::size_t j = 0; j < m.params.size(); ++j) m.params[j] += noise(static_cast<Eigen::Index>(j));
        const auto values = random_vector(rng, hp.context_length + horizon, 3.0);
        std::vector<double> window(values.begin(), values.end());
        worst = std::max(worst, worst_window_gradient_error(m, {window, rng() % 20}));
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("DeepAR-lite window gradient matches finite differences on random instances") {
    std::mt19937_64 rng(8);
    double worst = 0.0;
    for (int instance = 0; instance < 20; ++instance) {
        NeuralHyperparams hp;
        hp.hidden_size = 2 + static_cast<int>(rng() % 3);
        const int horizon = 2 + static_cast<int>(rng() % 2);
        hp.context_length = horizon + static_cast<int>(rng() % 3);
        auto m = init_neural_model(NeuralKind::DeepArLite, hp, horizon, 4, rng());
        const auto noise = random_vector(rng, static_cast<Eigen::Index>(m.params.size()), 0.4);
        for (std::size_t j = 0; j < m.params.size(); ++j) m.params[j] += noise(static_cast<Eigen::Index>(j));
        const auto values = random_vector(rng, hp.context_length + horizon, 3.0);
        std::vector<double> window(values.begin(), values.end());
        worst = std::max(worst, worst_window_gradient_error(m, {window, rng() % 20}));
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("hyperparameter validation and JSON") {
    NeuralHyperparams hp;
    hp.context_length = 3;
    CHECK_THROWS_AS(hp.validate(7), ValidationError);  // below ceil(7 / 2)
    hp.context_length = 4;
    CHECK_NOTHROW(hp.validate(7));
    hp.context_length = 29;
    CHECK_THROWS_AS(hp.validate(7), ValidationError);
    hp.context_length = 28;
    hp.learning_rate = 0.0123;
    const auto back = neural_hyperparams_from_json(to_json(hp));
    CHECK(to_json(back) == to_json(hp));
    CHECK_THROWS_AS((void)neural_hyperparams_from_json({{"dropout", 0.1}}), ValidationError);
}

TEST_CASE("training rejects items shorter than context + horizon") {
    auto d = constant_dataset(3.0, 2, 11, 7);
    d.items[1].values.resize(10);
    NeuralHyperparams hp = small_hp();
    hp.context_length = 4;
    CHECK_THROWS_WITH_AS((void)train_mq_lite(d, hp, 1, 1), doctest::Contains("'c1'"), ValidationError);
}

TEST_CASE("MQ-lite: more epochs do not increase training loss") {
    const auto d = seasonal_dataset(3);
    const auto hp = small_hp();
    const auto one = train_mq_lite(d, hp, 1, 5);
    const auto five = train_mq_lite(d, hp, 5, 5);
    CHECK(five.epoch_losses.back() <= 1.05 * one.epoch_losses.back());
}

TEST_CASE("MQ-lite: constant data converges to the constant") {
    const auto d = constant_dataset(40.0, 4, 30, 5);
    auto hp = small_hp();
    hp.learning_rate = 0.05;
    const auto m = train_mq_lite(d, hp, 200, 2);
    const auto f = forecast_neural(m, d.items[0], std::vector<double>{0.1, 0.5, 0.9}, 1, 0);
    for (std::size_t q = 0; q < 3; ++q) {
        for (std::size_t k = 0; k < 5; ++k) CHECK(std::fabs(f.at(q, k) - 40.0) <= 0.05 * 40.0);
    }
}

TEST_CASE("training is deterministic and resuming matches an uninterrupted run") {
    const auto d = seasonal_dataset(4, 4);
    const auto hp = small_hp();
    for (NeuralKind kind : {NeuralKind::MqLite, NeuralKind::DeepArLite}) {
        const auto a = train_neural(kind, d, hp, 4, 9);
        const auto b = train_neural(kind, d, hp, 4, 9);
        CHECK(a.params == b.params);
        CHECK(a.epoch_losses == b.epoch_losses);

        const auto part = train_neural(kind, d, hp, 1, 9);
        const auto path = std::filesystem::temp_directory_path() / "autoens_resume.ckpt";
        save_checkpoint(part, path);
        const auto loaded = load_checkpoint(path);
        CHECK(loaded.params == part.params);
        CHECK(std::filesystem::exists(path.string() + ".json"));
        const auto resumed = train_neural(kind, d, hp, 4, 9, &loaded);
        CHECK(resumed.params == a.params);
        CHECK(resumed.epochs_done == 4);
        CHECK(resumed.epoch_losses == a.epoch_losses);
        std::filesystem::remove(path);
        std::filesystem::remove(path.string() + ".json");

        auto other = hp;
        other.learning_rate *= 2;
        CHECK_THROWS_AS((void)train_neural(kind, d, other, 4, 9, &part), ValidationError);
    }
}

TEST_CASE("checkpoint with an unknown version is rejected") {
    const auto path = std::filesystem::temp_directory_path() / "autoens_bad.ckpt";
    {
        std::ofstream out(path, std::ios::binary);
        const std::uint32_t v = 99;
        out.write("AENM", 4);
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    CHECK_THROWS_WITH_AS((void)load_checkpoint(path), doctest::Contains("version 99"), ValidationError);
    std::filesystem::remove(path);
}

TEST_CASE("forecast_neural: shapes, monotone quantiles and determinism") {
    const auto d = seasonal_dataset(5, 4);
    const auto hp = small_hp();
    const auto mq = train_mq_lite(d, hp, 2, 1);
    const auto single = forecast_neural(mq, d.items[0], std::vector<double>{0.5}, 1, 0);
    CHECK(single.num_quantiles() == 1);
    CHECK(single.horizon() == 7);

    const std::vector<double> taus{0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95};
    const auto da = train_deepar_lite(d, hp, 2, 1);
    for (const auto* m : {&mq, &da}) {
        const auto f = forecast_neural(*m, d, taus, 50, 3);
        const auto g = forecast_neural(*m, d, taus, 50, 3);
        REQUIRE(f.size() == d.size());
        for (std::size_t i = 0; i < f.size(); ++i) {
            CHECK(f[i].is_monotone());
            CHECK(f[i] == g[i]);
        }
    }
}

TEST_CASE("DeepAR-lite: zero sigma collapses quantiles onto the mean path") {
    const auto d = seasonal_dataset(6, 3);
    auto m = train_deepar_lite(d, small_hp(), 1, 1);
    const std::size_t bsig = m.params.size() - 1;
    const std::size_t hidden = static_cast<std::size_t>(m.hp.hidden_size);
    for (std::size_t j = bsig - hidden; j < bsig; ++j) m.params[j] = 0.0;
    m.params[bsig] = -1e9;
    m.sigma_floor = 0.0;
    const auto f = forecast_neural(m, d.items[0], std::vector<double>{0.1, 0.5, 0.9}, 20, 4);
    for (std::size_t k = 0; k < 7; ++k) {
        CHECK(f.at(0, k) == f.at(1, k));
        CHECK(f.at(2, k) == f.at(1, k));
    }
}

TEST_CASE("DeepAR-lite: constant series median and shrinking sigma on noiseless data") {
    const auto d = constant_dataset(12.0, 4, 30, 5);
    auto hp = small_hp();
    hp.learning_rate = 0.01;
    const auto m = train_deepar_lite(d, hp, 1000, 3);
    const auto f = forecast_neural(m, d.items[1], std::vector<double>{0.5}, 200, 1);
    for (std::size_t k = 0; k < 5; ++k) CHECK(std::fabs(f.at(0, k) - 12.0) <= 0.05 * 12.0);
    // Spread of the predictive distribution falls as the NLL is minimized.
    const auto early = train_deepar_lite(d, hp, 1, 3);
    const std::vector<double> band{0.1, 0.9};
    const auto fe = forecast_neural(early, d.items[1], band, 200, 1);
    const auto fl = forecast_neural(m, d.items[1], band, 200, 1);
    CHECK(fl.at(1, 0) - fl.at(0, 0) < fe.at(1, 0) - fe.at(0, 0));
    CHECK(m.epoch_losses.back() < m.epoch_losses.front());
}

TEST_CASE("global model forecasts a held-out related item") {
    const auto d = seasonal_dataset(7, 7);
    Dataset train = d;
    const TimeSeries held_out = train.items.back();
    train.items.pop_back();
    auto hp = small_hp();
    hp.context_length = 14;
    const auto m = train_mq_lite(train, hp, 30, 2);
    const auto f = forecast_neural(m, held_out, std::vector<double>{0.5}, 1, 0);
    for (std::size_t k = 0; k < 7; ++k) {
        CHECK(std::isfinite(f.at(0, k)));
        CHECK(f.at(0, k) > 0.0);
    }
}
