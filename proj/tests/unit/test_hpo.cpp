#include <doctest.h>

#include "autoens/core/error.hpp"
#include "autoens/hpo/gp.hpp"
#include "autoens/hpo/scheduler.hpp"
#include "autoens/hpo/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>

using namespace autoens;

namespace {

SearchSpace lr_space(double lo = 1e-4, double hi = 1e-1) {
    return SearchSpace{{{"learning_rate", DimensionKind::LogUniform, lo, hi}}};
}

// Textbook posterior with an explicit inverse, independent of the Cholesky path.
GpPrediction dense_oracle(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GpKernel& k,
                          const Eigen::VectorXd& at) {
    const Eigen::Index n = x.rows();
    const double mean = y.sum() / static_cast<double>(n);
    double var = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) var += (y(i) - mean) * (y(i) - mean);
    var /= static_cast<double>(n);
    const double sd = var > 0 ? std::sqrt(var) : 1.0;
    auto kern = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        double d2 = 0.0;
        for (Eigen::Index i = 0; i < a.size(); ++i) d2 += (a(i) - b(i)) * (a(i) - b(i));
        return k.signal_sd * k.signal_sd * std::exp(-d2 / (2 * k.length_scale * k.length_scale));
    };
    Eigen::MatrixXd cov(n, n);
    Eigen::VectorXd ks(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) cov(i, j) = kern(x.row(i), x.row(j));
        cov(i, i) += k.noise_sd * k.noise_sd;
        ks(i) = kern(x.row(i), at);
    }
    const Eigen::MatrixXd inv = cov.fullPivLu().inverse();
    const Eigen::VectorXd ys = (y.array() - mean) / sd;
    GpPrediction p;
    p.mean = mean + sd * (ks.transpose() * inv * ys)(0);
    p.variance = sd * sd * (k.signal_sd * k.signal_sd - (ks.transpose() * inv * ks)(0));
    return p;
}

// Objective keyed on config id that records every call.
struct Recorder {
    std::mutex mu;
    std::map<int, std::vector<std::pair<int, int>>> calls;  // config id -> (previous, resource)

    Objective wrap(std::function<double(const HyperparameterConfig&, int)> f) {
        return [this, f](const TrialRequest& r) {
            {
                std::lock_guard lock(mu);
                calls[r.config_id].emplace_back(r.previous_resource, r.resource);
            }
            return f(r.config, r.resource);
        };
    }
};

}  // namespace

TEST_CASE("sample_configuration") {
    Rng rng(1);
    SearchSpace pinned{{{"k", DimensionKind::Integer, 2, 2}}};
    for (int i = 0; i < 20; ++i) CHECK(sample_configuration(pinned, rng).get_int("k") == 2);

    const auto space = lr_space();
    std::vector<double> draws;
    for (int i = 0; i < 10000; ++i) {
        const double v = sample_configuration(space, rng).get("learning_rate");
        CHECK(v >= 1e-4);
        CHECK(v <= 1e-1);
        draws.push_back(v);
    }
    std::nth_element(draws.begin(), draws.begin() + 5000, draws.end());
    CHECK(draws[5000] >= 2.5e-3);
    CHECK(draws[5000] <= 4.5e-3);

    Rng a(5), b(5);
    CHECK(sample_configuration(neural_search_space(7), a).values ==
          sample_configuration(neural_search_space(7), b).values);
}

TEST_CASE("search space validation, unit mapping and JSON") {
    SearchSpace bad{{{"x", DimensionKind::Uniform, 2, 1}}};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    SearchSpace bad_log{{{"x", DimensionKind::LogUniform, 0, 1}}};
    CHECK_THROWS_AS(bad_log.validate(), ValidationError);

    const auto space = neural_search_space(7);
    CHECK(space.dimension("context_length").lo == 4);
    CHECK(space.dimension("context_length").hi == 28);
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        const auto c = sample_configuration(space, rng);
        check_in_bounds(space, c);
        const auto back = from_unit(space, to_unit(space, c));
        CHECK(back.get_int("context_length") == c.get_int("context_length"));
        CHECK(back.get("learning_rate") == doctest::Approx(c.get("learning_rate")).epsilon(1e-12));
    }
    const auto j = to_json(space);
    CHECK(to_json(search_space_from_json(j)) == j);
    HyperparameterConfig out;
    out.values = {{"learning_rate", 1.0}, {"context_length", 7}};
    CHECK_THROWS_WITH_AS(check_in_bounds(space, out), doctest::Contains("learning_rate"), ValidationError);
}

TEST_CASE("hyperband schedule for R = 81, eta = 3") {
    const auto brackets = hyperband_schedule(81, 3);
    REQUIRE(brackets.size() == 5);
    const auto& b4 = brackets.front();
    CHECK(b4.s == 4);
    CHECK(b4.n == 81);
    CHECK(b4.r == doctest::Approx(1.0));
    const std::vector<std::pair<int, double>> expected{{81, 1}, {27, 3}, {9, 9}, {3, 27}, {1, 81}};
    REQUIRE(b4.rungs.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(b4.rungs[i].first == expected[i].first);
        CHECK(b4.rungs[i].second == doctest::Approx(expected[i].second));
    }
    // Remaining brackets from n = ceil(5 * 3^s / (s + 1)), r = 81 * 3^-s.
    const std::vector<std::pair<int, double>> heads{{34, 3}, {15, 9}, {8, 27}, {5, 81}};
    for (std::size_t s = 0; s < heads.size(); ++s) {
        CHECK(brackets[s + 1].n == heads[s].first);
        CHECK(brackets[s + 1].r == doctest::Approx(heads[s].second));
    }
    for (const auto& b : brackets) {
        double used = 0.0;
        for (const auto& [n, r] : b.rungs) used += n * r;
        CHECK(used <= 405.0 * (1.0 + 3.0 / 405.0 * (b.s + 1)));
    }

    const auto one = hyperband_schedule(1, 3);
    REQUIRE(one.size() == 1);
    CHECK(one[0].s == 0);
    CHECK(one[0].n == 1);
    CHECK(one[0].r == 1.0);
}

TEST_CASE("top_k") {
    const std::vector<double> l{3, 1, 2};
    CHECK(top_k(l, 1) == std::vector<std::size_t>{1});
    CHECK(top_k(l, 3).size() == 3);
    CHECK(top_k(std::vector<double>{1, 1}, 1) == std::vector<std::size_t>{0});
    CHECK_THROWS_AS((void)top_k(l, -1), ValidationError);
    CHECK_THROWS_AS((void)top_k(l, 4), ValidationError);
}

TEST_CASE("hyperband run: survivors, resources and brute-force best") {
    TunerSettings s;
    s.strategy = Strategy::Hyperband;
    s.max_resource = 9;
    s.eta = 3;
    s.max_training_jobs = 1000;
    s.max_parallel_jobs = 3;
    s.seed = 4;
    Recorder rec;
    const auto result = run_hyperband(lr_space(), s, rec.wrap([](const HyperparameterConfig& c, int) {
        const double lr = c.get("learning_rate");
        return (lr - 0.01) * (lr - 0.01);
    }));
    // Brute force over the trial log.
    double best = INFINITY;
    for (const auto& t : result.trials) best = std::min(best, t.loss);
    CHECK(result.best_loss == best);

    // Rung sizes follow floor(n_i / eta) and resources strictly increase per config.
    const auto schedule = hyperband_schedule(9, 3);
    for (const auto& b : schedule) {
        for (int i = 0; i <= b.s; ++i) {
            const auto count = std::count_if(result.trials.begin(), result.trials.end(), [&](const TrialResult& t) {
                return t.config.bracket == b.s && t.config.rung == i;
            });
            CHECK(count == b.rungs[static_cast<std::size_t>(i)].first);
        }
    }
    for (const auto& [id, seq] : rec.calls) {
        for (std::size_t i = 0; i < seq.size(); ++i) {
            CHECK(seq[i].second > seq[i].first);
            if (i > 0) CHECK(seq[i].first == seq[i - 1].second);
        }
    }
    CHECK(result.latency_s <= result.cost_s + 1e-12);
}

TEST_CASE("hyperband truncation to the job budget") {
    TunerSettings s;
    s.max_resource = 27;
    s.max_training_jobs = 15;
    s.max_parallel_jobs = 5;
    const auto r = run_hyperband(neural_search_space(7), s, [](const TrialRequest& t) {
        return std::fabs(std::log10(t.config.get("learning_rate")) + 2.0) + 0.01 * t.resource;
    });
    std::set<int> configs;
    for (const auto& t : r.trials) configs.insert(t.config_id);
    CHECK(configs.size() == 15);
    // Bracket s = 3 gets 15 configs: rungs of 15, 5 and 1.
    CHECK(r.trials.size() == 21);
    CHECK(r.trials.back().resource == 9);
}

TEST_CASE("tuners: degenerate space and failing objectives") {
    SearchSpace pinned{{{"x", DimensionKind::Uniform, 0.5, 0.5}}};
    TunerSettings s;
    s.max_training_jobs = 4;
    s.max_parallel_jobs = 2;
    s.max_resource = 3;
    for (Strategy st : {Strategy::Hyperband, Strategy::Bayesian, Strategy::Random}) {
        s.strategy = st;
        const auto r = run_tuning(pinned, s, [](const TrialRequest& t) { return t.config.get("x"); });
        CHECK(r.best.get("x") == 0.5);
        CHECK_THROWS_WITH_AS((void)run_tuning(pinned, s, [](const TrialRequest&) -> double {
                                 throw std::runtime_error("boom");
                             }),
                             "no successful trial", Error);
    }
    // A failing trial is logged with infinite loss while others continue.
    s.strategy = Strategy::Random;
    const auto r = run_tuning(lr_space(), s, [](const TrialRequest& t) -> double {
        if (t.trial_id == 0) throw std::runtime_error("diverged");
        return t.config.get("learning_rate");
    });
    CHECK(r.trials[0].failed);
    CHECK(std::isinf(r.trials[0].loss));
    CHECK(r.trials[0].error == "diverged");
    CHECK(std::isfinite(r.best_loss));
}

TEST_CASE("bayesian: quadratic minimum found and bookkeeping") {
    SearchSpace space{{{"x", DimensionKind::Uniform, 0.0, 10.0}}};
    TunerSettings s;
    s.strategy = Strategy::Bayesian;
    s.max_training_jobs = 15;
    s.max_parallel_jobs = 1;
    s.seed = 11;
    const auto r = run_bayesian(space, s, [](const TrialRequest& t) {
        const double x = t.config.get("x");
        return (x - 6.3) * (x - 6.3);
    });
    CHECK(std::fabs(r.best.get("x") - 6.3) <= 1.0);
    double best = INFINITY;
    for (const auto& t : r.trials) best = std::min(best, t.loss);
    CHECK(r.best_loss == best);
    CHECK(r.trials.size() == 15);

    // Budget equal to the initial design: identical to random sampling with the same seed.
    s.max_training_jobs = 3;
    s.max_parallel_jobs = 3;
    auto f = [](const TrialRequest& t) { return t.config.get("x"); };
    const auto bo = run_bayesian(space, s, f);
    auto rs = s;
    rs.strategy = Strategy::Random;
    const auto rnd = run_random_search(space, rs, f);
    for (std::size_t i = 0; i < 3; ++i) CHECK(bo.trials[i].config.values == rnd.trials[i].config.values);
}

TEST_CASE("tuning is deterministic apart from timing") {
    TunerSettings s;
    s.max_training_jobs = 10;
    s.max_parallel_jobs = 3;
    s.seed = 21;
    for (Strategy st : {Strategy::Hyperband, Strategy::Bayesian, Strategy::Random}) {
        s.strategy = st;
        auto f = [](const TrialRequest& t) {
            return std::pow(std::log10(t.config.get("learning_rate")) + 2.3, 2) + 1.0 / t.resource;
        };
        const auto a = run_tuning(neural_search_space(5), s, f);
        const auto b = run_tuning(neural_search_space(5), s, f);
        REQUIRE(a.trials.size() == b.trials.size());
        for (std::size_t i = 0; i < a.trials.size(); ++i) {
            CHECK(a.trials[i].config.values == b.trials[i].config.values);
            CHECK(a.trials[i].loss == b.trials[i].loss);
            CHECK(a.trials[i].resource == b.trials[i].resource);
        }
    }
}

TEST_CASE("trial log CSV") {
    TrialResult t;
    t.trial_id = 3;
    t.config.values = {{"learning_rate", 0.25}, {"context_length", 7}};
    t.config.integers = {"context_length"};
    t.config.strategy = "hyperband";
    t.config.bracket = 2;
    t.config.rung = 1;
    t.resource = 9;
    t.loss = 0.5;
    t.wall_time_s = 1.5;
    std::ostringstream out;
    write_trial_log(out, {t});
    CHECK(out.str() == "trial_id,strategy,bracket,rung,config_json,resource,loss,wall_time_s\n"
                       "3,hyperband,2,1,\"{\"\"context_length\"\":7,\"\"learning_rate\"\":0.25}\",9,0.5,1.500000\n");
}

TEST_CASE("tuner settings JSON") {
    TunerSettings s;
    s.strategy = Strategy::Bayesian;
    s.seed = 99;
    CHECK(to_json(tuner_settings_from_json(to_json(s))) == to_json(s));
    CHECK_THROWS_AS((void)tuner_settings_from_json({{"max_parallel_jobs", 20}}), ValidationError);
    CHECK_THROWS_AS((void)tuner_settings_from_json({{"eta", 1.0}}), ValidationError);
}

TEST_CASE("gp: single point interpolation and prior reversion") {
    Eigen::MatrixXd x(1, 2);
    x << 0.3, 0.7;
    Eigen::VectorXd y(1);
    y << 4.2;
    const auto gp = gp_fit(x, y, GpKernel{0.1, 1.0, 1e-9});
    CHECK(std::fabs(gp_predict(gp, Eigen::Vector2d(0.3, 0.7)).mean - 4.2) <= 1e-8);
    const auto far = gp_predict(gp, Eigen::Vector2d(0.3 + 0.5, 0.7));  // 5 length scales away
    CHECK(far.variance >= 0.99);
}

TEST_CASE("gp: posterior matches a dense-solve oracle") {
    Rng rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_mean = 0.0;
    double worst_var = 0.0;
    for (int instance = 0; instance < 30; ++instance) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 8);
        const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 3);
        Eigen::MatrixXd x(n, d);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) x(i, j) = u(rng);
            y(i) = 3.0 * u(rng) - 1.0;
        }
        const auto gp = gp_fit(x, y);
        REQUIRE(gp.jitter == 0.0);
        for (int t = 0; t < 5; ++t) {
            Eigen::VectorXd at(d);
            for (auto& v : at) v = u(rng);
            const auto p = gp_predict(gp, at);
            const auto o = dense_oracle(x, y, gp.kernel, at);
            worst_mean = std::max(worst_mean, std::fabs(p.mean - o.mean));
            worst_var = std::max(worst_var, std::fabs(p.variance - std::max(0.0, o.variance)));
        }
    }
    CHECK(worst_mean <= 1e-8);
    CHECK(worst_var <= 1e-8);
}

TEST_CASE("gp: reproduces training targets and picks a grid kernel") {
    Eigen::MatrixXd x(4, 1);
    x << 0.0, 0.3, 0.6, 0.9;
    Eigen::VectorXd y(4);
    y << 1.0, 0.2, 0.5, 2.0;
    const auto gp = gp_fit(x, y);
    for (Eigen::Index i = 0; i < 4; ++i) {
        const auto p = gp_predict(gp, x.row(i).transpose());
        CHECK(std::fabs(p.mean - y(i)) <= 10 * gp.kernel.noise_sd * gp.y_sd + 1e-6);
    }
    const auto grid = gp_kernel_grid();
    CHECK(std::any_of(grid.begin(), grid.end(), [&](const GpKernel& k) {
        return k.length_scale == gp.kernel.length_scale && k.noise_sd == gp.kernel.noise_sd;
    }));
    for (const auto& k : grid) {
        const auto other = gp_fit(x, y, k);
        CHECK(other.log_marginal_likelihood <= gp.log_marginal_likelihood + 1e-12);
    }
}

TEST_CASE("expected improvement") {
    CHECK(expected_improvement(1.0, 0.0, 1.0) == 0.0);
    CHECK(expected_improvement(0.4, 0.0, 1.0) == doctest::Approx(0.6));
    CHECK(expected_improvement(1.0, 1.0, 1.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
    CHECK(expected_improvement(1.0, 1.0, 1.0) == doctest::Approx(0.39894).epsilon(1e-5));
    for (double mu : {-1.0, 0.0, 2.0}) CHECK(expected_improvement(mu, 0.5, 0.5) >= 0.0);
    CHECK_THROWS_AS((void)expected_improvement(0.0, -1.0, 0.0), ValidationError);
}

TEST_CASE("schedule_trials accounting") {
    // Submission order: worker 0 runs 3, worker 1 runs 1 then 2.
    const auto p = schedule_trials(std::vector<double>{3, 1, 2}, 2);
    CHECK(p.latency == 3.0);
    CHECK(p.cost == 6.0);
    CHECK(p.worker == std::vector<int>{0, 1, 1});

    const std::vector<double> equal(15, 2.0);
    const auto serial = schedule_trials(equal, 1);
    const auto wide = schedule_trials(equal, 15);
    CHECK(serial.cost == wide.cost);
    CHECK(serial.latency == doctest::Approx(15.0 * wide.latency));
    CHECK(serial.latency == serial.cost);

    const auto one = schedule_trials(std::vector<double>{5}, 4);
    CHECK(one.latency == one.cost);
    CHECK_THROWS_AS((void)schedule_trials(equal, 0), ValidationError);

    Rng rng(2);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> d(1 + rng() % 20);
        for (auto& v : d) v = u(rng);
        const int par = 1 + static_cast<int>(rng() % 6);
        const auto plan = schedule_trials(d, par);
        CHECK(plan.latency <= plan.cost + 1e-12);
        CHECK(plan.latency >= plan.cost / par - 1e-12);
    }
}

TEST_CASE("run_parallel visits every job once") {
    std::vector<int> hits(100, 0);
    run_parallel(hits.size(), 7, [&](std::size_t i) { hits[i] += 1; });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
}
