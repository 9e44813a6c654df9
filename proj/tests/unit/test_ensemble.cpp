#include <doctest.h>

#include "autoens/core/error.hpp"
#include "autoens/ensemble/ensemble.hpp"
#include "autoens/metrics/metrics.hpp"

#include <cmath>
#include <random>

using namespace autoens;

namespace {

const std::vector<double> kTaus{0.1, 0.5, 0.9};

// Forecast whose quantile rows sit at the given offsets around a path.
QuantileForecast banded(const std::string& id, const std::vector<double>& path, double spread) {
    QuantileForecast f(id, kTaus, path.size());
    for (std::size_t k = 0; k < path.size(); ++k) {
        f.at(0, k) = path[k] - spread;
        f.at(1, k) = path[k];
        f.at(2, k) = path[k] + spread;
    }
    return f;
}

Dataset make_actuals(const std::vector<std::vector<double>>& values) {
    Dataset d;
    d.name = "toy";
    d.horizon_k = static_cast<int>(values.front().size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        d.items.push_back(TimeSeries{"item" + std::to_string(i), 0, Frequency::Daily, values[i]});
    }
    return d;
}

ErrorMatrix random_matrix(std::mt19937_64& rng, std::size_t n_alg, std::size_t n_items) {
    std::uniform_real_distribution<double> u(0.05, 2.0);
    ErrorMatrix m;
    for (std::size_t a = 0; a < n_alg; ++a) m.algorithms.push_back("alg" + std::to_string(a));
    for (std::size_t i = 0; i < n_items; ++i) m.items.push_back("item" + std::to_string(i));
    for (std::size_t a = 0; a < n_alg; ++a) {
        std::vector<double> row(n_items);
        double s = 0.0;
        for (auto& e : row) {
            e = u(rng);
            s += e;
        }
        m.err.push_back(row);
        m.global.push_back(s / static_cast<double>(n_items));
    }
    return m;
}

EnsembleParams random_params(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return {u(rng), u(rng), u(rng)};
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

TEST_CASE("ensemble: error matrix matches direct avg-wQL on a hand 2x2 case") {
    const auto actuals = make_actuals({{10, 12, 11}, {3, 5, 4}});
    std::vector<AlgorithmForecasts> fc{
        {"A", {banded("item0", {9, 12, 13}, 1.0), banded("item1", {3, 6, 4}, 0.5)}},
        {"B", {banded("item0", {11, 11, 11}, 2.0), banded("item1", {2, 2, 2}, 1.0)}},
    };
    const auto m = compute_error_matrix(fc, actuals);
    REQUIRE(m.algorithms == std::vector<std::string>{"A", "B"});
    for (std::size_t a = 0; a < 2; ++a) {
        double mean = 0.0;
        for (std::size_t i = 0; i < 2; ++i) {
            const auto& f = fc[a].items[i];
            const double oracle = eval_avg_wql(actuals.items[i].values, f.as_map(), kTaus);
            CHECK(m.err[a][i] == doctest::Approx(oracle).epsilon(1e-14));
            mean += oracle / 2.0;
        }
        CHECK(m.global[a] == doctest::Approx(mean).epsilon(1e-14));
    }
}

TEST_CASE("ensemble: error matrix edge cases") {
    const auto actuals = make_actuals({{1, 2}, {4, 4}});
    std::vector<AlgorithmForecasts> perfect{{"A", {banded("item0", {1, 2}, 0.0), banded("item1", {4, 4}, 0.0)}}};
    const auto m = compute_error_matrix(perfect, actuals);
    CHECK(m.err[0][0] == 0.0);
    CHECK(m.err[0][1] == 0.0);

    std::vector<AlgorithmForecasts> missing{{"A", {banded("item0", {1, 2}, 0.0)}}};
    try {
        (void)compute_error_matrix(missing, actuals);
        FAIL("expected an error");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("'A'") != std::string::npos);
        CHECK(msg.find("item1") != std::string::npos);
    }

    std::vector<AlgorithmForecasts> ordered{
        {"good", {banded("item0", {1, 2}, 0.1), banded("item1", {4, 4}, 0.1)}},
        {"bad", {banded("item0", {2, 3}, 0.1), banded("item1", {6, 6}, 0.1)}},
    };
    const auto m2 = compute_error_matrix(ordered, actuals);
    CHECK(m2.global[0] < m2.global[1]);
}

TEST_CASE("ensemble: member selection by hand") {
    ErrorMatrix m;
    m.algorithms = {"A", "B"};
    m.items = {"x", "y", "z"};
    m.err = {{1.00, 2.0, 0.5}, {1.05, 1.0, 0.6}};
    m.global = {(1.0 + 2.0 + 0.5) / 3.0, (1.05 + 1.0 + 0.6) / 3.0};

    SUBCASE("degenerate thresholds pick the argmin") {
        const auto a = select_members(m, {0.0, 0.0, 0.0});
        CHECK(a[0].members == std::vector<std::string>{"A"});
        CHECK(a[1].members == std::vector<std::string>{"B"});
        CHECK(a[2].members == std::vector<std::string>{"A"});
        for (const auto& item : a) CHECK(item.mode == EnsembleMode::Local);
    }
    SUBCASE("p_local = 0.1") {
        // x: 1.05 <= 1.1 -> both; y: 2.0 > 1.1 -> B; z: 0.6 > 0.55 -> A
        const auto a = select_members(m, {0.1, 0.0, 0.0});
        CHECK(a[0].members == std::vector<std::string>{"A", "B"});
        CHECK(a[1].members == std::vector<std::string>{"B"});
        CHECK(a[2].members == std::vector<std::string>{"A"});
    }
    SUBCASE("saturated local threshold") {
        // max/min per item is at most 2
        const auto a = select_members(m, {1.0, 0.0, 0.0});
        for (const auto& item : a) CHECK(item.members.size() == 2);
    }
    SUBCASE("combination margin sends items to the global set") {
        // global set with p_global = 0: B (0.883 < 1.167). Item x: min 1.0 vs 0.9 * 1.05 = 0.945 -> global.
        // Item y: min 1.0 vs 0.9 * 1.0 -> global. Item z: 0.5 <= 0.54 -> local.
        const auto a = select_members(m, {0.0, 0.0, 0.1});
        CHECK(a[0].mode == EnsembleMode::Global);
        CHECK(a[0].members == std::vector<std::string>{"B"});
        CHECK(a[1].mode == EnsembleMode::Global);
        CHECK(a[2].mode == EnsembleMode::Local);
        CHECK(a[2].members == std::vector<std::string>{"A"});
    }
    CHECK_THROWS_AS((void)select_members(m, {1.5, 0.0, 0.0}), ValidationError);
}

TEST_CASE("ensemble: selection properties over random matrices") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        const auto m = random_matrix(rng, 2 + rng() % 5, 1 + rng() % 8);
        const auto p = random_params(rng);
        const auto base = select_members(m, p);
        for (const auto& item : base) CHECK_FALSE(item.members.empty());

        // Larger p_local never shrinks a local set.
        auto wider = p;
        wider.p_local = std::min(1.0, p.p_local + 0.3);
        const auto a_wide = select_members(m, wider);
        for (std::size_t i = 0; i < base.size(); ++i) {
            if (base[i].mode != EnsembleMode::Local) continue;
            REQUIRE(a_wide[i].mode == EnsembleMode::Local);
            for (const auto& name : base[i].members) CHECK(contains(a_wide[i].members, name));
        }

        // Larger p_global never shrinks the global set; check via p_comb = 1 (all items global,
        // unless an item's minimum error is zero, which random matrices exclude).
        auto g = p;
        g.p_comb = 1.0;
        auto g_wide = g;
        g_wide.p_global = std::min(1.0, g.p_global + 0.3);
        const auto ga = select_members(m, g);
        const auto gb = select_members(m, g_wide);
        for (std::size_t i = 0; i < ga.size(); ++i) {
            REQUIRE(ga[i].mode == EnsembleMode::Global);
            for (const auto& name : ga[i].members) CHECK(contains(gb[i].members, name));
        }

        // Scaling every error by a power of two is exact in floating point.
        const double c = std::ldexp(1.0, static_cast<int>(rng() % 20) - 10);
        auto scaled = m;
        for (auto& row : scaled.err) {
            for (auto& e : row) e *= c;
        }
        for (auto& e : scaled.global) e *= c;
        const auto s = select_members(scaled, p);
        for (std::size_t i = 0; i < base.size(); ++i) {
            CHECK(s[i].mode == base[i].mode);
            CHECK(s[i].members == base[i].members);
        }
    }
}

TEST_CASE("ensemble: scale invariance with general factors away from ties") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> uc(0.01, 100.0);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto m = random_matrix(rng, 3, 5);
        const auto p = random_params(rng);
        const double c = uc(rng);
        auto scaled = m;
        for (auto& row : scaled.err) {
            for (auto& e : row) e *= c;
        }
        for (auto& e : scaled.global) e *= c;
        const auto a = select_members(m, p);
        const auto b = select_members(scaled, p);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].mode == b[i].mode);
            CHECK(a[i].members == b[i].members);
            ++checked;
        }
    }
    CHECK(checked == 1000);
}

TEST_CASE("ensemble: forecast averaging") {
    QuantileForecast m("x", kTaus, 2);
    QuantileForecast m2("x", kTaus, 2);
    for (std::size_t q = 0; q < 3; ++q) {
        for (std::size_t k = 0; k < 2; ++k) {
            m.at(q, k) = static_cast<double>(q) * 3.0 + static_cast<double>(k);
            m2.at(q, k) = m.at(q, k) + 2.0;
        }
    }
    std::vector<AlgorithmForecasts> fc{{"A", {m}}, {"B", {m2}}};

    const auto single = ensemble_forecast({{"x", EnsembleMode::Local, {"A"}}}, fc);
    CHECK(single[0] == m);

    const auto both = ensemble_forecast({{"x", EnsembleMode::Local, {"A", "B"}}}, fc);
    for (std::size_t q = 0; q < 3; ++q) {
        for (std::size_t k = 0; k < 2; ++k) CHECK(both[0].at(q, k) == m.at(q, k) + 1.0);
    }

    // Three contributors with arbitrary monotone matrices.
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::vector<AlgorithmForecasts> three;
    for (int a = 0; a < 3; ++a) {
        QuantileForecast f("x", kTaus, 4);
        for (std::size_t k = 0; k < 4; ++k) {
            double v = u(rng);
            for (std::size_t q = 0; q < 3; ++q) {
                v += std::fabs(u(rng));
                f.at(q, k) = v;
            }
        }
        three.push_back({"alg" + std::to_string(a), {f}});
    }
    const auto mean = ensemble_forecast({{"x", EnsembleMode::Global, {"alg0", "alg1", "alg2"}}}, three);
    for (std::size_t q = 0; q < 3; ++q) {
        for (std::size_t k = 0; k < 4; ++k) {
            const double direct =
                (three[0].items[0].at(q, k) + three[1].items[0].at(q, k) + three[2].items[0].at(q, k)) / 3.0;
            CHECK(mean[0].at(q, k) == doctest::Approx(direct).epsilon(1e-15));
        }
    }
    CHECK(mean[0].is_monotone());

    // Identical forecasts average to themselves exactly.
    QuantileForecast odd("x", kTaus, 3);
    for (std::size_t q = 0; q < 3; ++q) {
        for (std::size_t k = 0; k < 3; ++k) odd.at(q, k) = 0.1 * static_cast<double>(q) + 1.0 / 3.0 * k;
    }
    std::vector<AlgorithmForecasts> same{{"A", {odd}}, {"B", {odd}}, {"C", {odd}}};
    CHECK(ensemble_forecast({{"x", EnsembleMode::Local, {"A", "B", "C"}}}, same)[0] == odd);

    CHECK_THROWS_AS((void)ensemble_forecast({{"x", EnsembleMode::Local, {}}}, fc), ValidationError);
    CHECK_THROWS_AS((void)ensemble_forecast({{"x", EnsembleMode::Local, {"Z"}}}, fc), ValidationError);
}

TEST_CASE("ensemble: basin hopping finds a planted optimum") {
    const EnsembleObjective quad = [](const EnsembleParams& p) {
        return std::pow(p.p_local - 0.3, 2) + std::pow(p.p_global - 0.5, 2) + std::pow(p.p_comb - 0.2, 2);
    };
    const auto r = basin_hopping(quad, {50, 0.2, 3});
    CHECK(std::fabs(r.best.p_local - 0.3) < 0.05);
    CHECK(std::fabs(r.best.p_global - 0.5) < 0.05);
    CHECK(std::fabs(r.best.p_comb - 0.2) < 0.05);
    CHECK(r.best_value <= r.start_value);
    CHECK(r.best_value == doctest::Approx(quad(r.best)));

    const auto again = basin_hopping(quad, {50, 0.2, 3});
    CHECK(again.best.as_array() == r.best.as_array());
    CHECK(again.evaluations == r.evaluations);

    const auto flat = basin_hopping([](const EnsembleParams&) { return 1.0; }, {10, 0.2, 0});
    CHECK_NOTHROW(flat.best.validate());

    CHECK_THROWS_AS((void)basin_hopping(quad, {5, 0.0, 0}), ValidationError);
}

TEST_CASE("ensemble: basin hopping never returns worse than its corners") {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_matrix(rng, 3, 6);
        // Piecewise-constant objective: mean of the selected errors of a perturbed copy.
        const EnsembleObjective obj = [&](const EnsembleParams& p) {
            const auto a = select_members(m, p);
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                double e = 0.0;
                for (const auto& name : a[i].members) {
                    const auto idx = static_cast<std::size_t>(name.back() - '0');
                    e += m.err[(idx + 1) % 3][i];
                }
                s += e / static_cast<double>(a[i].members.size());
            }
            return s;
        };
        const auto r = basin_hopping(obj, {10, 0.2, static_cast<std::uint64_t>(trial)});
        CHECK(r.best_value <= obj({0, 0, 0}));
        CHECK(r.best_value <= obj({1, 1, 1}));
        CHECK(r.best_value == obj(r.best));
    }
}

namespace {

struct Planted {
    std::vector<AlgorithmForecasts> test;
    std::vector<AlgorithmForecasts> validation;
    Dataset test_actuals;
    Dataset validation_actuals;
    Dataset history;
};

// Algorithm A is accurate on the first half of the items, B on the second half,
// in both windows, so per-item selection beats either model alone.
Planted planted_two_regime(std::size_t n_items, std::size_t k) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 1.0);
    Planted p;
    std::vector<std::vector<double>> test_vals;
    std::vector<std::vector<double>> val_vals;
    AlgorithmForecasts at{"A", {}}, bt{"B", {}}, av{"A", {}}, bv{"B", {}};
    Dataset history;
    history.name = "planted";
    history.horizon_k = static_cast<int>(k);
    history.seasonality_m = 1;
    for (std::size_t i = 0; i < n_items; ++i) {
        const std::string id = "item" + std::to_string(i);
        std::vector<double> hist(20);
        for (std::size_t t = 0; t < hist.size(); ++t) hist[t] = 50.0 + 5.0 * noise(rng);
        history.items.push_back(TimeSeries{id, 0, Frequency::Daily, hist});
        std::vector<double> tv(k), vv(k);
        for (auto& x : tv) x = 50.0 + 5.0 * noise(rng);
        for (auto& x : vv) x = 50.0 + 5.0 * noise(rng);
        test_vals.push_back(tv);
        val_vals.push_back(vv);
        const bool a_wins = i < n_items / 2;
        auto good = [&](const std::vector<double>& v) { return banded(id, v, 1.0); };
        auto bad = [&](const std::vector<double>& v) {
            std::vector<double> shifted = v;
            for (auto& x : shifted) x += 15.0;
            return banded(id, shifted, 1.0);
        };
        at.items.push_back(a_wins ? good(tv) : bad(tv));
        bt.items.push_back(a_wins ? bad(tv) : good(tv));
        av.items.push_back(a_wins ? good(vv) : bad(vv));
        bv.items.push_back(a_wins ? bad(vv) : good(vv));
    }
    p.test = {at, bt};
    p.validation = {av, bv};
    p.test_actuals = make_actuals(test_vals);
    p.validation_actuals = make_actuals(val_vals);
    p.history = history;
    return p;
}

}  // namespace

TEST_CASE("ensemble: planted two-regime scenario favors mixing") {
    const auto p = planted_two_regime(10, 6);
    const auto fit = fit_ensemble(p.test, p.test_actuals, p.validation, p.validation_actuals, p.history, {20, 0.2, 1});
    const double single_a = mean_avg_wql(p.validation[0].items, p.validation_actuals);
    const double single_b = mean_avg_wql(p.validation[1].items, p.validation_actuals);
    CHECK(fit.objective <= std::min(single_a, single_b) + 1e-9);
    CHECK(fit.objective < 0.5 * std::min(single_a, single_b));
    CHECK(fit.objective == doctest::Approx(mean_avg_wql(fit.forecasts, p.validation_actuals)).epsilon(1e-14));
    CHECK(fit.validation.avg_wql == doctest::Approx(fit.objective).epsilon(1e-12));
    CHECK(fit.single_model_avg_wql.size() == 2);
    CHECK_FALSE(fit.warning.empty());
    for (std::size_t i = 0; i < fit.assignment.size(); ++i) {
        CHECK(fit.assignment[i].members == std::vector<std::string>{i < 5 ? "A" : "B"});
    }
    CHECK(fit.objective <= mean_avg_wql(ensemble_forecast(select_members(fit.test_errors, {0, 0, 0}), p.validation),
                                        p.validation_actuals));
    CHECK(fit.objective <= mean_avg_wql(ensemble_forecast(select_members(fit.test_errors, {1, 1, 1}), p.validation),
                                        p.validation_actuals));
}

TEST_CASE("ensemble: a single algorithm reproduces that model") {
    const auto p = planted_two_regime(4, 5);
    std::vector<AlgorithmForecasts> test{p.test[0]};
    std::vector<AlgorithmForecasts> val{p.validation[0]};
    const auto fit = fit_ensemble(test, p.test_actuals, val, p.validation_actuals, p.history, {5, 0.2, 0});
    for (std::size_t i = 0; i < fit.forecasts.size(); ++i) CHECK(fit.forecasts[i] == val[0].items[i]);
    CHECK(fit.objective == mean_avg_wql(val[0].items, p.validation_actuals));
}

TEST_CASE("ensemble: JSON round trip") {
    const EnsembleParams p{0.25, 0.5, 0.125};
    const auto back = ensemble_params_from_json(to_json(p));
    CHECK(back.as_array() == p.as_array());
    CHECK_THROWS_AS((void)ensemble_params_from_json(nlohmann::json{{"p_local", 2.0}, {"p_global", 0}, {"p_comb", 0}}),
                    ValidationError);
    const auto j = to_json(EnsembleAssignment{{"x", EnsembleMode::Global, {"A", "B"}}});
    CHECK(j[0]["mode"] == "global");
    CHECK(j[0]["members"].size() == 2);
}
