#include "autoens/models/prophet.hpp"

#include "autoens/core/error.hpp"
#include "autoens/core/random.hpp"
#include "autoens/models/linear_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace autoens {

namespace {

double active_sum(double t, std::span<const double> changepoints, std::span<const double> values) {
    double s = 0.0;
    for (std::size_t j = 0; j < changepoints.size(); ++j) {
        if (t >= changepoints[j]) s += values[j];
    }
    return s;
}

// Seasonal and holiday columns appended after `offset` in row `r`.
void fill_regressors(Eigen::MatrixXd& x, Eigen::Index r, Eigen::Index offset, double t, const ProphetSpec& spec) {
    const double two_pi = 2.0 * std::numbers::pi;
    Eigen::Index c = offset;
    for (int n = 1; n <= spec.fourier_order; ++n) {
        const double arg = two_pi * n * t / spec.period;
        x(r, c++) = std::cos(arg);
        x(r, c++) = std::sin(arg);
    }
    for (const auto& days : spec.holidays) x(r, c++) = days.contains(static_cast<long>(t)) ? 1.0 : 0.0;
}

void check_spec(std::size_t n, const ProphetSpec& spec) {
    if (spec.n_changepoints < 0 || spec.fourier_order < 0) {
        throw ValidationError("Prophet: changepoint count and Fourier order must be >= 0");
    }
    if (spec.fourier_order > 0 && !(spec.period > 0.0)) throw ValidationError("Prophet: period must be positive");
    const std::size_t need = 2 * static_cast<std::size_t>(2 * spec.fourier_order + spec.n_changepoints + 2);
    if (n < need) {
        throw ValidationError("Prophet: training length " + std::to_string(n) + " < " + std::to_string(need));
    }
    if (spec.n_samples < 1) throw ValidationError("Prophet: n_samples must be positive");
}

std::vector<double> place_changepoints(std::size_t n, int count) {
    // Uniformly over the first 80% of the history, excluding the origin.
    std::vector<double> s;
    const double span = 0.8 * static_cast<double>(n - 1);
    for (int j = 1; j <= count; ++j) s.push_back(std::floor(span * j / count));
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

}  // namespace

double logistic_trend(double t, double capacity, double k, double m, std::span<const double> changepoints,
                      std::span<const double> deltas, std::span<const double> gammas) {
    const double rate = k + active_sum(t, changepoints, deltas);
    const double offset = m + active_sum(t, changepoints, gammas);
    return capacity / (1.0 + std::exp(-rate * (t - offset)));
}

std::vector<double> logistic_gammas(double k, double m, std::span<const double> changepoints,
                                    std::span<const double> deltas) {
    std::vector<double> gammas(changepoints.size());
    double gamma_sum = 0.0;
    double rate_before = k;
    for (std::size_t j = 0; j < changepoints.size(); ++j) {
        const double rate_after = rate_before + deltas[j];
        gammas[j] = rate_after == 0.0 ? 0.0 : (changepoints[j] - m - gamma_sum) * (1.0 - rate_before / rate_after);
        gamma_sum += gammas[j];
        rate_before = rate_after;
    }
    return gammas;
}

double ProphetModel::trend(double t) const {
    if (spec.trend_kind == TrendKind::Logistic) {
        const double c = spec.capacity ? spec.capacity(t) : capacity_default;
        return logistic_trend(t, c, k, m, changepoints, deltas, gammas);
    }
    return (k + active_sum(t, changepoints, deltas)) * t + (m + active_sum(t, changepoints, gammas));
}

double ProphetModel::seasonality(double t) const {
    const double two_pi = 2.0 * std::numbers::pi;
    double s = 0.0;
    for (int n = 1; n <= spec.fourier_order; ++n) {
        const double arg = two_pi * n * t / spec.period;
        s += fourier[static_cast<std::size_t>(2 * (n - 1))] * std::cos(arg) +
             fourier[static_cast<std::size_t>(2 * (n - 1) + 1)] * std::sin(arg);
    }
    return s;
}

double ProphetModel::holiday_effect(double t) const {
    double h = 0.0;
    for (std::size_t i = 0; i < spec.holidays.size(); ++i) {
        if (spec.holidays[i].contains(static_cast<long>(t))) h += kappa[i];
    }
    return h;
}

ProphetModel fit_prophet(std::span<const double> train, const ProphetSpec& spec) {
    const std::size_t n = train.size();
    check_spec(n, spec);
    ProphetModel model;
    model.spec = spec;
    model.n_train = n;
    model.changepoints = place_changepoints(n, spec.n_changepoints);
    const auto n_cp = static_cast<Eigen::Index>(model.changepoints.size());
    const auto n_season = static_cast<Eigen::Index>(2 * spec.fourier_order);
    const auto n_hol = static_cast<Eigen::Index>(spec.holidays.size());
    const auto rows = static_cast<Eigen::Index>(n);
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(train.data(), rows);

    if (spec.trend_kind == TrendKind::LinearPiecewise) {
        // [1, t, (t - s_j)_+, Fourier pairs, holiday indicators]
        Eigen::MatrixXd x(rows, 2 + n_cp + n_season + n_hol);
        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto t = static_cast<double>(r);
            x(r, 0) = 1.0;
            x(r, 1) = t;
            for (Eigen::Index j = 0; j < n_cp; ++j) {
                x(r, 2 + j) = std::max(0.0, t - model.changepoints[static_cast<std::size_t>(j)]);
            }
            fill_regressors(x, r, 2 + n_cp, t, spec);
        }
        const Eigen::VectorXd beta = least_squares(x, y, "reduce changepoints or Fourier order");
        model.m = beta(0);
        model.k = beta(1);
        for (Eigen::Index j = 0; j < n_cp; ++j) {
            const double delta = beta(2 + j);
            model.deltas.push_back(delta);
            model.gammas.push_back(-model.changepoints[static_cast<std::size_t>(j)] * delta);
        }
        for (Eigen::Index c = 0; c < n_season; ++c) model.fourier.push_back(beta(2 + n_cp + c));
        for (Eigen::Index c = 0; c < n_hol; ++c) model.kappa.push_back(beta(2 + n_cp + n_season + c));
    } else {
        const double peak = *std::max_element(train.begin(), train.end());
        model.capacity_default = peak > 0.0 ? 1.2 * peak : 1.0;
        auto capacity = [&](double t) { return spec.capacity ? spec.capacity(t) : model.capacity_default; };
        const double horizon_scale = static_cast<double>(n);
        auto sse_for = [&](double k, double m, const std::vector<double>& deltas) {
            const auto gammas = logistic_gammas(k, m, model.changepoints, deltas);
            double sse = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                const auto t = static_cast<double>(r);
                const double e = train[r] - logistic_trend(t, capacity(t), k, m, model.changepoints, deltas, gammas);
                sse += e * e;
            }
            return sse;
        };
        // Coarse grid for (k, m); rates are per step, so scale by the history length.
        std::vector<double> deltas(model.changepoints.size(), 0.0);
        double best = std::numeric_limits<double>::infinity();
        for (int ik = -20; ik <= 20; ++ik) {
            const double k = ik * 0.5 / horizon_scale;
            for (int im = -10; im <= 30; ++im) {
                const double m = im * 0.05 * horizon_scale;
                const double sse = sse_for(k, m, deltas);
                if (sse < best) {
                    best = sse;
                    model.k = k;
                    model.m = m;
                }
            }
        }
        for (std::size_t j = 0; j < deltas.size(); ++j) {
            double best_delta = 0.0;
            for (int id = -10; id <= 10; ++id) {
                deltas[j] = id * 0.5 / horizon_scale;
                const double sse = sse_for(model.k, model.m, deltas);
                if (sse < best) {
                    best = sse;
                    best_delta = deltas[j];
                }
            }
            deltas[j] = best_delta;
        }
        model.deltas = deltas;
        model.gammas = logistic_gammas(model.k, model.m, model.changepoints, deltas);

        if (n_season + n_hol > 0) {
            Eigen::MatrixXd x(rows, n_season + n_hol);
            Eigen::VectorXd resid(rows);
            for (Eigen::Index r = 0; r < rows; ++r) {
                const auto t = static_cast<double>(r);
                fill_regressors(x, r, 0, t, spec);
                resid(r) = y(r) - model.trend(t);
            }
            const Eigen::VectorXd beta = least_squares(x, resid, "reduce Fourier order or holidays");
            for (Eigen::Index c = 0; c < n_season; ++c) model.fourier.push_back(beta(c));
            for (Eigen::Index c = 0; c < n_hol; ++c) model.kappa.push_back(beta(n_season + c));
        }
    }
    for (std::size_t r = 0; r < n; ++r) model.residuals.push_back(train[r] - model.predict(static_cast<double>(r)));
    return model;
}

QuantileForecast forecast_prophet(const ProphetModel& model, std::size_t horizon, std::span<const double> taus,
                                  std::uint64_t seed, const std::string& item_id) {
    std::vector<double> point(horizon);
    for (std::size_t h = 0; h < horizon; ++h) point[h] = model.predict(static_cast<double>(model.n_train + h));
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, model.residuals.size() - 1);
    std::vector<std::vector<double>> paths(static_cast<std::size_t>(model.spec.n_samples), point);
    for (auto& path : paths) {
        for (double& v : path) v += model.residuals[pick(rng)];
    }
    return forecast_from_samples(item_id, paths, taus);
}

QuantileForecast fit_forecast_prophet(std::span<const double> train, const ProphetSpec& spec, std::size_t horizon,
                                      std::span<const double> taus, std::uint64_t seed, const std::string& item_id) {
    return forecast_prophet(fit_prophet(train, spec), horizon, taus, seed, item_id);
}

}  // namespace autoens
