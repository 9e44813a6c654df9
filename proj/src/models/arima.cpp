#include "autoens/models/arima.hpp"

#include "autoens/core/error.hpp"
#include "autoens/models/linear_algebra.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>

namespace autoens {

void ArimaSpec::validate() const {
    if (p < 0 || q < 0 || p + q < 1) throw ValidationError("ARIMA: need p, q >= 0 and p + q >= 1");
    if (d < 0 || d > 2) throw ValidationError("ARIMA: differencing order must be 0, 1 or 2");
}

std::vector<double> difference(std::span<const double> series, int d) {
    if (d < 0) throw ValidationError("difference: negative order");
    if (series.size() <= static_cast<std::size_t>(d)) {
        throw ValidationError("difference: series of length " + std::to_string(series.size()) +
                              " too short for order " + std::to_string(d));
    }
    std::vector<double> out(series.begin(), series.end());
    for (int level = 0; level < d; ++level) {
        for (std::size_t i = 0; i + 1 < out.size(); ++i) out[i] = out[i + 1] - out[i];
        out.pop_back();
    }
    return out;
}

std::vector<double> inverse_difference(std::span<const double> diffed, std::span<const double> heads, int d) {
    if (d < 0) throw ValidationError("inverse_difference: negative order");
    if (heads.size() != static_cast<std::size_t>(d)) {
        throw ValidationError("inverse_difference: need " + std::to_string(d) + " head values, got " +
                              std::to_string(heads.size()));
    }
    // last[l] is the most recent value of the l-th difference of the heads.
    std::vector<double> last(static_cast<std::size_t>(d));
    std::vector<double> level(heads.begin(), heads.end());
    for (int l = 0; l < d; ++l) {
        last[static_cast<std::size_t>(l)] = level.back();
        for (std::size_t i = 0; i + 1 < level.size(); ++i) level[i] = level[i + 1] - level[i];
        level.pop_back();
    }
    std::vector<double> out;
    out.reserve(diffed.size());
    for (double v : diffed) {
        double carry = v;
        for (int l = d - 1; l >= 0; --l) {
            last[static_cast<std::size_t>(l)] += carry;
            carry = last[static_cast<std::size_t>(l)];
        }
        out.push_back(carry);
    }
    return out;
}

std::vector<double> acf(std::span<const double> series, int max_lag) {
    const std::size_t n = series.size();
    if (max_lag < 0 || n <= static_cast<std::size_t>(max_lag)) throw ValidationError("acf: series too short");
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);
    double c0 = 0.0;
    for (double v : series) c0 += (v - mean) * (v - mean);
    if (c0 == 0.0) throw ValidationError("acf: constant series");
    std::vector<double> out(static_cast<std::size_t>(max_lag) + 1);
    for (int lag = 0; lag <= max_lag; ++lag) {
        double c = 0.0;
        for (std::size_t t = static_cast<std::size_t>(lag); t < n; ++t) {
            c += (series[t] - mean) * (series[t - static_cast<std::size_t>(lag)] - mean);
        }
        out[static_cast<std::size_t>(lag)] = c / c0;
    }
    return out;
}

std::vector<double> pacf(std::span<const double> series, int max_lag) {
    if (max_lag < 1) throw ValidationError("pacf: max_lag must be >= 1");
    if (series.size() <= static_cast<std::size_t>(max_lag) + 1) throw ValidationError("pacf: series too short");
    const auto r = acf(series, max_lag);
    std::vector<double> out;
    std::vector<double> phi;  // phi_{k,1..k}
    double v = 1.0;
    for (int k = 1; k <= max_lag; ++k) {
        double num = r[static_cast<std::size_t>(k)];
        for (int j = 1; j < k; ++j) num -= phi[static_cast<std::size_t>(j - 1)] * r[static_cast<std::size_t>(k - j)];
        const double kappa = num / v;
        std::vector<double> next(static_cast<std::size_t>(k));
        for (int j = 1; j < k; ++j) {
            next[static_cast<std::size_t>(j - 1)] =
                phi[static_cast<std::size_t>(j - 1)] - kappa * phi[static_cast<std::size_t>(k - j - 1)];
        }
        next[static_cast<std::size_t>(k - 1)] = kappa;
        phi = std::move(next);
        v *= (1.0 - kappa * kappa);
        out.push_back(kappa);
    }
    return out;
}

namespace {

// Regress w[t] on [1, w[t-1..t-p], e[t-1..t-q]] for t in [start, n).
struct ArmaRegression {
    Eigen::VectorXd coef;
    Eigen::VectorXd fitted_residuals;
};

ArmaRegression regress_arma(const std::vector<double>& w, const std::vector<double>& e, int p, int q,
                            std::size_t start) {
    const std::size_t n = w.size();
    const auto rows = static_cast<Eigen::Index>(n - start);
    const auto cols = static_cast<Eigen::Index>(1 + p + q);
    Eigen::MatrixXd x(rows, cols);
    Eigen::VectorXd y(rows);
    for (std::size_t t = start; t < n; ++t) {
        const auto r = static_cast<Eigen::Index>(t - start);
        x(r, 0) = 1.0;
        for (int i = 1; i <= p; ++i) x(r, i) = w[t - static_cast<std::size_t>(i)];
        for (int j = 1; j <= q; ++j) x(r, p + j) = e[t - static_cast<std::size_t>(j)];
        y(r) = w[t];
    }
    ArmaRegression out;
    out.coef = least_squares(x, y, "try a lower ARIMA order");
    out.fitted_residuals = y - x * out.coef;
    return out;
}

// Reflects inverse roots of 1 + theta_1 B + ... + theta_q B^q that lie outside
// the unit circle and caps every modulus at kMaxInverseRoot.
std::vector<double> invertible_ma(const std::vector<double>& ma) {
    constexpr double kMaxInverseRoot = 0.99;
    const auto q = static_cast<Eigen::Index>(ma.size());
    if (q == 0) return ma;
    // Inverse roots are the roots of x^q + theta_1 x^(q-1) + ... + theta_q.
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(q, q);
    for (Eigen::Index j = 0; j < q; ++j) companion(0, j) = -ma[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 1; i < q; ++i) companion(i, i - 1) = 1.0;
    const Eigen::VectorXcd roots = Eigen::EigenSolver<Eigen::MatrixXd>(companion, false).eigenvalues();
    bool changed = false;
    std::vector<std::complex<double>> fixed;
    for (Eigen::Index i = 0; i < q; ++i) {
        std::complex<double> r = roots(i);
        if (std::abs(r) > 1.0) {
            r = 1.0 / std::conj(r);
            changed = true;
        }
        if (std::abs(r) > kMaxInverseRoot) {
            r *= kMaxInverseRoot / std::abs(r);
            changed = true;
        }
        fixed.push_back(r);
    }
    if (!changed) return ma;
    std::vector<std::complex<double>> poly{1.0};
    for (const auto& r : fixed) {
        std::vector<std::complex<double>> next(poly.size() + 1, 0.0);
        for (std::size_t k = 0; k < poly.size(); ++k) {
            next[k] += poly[k];
            next[k + 1] -= r * poly[k];
        }
        poly = std::move(next);
    }
    std::vector<double> out;
    for (std::size_t k = 1; k < poly.size(); ++k) out.push_back(poly[k].real());
    return out;
}

}  // namespace

ArimaModel fit_arima(std::span<const double> train, const ArimaSpec& spec) {
    spec.validate();
    const std::vector<double> w = difference(train, spec.d);
    const std::size_t n = w.size();
    const int p = spec.p;
    const int q = spec.q;
    if (n < static_cast<std::size_t>(10 * (p + q))) {
        throw ValidationError("ARIMA: differenced length " + std::to_string(n) + " < 10*(p+q) = " +
                              std::to_string(10 * (p + q)));
    }

    std::vector<double> e(n, 0.0);
    std::size_t start = static_cast<std::size_t>(p);
    if (q > 0) {
        const int ceiling = std::max(p + q, static_cast<int>(n / 4));
        const int long_order = std::min(ceiling, std::max(p + q, static_cast<int>(std::ceil(10.0 * std::log10(n)))));
        const auto long_fit = regress_arma(w, e, long_order, 0, static_cast<std::size_t>(long_order));
        for (std::size_t t = static_cast<std::size_t>(long_order); t < n; ++t) {
            e[t] = long_fit.fitted_residuals(static_cast<Eigen::Index>(t - static_cast<std::size_t>(long_order)));
        }
        start = static_cast<std::size_t>(long_order + std::max(p, q));
        if (start >= n) throw ValidationError("ARIMA: series too short for the long autoregression");
    }
    const auto fit = regress_arma(w, e, p, q, start);

    ArimaModel model;
    model.spec = spec;
    model.intercept = fit.coef(0);
    for (int i = 1; i <= p; ++i) model.ar.push_back(fit.coef(i));
    for (int j = 1; j <= q; ++j) model.ma.push_back(fit.coef(p + j));
    model.ma = invertible_ma(model.ma);

    // Recompute residuals through the fitted recursion so the forecast state
    // is consistent with the final coefficients.
    std::vector<double> resid(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        double pred = model.intercept;
        for (int i = 1; i <= p; ++i) {
            if (t >= static_cast<std::size_t>(i)) pred += model.ar[static_cast<std::size_t>(i - 1)] * w[t - static_cast<std::size_t>(i)];
        }
        for (int j = 1; j <= q; ++j) {
            if (t >= static_cast<std::size_t>(j)) pred += model.ma[static_cast<std::size_t>(j - 1)] * resid[t - static_cast<std::size_t>(j)];
        }
        resid[t] = w[t] - pred;
    }
    double sse = 0.0;
    std::size_t used = 0;
    for (std::size_t t = start; t < n; ++t) {
        sse += resid[t] * resid[t];
        ++used;
    }
    const double dof = std::max<double>(1.0, static_cast<double>(used) - static_cast<double>(1 + p + q));
    model.sigma = std::sqrt(sse / dof);
    model.residuals.assign(resid.begin() + static_cast<std::ptrdiff_t>(start), resid.end());

    model.differenced_tail.assign(w.end() - p, w.end());
    model.residual_tail.assign(resid.end() - q, resid.end());
    model.heads.assign(train.end() - spec.d, train.end());
    return model;
}

QuantileForecast forecast_arima(const ArimaModel& model, std::size_t horizon, std::span<const double> taus,
                                const std::string& item_id) {
    const int p = static_cast<int>(model.ar.size());
    const int q = static_cast<int>(model.ma.size());
    if (model.differenced_tail.size() != static_cast<std::size_t>(p) ||
        model.residual_tail.size() != static_cast<std::size_t>(q) ||
        model.heads.size() != static_cast<std::size_t>(model.spec.d)) {
        throw ValidationError("forecast_arima: model state does not match its orders");
    }
    std::vector<double> w(model.differenced_tail);
    std::vector<double> e(model.residual_tail);
    std::vector<double> path;
    for (std::size_t h = 0; h < horizon; ++h) {
        double pred = model.intercept;
        for (int i = 1; i <= p; ++i) pred += model.ar[static_cast<std::size_t>(i - 1)] * w[w.size() - static_cast<std::size_t>(i)];
        for (int j = 1; j <= q; ++j) pred += model.ma[static_cast<std::size_t>(j - 1)] * e[e.size() - static_cast<std::size_t>(j)];
        w.push_back(pred);
        e.push_back(0.0);
        path.push_back(pred);
    }
    const std::vector<double> point = inverse_difference(path, model.heads, model.spec.d);

    // phi*(B) = phi(B) (1 - B)^d, then psi weights of phi*(B) psi(B) = theta(B).
    std::vector<double> poly{1.0};
    for (double phi : model.ar) poly.push_back(-phi);
    for (int k = 0; k < model.spec.d; ++k) {
        std::vector<double> next(poly.size() + 1, 0.0);
        for (std::size_t i = 0; i < poly.size(); ++i) {
            next[i] += poly[i];
            next[i + 1] -= poly[i];
        }
        poly = std::move(next);
    }
    std::vector<double> psi(horizon, 0.0);
    if (horizon > 0) psi[0] = 1.0;
    for (std::size_t j = 1; j < horizon; ++j) {
        double v = j <= static_cast<std::size_t>(q) ? model.ma[j - 1] : 0.0;
        for (std::size_t i = 1; i < poly.size() && i <= j; ++i) v -= poly[i] * psi[j - i];
        psi[j] = v;
    }
    std::vector<double> sd(horizon);
    double acc = 0.0;
    for (std::size_t h = 0; h < horizon; ++h) {
        acc += psi[h] * psi[h];
        sd[h] = model.sigma * std::sqrt(acc);
    }
    return gaussian_forecast(item_id, point, sd, taus);
}

nlohmann::json to_json(const ArimaModel& m) {
    return {{"p", m.spec.p},          {"d", m.spec.d},
            {"q", m.spec.q},          {"intercept", m.intercept},
            {"ar", m.ar},             {"ma", m.ma},
            {"sigma", m.sigma},       {"differenced_tail", m.differenced_tail},
            {"residual_tail", m.residual_tail}, {"heads", m.heads}};
}

ArimaModel arima_from_json(const nlohmann::json& j) {
    ArimaModel m;
    m.spec = {j.at("p").get<int>(), j.at("d").get<int>(), j.at("q").get<int>()};
    m.intercept = j.at("intercept").get<double>();
    m.ar = j.at("ar").get<std::vector<double>>();
    m.ma = j.at("ma").get<std::vector<double>>();
    m.sigma = j.at("sigma").get<double>();
    m.differenced_tail = j.at("differenced_tail").get<std::vector<double>>();
    m.residual_tail = j.at("residual_tail").get<std::vector<double>>();
    m.heads = j.at("heads").get<std::vector<double>>();
    return m;
}

}  // namespace autoens
