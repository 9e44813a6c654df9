#include "autoens/hpo/gp.hpp"

#include "autoens/core/error.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace autoens {

namespace {

struct Factorization {
    Eigen::MatrixXd lower;
    Eigen::VectorXd alpha;
    double jitter = 0.0;
    double lml = 0.0;
};

std::optional<Factorization> factorize(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GpKernel& k) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) cov(i, j) = cov(j, i) = se_kernel(x.row(i), x.row(j), k);
    }
    const double noise = k.noise_sd * k.noise_sd;
    for (double jitter : {0.0, 1e-10, 1e-8, 1e-6}) {
        Eigen::MatrixXd a = cov;
        a.diagonal().array() += noise + jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(a);
        if (llt.info() != Eigen::Success) continue;
        Factorization f;
        f.lower = llt.matrixL();
        f.alpha = llt.solve(y);
        f.jitter = jitter;
        f.lml = -0.5 * y.dot(f.alpha) - f.lower.diagonal().array().log().sum() -
                0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
        return f;
    }
    return std::nullopt;
}

}  // namespace

std::vector<GpKernel> gp_kernel_grid() {
    std::vector<GpKernel> grid;
    for (double l : {0.05, 0.1, 0.2, 0.5, 1.0}) {
        for (double sf : {0.5, 1.0, 2.0}) {
            for (double sn : {1e-4, 1e-2}) grid.push_back({l, sf, sn});
        }
    }
    return grid;
}

double se_kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                 const GpKernel& k) {
    return k.signal_sd * k.signal_sd * std::exp(-(a - b).squaredNorm() / (2.0 * k.length_scale * k.length_scale));
}

GpModel gp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::optional<GpKernel> kernel) {
    if (x.rows() < 1) throw ValidationError("gp_fit: need at least one observation");
    if (x.rows() != y.size()) throw ValidationError("gp_fit: X and y disagree in length");
    if (!y.allFinite()) throw ValidationError("gp_fit: targets must be finite");
    GpModel m;
    m.x = x;
    m.y_mean = y.mean();
    const double var = (y.array() - m.y_mean).square().mean();
    m.y_sd = var > 0.0 ? std::sqrt(var) : 1.0;
    m.y = (y.array() - m.y_mean) / m.y_sd;

    const std::vector<GpKernel> candidates = kernel ? std::vector<GpKernel>{*kernel} : gp_kernel_grid();
    double best = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (const auto& k : candidates) {
        auto f = factorize(x, m.y, k);
        if (!f || !(f->lml > best)) continue;
        best = f->lml;
        found = true;
        m.kernel = k;
        m.chol_lower = std::move(f->lower);
        m.alpha = std::move(f->alpha);
        m.jitter = f->jitter;
        m.log_marginal_likelihood = f->lml;
    }
    if (!found) throw Error("gp_fit: covariance is not positive definite even with jitter");
    return m;
}

GpPrediction gp_predict(const GpModel& m, const Eigen::Ref<const Eigen::VectorXd>& x) {
    const Eigen::Index n = m.x.rows();
    Eigen::VectorXd ks(n);
    for (Eigen::Index i = 0; i < n; ++i) ks(i) = se_kernel(m.x.row(i), x, m.kernel);
    const Eigen::VectorXd v = m.chol_lower.triangularView<Eigen::Lower>().solve(ks);
    const double prior = m.kernel.signal_sd * m.kernel.signal_sd;
    GpPrediction p;
    p.mean = m.y_mean + m.y_sd * ks.dot(m.alpha);
    p.variance = std::max(0.0, prior - v.squaredNorm()) * m.y_sd * m.y_sd;
    return p;
}

double expected_improvement(double mu, double sigma, double best) {
    if (sigma < 0.0) throw ValidationError("expected_improvement: sigma must be >= 0");
    if (sigma == 0.0) return std::max(0.0, best - mu);
    static const boost::math::normal_distribution<double> standard;
    const double u = (best - mu) / sigma;
    return (best - mu) * boost::math::cdf(standard, u) + sigma * boost::math::pdf(standard, u);
}

}  // namespace autoens
