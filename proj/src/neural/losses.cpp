#include "autoens/neural/losses.hpp"

#include "autoens/core/error.hpp"

#include <cmath>
#include <numbers>

namespace autoens {

double quantile_loss(double actual, double predicted, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("quantile_loss: tau must lie in (0, 1)");
    const double u = actual - predicted;
    return u >= 0.0 ? tau * u : (tau - 1.0) * u;
}

double quantile_loss_grad(double actual, double predicted, double tau) {
    if (actual > predicted) return -tau;
    if (actual < predicted) return 1.0 - tau;
    return 0.0;
}

double gaussian_nll(double y, double mu, double sigma) {
    const double r = (y - mu) / sigma;
    return std::log(sigma) + 0.5 * r * r + 0.5 * std::log(2.0 * std::numbers::pi);
}

double softplus(double a) {
    if (a > 30.0) return a;
    return std::log1p(std::exp(a));
}

double softplus_grad(double a) {
    return 1.0 / (1.0 + std::exp(-a));
}

}  // namespace autoens
