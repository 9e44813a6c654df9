#pragma once

namespace autoens {

/// Pinball loss tau * max(z - zhat, 0) + (1 - tau) * max(zhat - z, 0).
double quantile_loss(double actual, double predicted, double tau);

/// d quantile_loss / d predicted (zero at the kink).
double quantile_loss_grad(double actual, double predicted, double tau);

/// Negative log-likelihood of `y` under N(mu, sigma^2), sigma > 0.
double gaussian_nll(double y, double mu, double sigma);

/// log(1 + exp(a)) without overflow, and its derivative.
double softplus(double a);
double softplus_grad(double a);

}  // namespace autoens
