#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace autoens {

/// Squared-exponential kernel sigma_f^2 exp(-|x - x'|^2 / (2 l^2)) on standardized targets.
struct GpKernel {
    double length_scale = 0.2;
    double signal_sd = 1.0;
    double noise_sd = 1e-4;
};

/// Kernel hyperparameter grid searched by marginal likelihood.
std::vector<GpKernel> gp_kernel_grid();

struct GpModel {
    Eigen::MatrixXd x;  // n x d, inputs in the unit cube
    Eigen::VectorXd y;  // standardized targets
    double y_mean = 0.0;
    double y_sd = 1.0;
    GpKernel kernel;
    double jitter = 0.0;  // extra diagonal added to reach positive definiteness
    Eigen::MatrixXd chol_lower;  // L with L L' = K + (noise^2 + jitter) I
    Eigen::VectorXd alpha;       // (K + noise^2 I)^{-1} y
    double log_marginal_likelihood = 0.0;
};

double se_kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                 const GpKernel& k);

/// Fits on raw targets (standardized internally). With no kernel given, the
/// grid entry with the highest marginal likelihood wins (first on ties).
GpModel gp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::optional<GpKernel> kernel = std::nullopt);

struct GpPrediction {
    double mean = 0.0;      // in target units
    double variance = 0.0;  // in target units squared
};

GpPrediction gp_predict(const GpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Expected improvement below `best` for a Gaussian N(mu, sigma^2); 0 when sigma is 0 and mu >= best.
double expected_improvement(double mu, double sigma, double best);

}  // namespace autoens
