#pragma once

#include <Eigen/Dense>

namespace autoens {

/// Ordinary least squares via column-pivoted QR. Throws ValidationError with
/// `hint` appended when the design matrix is rank deficient.
Eigen::VectorXd least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& target, const char* hint);

}  // namespace autoens
