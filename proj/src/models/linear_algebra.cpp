#include "autoens/models/linear_algebra.hpp"

#include "autoens/core/error.hpp"

#include <string>

namespace autoens {

Eigen::VectorXd least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& target, const char* hint) {
    if (design.rows() < design.cols()) {
        throw ValidationError(std::string("least squares: fewer rows than unknowns; ") + hint);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < design.cols()) {
        throw ValidationError(std::string("least squares: singular design matrix; ") + hint);
    }
    return qr.solve(target);
}

}  // namespace autoens
