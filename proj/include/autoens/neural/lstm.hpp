#pragma once

#include <Eigen/Dense>

namespace autoens {

/// Gates are stacked row-wise in the order forget, input, output, candidate:
/// rows [0, H) are the forget gate, [H, 2H) the input gate and so on.
/// Each gate sees the concatenation [x; h_prev].
struct LstmCellParams {
    Eigen::MatrixXd w;  // 4H x (I + H)
    Eigen::VectorXd b;  // 4H

    LstmCellParams() = default;
    LstmCellParams(Eigen::Index input_size, Eigen::Index hidden_size);

    [[nodiscard]] Eigen::Index hidden_size() const { return b.size() / 4; }
    [[nodiscard]] Eigen::Index input_size() const { return w.cols() - hidden_size(); }
};

struct LstmState {
    Eigen::VectorXd h;
    Eigen::VectorXd c;
};

/// Values from the forward step needed to back-propagate through it.
struct LstmCache {
    Eigen::VectorXd input;  // [x; h_prev]
    Eigen::VectorXd c_prev;
    Eigen::VectorXd f, i, o, g;
    Eigen::VectorXd tanh_c;
};

LstmState lstm_cell_step(const Eigen::Ref<const Eigen::VectorXd>& x, const LstmState& state,
                         const Eigen::Ref<const Eigen::MatrixXd>& w, const Eigen::Ref<const Eigen::VectorXd>& b,
                         LstmCache* cache = nullptr);

inline LstmState lstm_cell_step(const Eigen::Ref<const Eigen::VectorXd>& x, const LstmState& state,
                                const LstmCellParams& p, LstmCache* cache = nullptr) {
    return lstm_cell_step(x, state, p.w, p.b, cache);
}

/// Gradients flowing out of one step given dL/dh' and dL/dc'.
/// Parameter gradients are accumulated into dw and db.
struct LstmStepGrad {
    Eigen::VectorXd dx;
    Eigen::VectorXd dh_prev;
    Eigen::VectorXd dc_prev;
};

LstmStepGrad lstm_cell_backward(const LstmCache& cache, const Eigen::Ref<const Eigen::MatrixXd>& w,
                                const Eigen::Ref<const Eigen::VectorXd>& dh, const Eigen::Ref<const Eigen::VectorXd>& dc,
                                Eigen::Ref<Eigen::MatrixXd> dw, Eigen::Ref<Eigen::VectorXd> db);

}  // namespace autoens
