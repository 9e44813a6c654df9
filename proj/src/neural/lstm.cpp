#include "autoens/neural/lstm.hpp"

#include "autoens/core/error.hpp"

namespace autoens {

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& a) {
    return a.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

}  // namespace

LstmCellParams::LstmCellParams(Eigen::Index input_size, Eigen::Index hidden_size)
    : w(Eigen::MatrixXd::Zero(4 * hidden_size, input_size + hidden_size)), b(Eigen::VectorXd::Zero(4 * hidden_size)) {}

LstmState lstm_cell_step(const Eigen::Ref<const Eigen::VectorXd>& x, const LstmState& state,
                         const Eigen::Ref<const Eigen::MatrixXd>& w, const Eigen::Ref<const Eigen::VectorXd>& b,
                         LstmCache* cache) {
    const Eigen::Index hidden = b.size() / 4;
    if (b.size() != 4 * hidden || w.rows() != b.size() || w.cols() != x.size() + hidden ||
        state.h.size() != hidden || state.c.size() != hidden) {
        throw ValidationError("lstm_cell_step: dimension mismatch (input " + std::to_string(x.size()) + ", hidden " +
                              std::to_string(hidden) + ", weights " + std::to_string(w.rows()) + "x" +
                              std::to_string(w.cols()) + ")");
    }
    Eigen::VectorXd input(x.size() + hidden);
    input << x, state.h;
    const Eigen::VectorXd pre = w * input + b;
    Eigen::VectorXd f = sigmoid(pre.segment(0, hidden));
    Eigen::VectorXd i = sigmoid(pre.segment(hidden, hidden));
    Eigen::VectorXd o = sigmoid(pre.segment(2 * hidden, hidden));
    Eigen::VectorXd g = pre.segment(3 * hidden, hidden).array().tanh();

    LstmState next;
    next.c = f.cwiseProduct(state.c) + i.cwiseProduct(g);
    Eigen::VectorXd tanh_c = next.c.array().tanh();
    next.h = o.cwiseProduct(tanh_c);
    if (cache) {
        cache->input = std::move(input);
        cache->c_prev = state.c;
        cache->f = std::move(f);
        cache->i = std::move(i);
        cache->o = std::move(o);
        cache->g = std::move(g);
        cache->tanh_c = std::move(tanh_c);
    }
    return next;
}

LstmStepGrad lstm_cell_backward(const LstmCache& cache, const Eigen::Ref<const Eigen::MatrixXd>& w,
                                const Eigen::Ref<const Eigen::VectorXd>& dh, const Eigen::Ref<const Eigen::VectorXd>& dc,
                                Eigen::Ref<Eigen::MatrixXd> dw, Eigen::Ref<Eigen::VectorXd> db) {
    const Eigen::Index hidden = cache.f.size();
    const Eigen::Index in = cache.input.size() - hidden;
    const Eigen::ArrayXd tc = cache.tanh_c.array();
    const Eigen::ArrayXd dc_total = dc.array() + dh.array() * cache.o.array() * (1.0 - tc * tc);

    Eigen::VectorXd dpre(4 * hidden);
    dpre.segment(0, hidden) = dc_total * cache.c_prev.array() * cache.f.array() * (1.0 - cache.f.array());
    dpre.segment(hidden, hidden) = dc_total * cache.g.array() * cache.i.array() * (1.0 - cache.i.array());
    dpre.segment(2 * hidden, hidden) = dh.array() * tc * cache.o.array() * (1.0 - cache.o.array());
    dpre.segment(3 * hidden, hidden) = dc_total * cache.i.array() * (1.0 - cache.g.array().square());

    dw.noalias() += dpre * cache.input.transpose();
    db += dpre;
    const Eigen::VectorXd dinput = w.transpose() * dpre;

    LstmStepGrad out;
    out.dx = dinput.head(in);
    out.dh_prev = dinput.tail(hidden);
    out.dc_prev = (dc_total * cache.f.array()).matrix();
    return out;
}

}  // namespace autoens
