#include "layout.hpp"

#include "autoens/neural/losses.hpp"
#include "autoens/neural/lstm.hpp"

#include <cmath>

namespace autoens::detail {

DeepArLayout::DeepArLayout(const NeuralModel& m) : hidden(m.hp.hidden_size) {
    LayoutBuilder b;
    w = b.add(4 * hidden, kRecurrentInputs + hidden);
    this->b = b.add(4 * hidden);
    wmu = b.add(1, hidden);
    bmu = b.add(1);
    wsig = b.add(1, hidden);
    bsig = b.add(1);
    total = b.total();
}

Eigen::VectorXd recurrent_input(double lagged, std::size_t position, int step, int length, int seasonality) {
    const double angle = seasonal_angle(static_cast<double>(position), seasonality);
    Eigen::VectorXd x(kRecurrentInputs);
    x << lagged, std::sin(angle), std::cos(angle), static_cast<double>(step) / length;
    return x;
}

double deepar_window_loss(const NeuralModel& m, const TrainingWindow& w, std::vector<double>* grad) {
    const DeepArLayout L(m);
    const int C = m.context();
    const int T = C + m.horizon;
    const int H = L.hidden;
    const auto& p = m.params;
    const double scale = context_scale(w.values.subspan(0, static_cast<std::size_t>(C)));
    const auto gw = view(p, L.w);
    const auto gb = vview(p, L.b);
    const auto wmu = view(p, L.wmu);
    const auto wsig = view(p, L.wsig);
    const double bmu = p[L.bmu.offset];
    const double bsig = p[L.bsig.offset];

    std::vector<LstmCache> caches(static_cast<std::size_t>(T));
    std::vector<Eigen::VectorXd> hs(static_cast<std::size_t>(T));
    std::vector<double> mus(static_cast<std::size_t>(T)), pre_sig(static_cast<std::size_t>(T));
    LstmState state{Eigen::VectorXd::Zero(H), Eigen::VectorXd::Zero(H)};
    const double norm = 1.0 / (T - 1);
    double loss = 0.0;
    for (int t = 0; t < T; ++t) {
        const auto ts = static_cast<std::size_t>(t);
        const double lagged = t >= 1 ? w.values[ts - 1] / scale : 0.0;
        const auto x = recurrent_input(lagged, w.start + ts, t, T, m.seasonality);
        state = lstm_cell_step(x, state, gw, gb, &caches[ts]);
        hs[ts] = state.h;
        mus[ts] = (wmu * state.h)(0) + bmu;
        pre_sig[ts] = (wsig * state.h)(0) + bsig;
        if (t >= 1) {
            const double sigma = softplus(pre_sig[ts]) + m.sigma_floor;
            loss += gaussian_nll(w.values[ts] / scale, mus[ts], sigma) * norm;
        }
    }
    if (!grad) return loss;

    auto& g = *grad;
    auto dgw = view(g, L.w);
    auto dgb = vview(g, L.b);
    auto dwmu = view(g, L.wmu);
    auto dwsig = view(g, L.wsig);
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(H);
    for (int t = T - 1; t >= 0; --t) {
        const auto ts = static_cast<std::size_t>(t);
        Eigen::VectorXd dh = dh_next;
        if (t >= 1) {
            const double y = w.values[ts] / scale;
            const double sigma = softplus(pre_sig[ts]) + m.sigma_floor;
            const double r = y - mus[ts];
            const double dmu = -r / (sigma * sigma) * norm;
            const double dsigma = (1.0 / sigma - r * r / (sigma * sigma * sigma)) * norm;
            const double dpre = dsigma * softplus_grad(pre_sig[ts]);
            dwmu += dmu * hs[ts].transpose();
            g[L.bmu.offset] += dmu;
            dwsig += dpre * hs[ts].transpose();
            g[L.bsig.offset] += dpre;
            dh += wmu.transpose() * dmu + wsig.transpose() * dpre;
        }
        const auto step = lstm_cell_backward(caches[ts], gw, dh, dc_next, dgw, dgb);
        dh_next = step.dh_prev;
        dc_next = step.dc_prev;
    }
    return loss;
}

}  // namespace autoens::detail
