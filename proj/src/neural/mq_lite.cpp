#include "layout.hpp"

#include "autoens/neural/losses.hpp"

#include <cmath>

namespace autoens::detail {

MqLayout::MqLayout(const NeuralModel& m)
    : hidden(m.hp.hidden_size),
      context(m.context()),
      horizon(m.horizon),
      quantiles(static_cast<int>(m.taus.size())) {
    LayoutBuilder b;
    w1a = b.add(hidden);
    w1b = b.add(hidden);
    b1 = b.add(hidden);
    w2a = b.add(hidden, hidden);
    w2b = b.add(hidden, hidden);
    b2 = b.add(hidden);
    wg = b.add(horizon * kHorizonContext + kSharedContext, 2 * hidden);
    bg = b.add(horizon * kHorizonContext + kSharedContext);
    wl = b.add(quantiles, kHorizonContext + kSharedContext + kLocalFeatures);
    bl = b.add(quantiles);
    total = b.total();
}

double context_scale(std::span<const double> context) {
    double s = 0.0;
    for (double v : context) s += std::fabs(v);
    s /= static_cast<double>(context.size());
    return s > 0.0 ? s : 1.0;
}

namespace {

struct MqForward {
    Eigen::VectorXd u;   // scaled context
    Eigen::MatrixXd h1;  // hidden x context
    Eigen::MatrixXd h2;
    Eigen::VectorXd enc;  // [h2 at the last step; mean of h2 over steps]
    Eigen::VectorXd g;    // global branch output
    Eigen::MatrixXd v;    // local inputs, one column per horizon step
    Eigen::MatrixXd out;  // Q x K, scaled units (level skip included)
    double scale = 1.0;
};

// `end` is the position (in the source series) just past the context window.
MqForward mq_forward(const NeuralModel& m, const MqLayout& L, std::span<const double> context, std::size_t end) {
    const auto& p = m.params;
    const int C = L.context;
    const int H = L.hidden;
    MqForward f;
    f.scale = context_scale(context);
    f.u = ConstVec(context.data(), C) / f.scale;

    const auto w1a = vview(p, L.w1a);
    const auto w1b = vview(p, L.w1b);
    const auto b1 = vview(p, L.b1);
    f.h1.resize(H, C);
    for (int t = 0; t < C; ++t) {
        const double prev = t >= 1 ? f.u(t - 1) : 0.0;
        f.h1.col(t) = (b1 + w1a * prev + w1b * f.u(t)).array().tanh();
    }
    const auto w2a = view(p, L.w2a);
    const auto w2b = view(p, L.w2b);
    const auto b2 = vview(p, L.b2);
    f.h2.resize(H, C);
    for (int t = 0; t < C; ++t) {
        Eigen::VectorXd a = b2 + w2b * f.h1.col(t);
        if (t >= 2) a += w2a * f.h1.col(t - 2);
        f.h2.col(t) = a.array().tanh();
    }
    f.enc.resize(2 * H);
    f.enc << f.h2.col(C - 1), f.h2.rowwise().mean();

    f.g = (view(p, L.wg) * f.enc + vview(p, L.bg)).array().tanh();

    const int K = L.horizon;
    const int width = kHorizonContext + kSharedContext + kLocalFeatures;
    f.v.resize(width, K);
    for (int k = 0; k < K; ++k) {
        const double angle = seasonal_angle(static_cast<double>(end + static_cast<std::size_t>(k)), m.seasonality);
        f.v.col(k) << f.g.segment(k * kHorizonContext, kHorizonContext), f.g.tail(kSharedContext), std::sin(angle),
            std::cos(angle), static_cast<double>(k + 1) / K;
    }
    f.out = view(p, L.wl) * f.v;
    f.out.colwise() += vview(p, L.bl);
    f.out.array() += f.u(C - 1);
    return f;
}

}  // namespace

Eigen::MatrixXd mq_predict(const NeuralModel& m, std::span<const double> context, std::size_t end) {
    const MqLayout L(m);
    const auto f = mq_forward(m, L, context, end);
    return f.out * f.scale;
}

double mq_window_loss(const NeuralModel& m, const TrainingWindow& w, std::vector<double>* grad) {
    const MqLayout L(m);
    const int C = L.context;
    const int K = L.horizon;
    const int Q = L.quantiles;
    const int H = L.hidden;
    const auto context = w.values.subspan(0, static_cast<std::size_t>(C));
    const auto f = mq_forward(m, L, context, w.start + static_cast<std::size_t>(C));

    const double norm = 1.0 / (static_cast<double>(K) * Q);
    double loss = 0.0;
    Eigen::MatrixXd dout(Q, K);
    for (int k = 0; k < K; ++k) {
        const double y = w.values[static_cast<std::size_t>(C + k)] / f.scale;
        for (int q = 0; q < Q; ++q) {
            const double tau = m.taus[static_cast<std::size_t>(q)];
            loss += quantile_loss(y, f.out(q, k), tau) * norm;
            dout(q, k) = quantile_loss_grad(y, f.out(q, k), tau) * norm;
        }
    }
    if (!grad) return loss;

    auto& g = *grad;
    const auto& p = m.params;
    view(g, L.wl).noalias() += dout * f.v.transpose();
    vview(g, L.bl) += dout.rowwise().sum();
    const Eigen::MatrixXd dv = view(p, L.wl).transpose() * dout;

    Eigen::VectorXd dglob = Eigen::VectorXd::Zero(f.g.size());
    for (int k = 0; k < K; ++k) {
        dglob.segment(k * kHorizonContext, kHorizonContext) += dv.col(k).head(kHorizonContext);
        dglob.tail(kSharedContext) += dv.col(k).segment(kHorizonContext, kSharedContext);
    }
    const Eigen::VectorXd dag = dglob.array() * (1.0 - f.g.array().square());
    view(g, L.wg).noalias() += dag * f.enc.transpose();
    vview(g, L.bg) += dag;
    const Eigen::VectorXd denc = view(p, L.wg).transpose() * dag;

    Eigen::MatrixXd dh2 = denc.tail(H).replicate(1, C) / static_cast<double>(C);
    dh2.col(C - 1) += denc.head(H);
    const Eigen::MatrixXd da2 = dh2.array() * (1.0 - f.h2.array().square());

    const auto w2a = view(p, L.w2a);
    const auto w2b = view(p, L.w2b);
    Eigen::MatrixXd dh1 = w2b.transpose() * da2;
    auto gw2a = view(g, L.w2a);
    auto gw2b = view(g, L.w2b);
    gw2b.noalias() += da2 * f.h1.transpose();
    vview(g, L.b2) += da2.rowwise().sum();
    for (int t = 2; t < C; ++t) {
        gw2a.noalias() += da2.col(t) * f.h1.col(t - 2).transpose();
        dh1.col(t - 2).noalias() += w2a.transpose() * da2.col(t);
    }
    const Eigen::MatrixXd da1 = dh1.array() * (1.0 - f.h1.array().square());
    auto gw1a = vview(g, L.w1a);
    auto gw1b = vview(g, L.w1b);
    for (int t = 0; t < C; ++t) {
        gw1b += da1.col(t) * f.u(t);
        if (t >= 1) gw1a += da1.col(t) * f.u(t - 1);
    }
    vview(g, L.b1) += da1.rowwise().sum();
    return loss;
}

}  // namespace autoens::detail
