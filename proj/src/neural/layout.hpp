#pragma once

#include "autoens/neural/neural_model.hpp"

#include <Eigen/Dense>

#include <numbers>

namespace autoens::detail {

struct Block {
    std::size_t offset = 0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 1;

    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

using ConstMat = Eigen::Map<const Eigen::MatrixXd>;
using Mat = Eigen::Map<Eigen::MatrixXd>;
using ConstVec = Eigen::Map<const Eigen::VectorXd>;
using Vec = Eigen::Map<Eigen::VectorXd>;

inline ConstMat view(const std::vector<double>& p, const Block& b) {
    return ConstMat(p.data() + b.offset, b.rows, b.cols);
}
inline Mat view(std::vector<double>& p, const Block& b) { return Mat(p.data() + b.offset, b.rows, b.cols); }
inline ConstVec vview(const std::vector<double>& p, const Block& b) { return ConstVec(p.data() + b.offset, b.rows); }
inline Vec vview(std::vector<double>& p, const Block& b) { return Vec(p.data() + b.offset, b.rows); }

class LayoutBuilder {
public:
    Block add(Eigen::Index rows, Eigen::Index cols = 1) {
        Block b{total_, rows, cols};
        total_ += b.size();
        return b;
    }
    [[nodiscard]] std::size_t total() const { return total_; }

private:
    std::size_t total_ = 0;
};

inline constexpr int kHorizonContext = 8;  // per-step context width from the global decoder branch
inline constexpr int kSharedContext = 8;   // horizon-agnostic context width
inline constexpr int kLocalFeatures = 3;   // seasonal sin, cos, relative horizon position
inline constexpr int kRecurrentInputs = 4; // lagged value, seasonal sin, cos, relative position

struct MqLayout {
    int hidden = 0, context = 0, horizon = 0, quantiles = 0;
    Block w1a, w1b, b1;  // causal conv, kernel 2, dilation 1, one input channel
    Block w2a, w2b, b2;  // causal conv, kernel 2, dilation 2
    Block wg, bg;        // global decoder branch
    Block wl, bl;        // local decoder branch, shared over horizon steps
    std::size_t total = 0;

    explicit MqLayout(const NeuralModel& m);
};

struct DeepArLayout {
    int hidden = 0;
    Block w, b;        // LSTM gates
    Block wmu, bmu;    // mean head
    Block wsig, bsig;  // scale head (pre-softplus)
    std::size_t total = 0;

    explicit DeepArLayout(const NeuralModel& m);
};

inline double seasonal_angle(double position, int seasonality) {
    return 2.0 * std::numbers::pi * position / static_cast<double>(seasonality);
}

/// Input of the recurrent cell at `step` of a length-`length` unroll; `position`
/// is the absolute index of the predicted value in its series.
Eigen::VectorXd recurrent_input(double lagged, std::size_t position, int step, int length, int seasonality);

/// Mean absolute value of the context part; 1 when it is all zeros.
double context_scale(std::span<const double> context);

double mq_window_loss(const NeuralModel& m, const TrainingWindow& w, std::vector<double>* grad);
double deepar_window_loss(const NeuralModel& m, const TrainingWindow& w, std::vector<double>* grad);

/// Raw Q x K quantile outputs (in data units) for the context ending at position `end` (exclusive).
Eigen::MatrixXd mq_predict(const NeuralModel& m, std::span<const double> context, std::size_t end);

}  // namespace autoens::detail
