#include "autoens/models/ets.hpp"

#include "autoens/core/error.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace autoens {

namespace {

struct SmoothingPass {
    double sse = 0.0;
    double last = 0.0;
};

SmoothingPass smooth(std::span<const double> z, double theta) {
    SmoothingPass out;
    double pred = z[0];
    for (std::size_t t = 1; t < z.size(); ++t) {
        const double err = z[t] - pred;
        out.sse += err * err;
        pred += theta * err;
    }
    out.last = pred;
    return out;
}

}  // namespace

EtsModel fit_ets(std::span<const double> train, std::optional<double> forced_theta) {
    if (train.size() < 2) throw ValidationError("ETS: need at least 2 observations");
    EtsModel model;
    if (forced_theta) {
        if (*forced_theta < 0.0 || *forced_theta > 1.0) throw ValidationError("ETS: theta must lie in [0, 1]");
        model.theta = *forced_theta;
    } else {
        double best = std::numeric_limits<double>::infinity();
        for (int g = 0; g <= 20; ++g) {
            const double theta = 0.05 * g;
            const double sse = smooth(train, theta).sse;
            if (sse < best) {
                best = sse;
                model.theta = theta;
            }
        }
    }
    const auto pass = smooth(train, model.theta);
    model.sigma = std::sqrt(pass.sse / static_cast<double>(train.size() - 1));
    model.last_smoothed = pass.last;
    return model;
}

QuantileForecast forecast_ets(const EtsModel& model, std::size_t horizon, std::span<const double> taus,
                              const std::string& item_id) {
    std::vector<double> mean(horizon, model.last_smoothed);
    std::vector<double> sd(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
        sd[h] = model.sigma * std::sqrt(1.0 + static_cast<double>(h) * model.theta * model.theta);
    }
    return gaussian_forecast(item_id, mean, sd, taus);
}

QuantileForecast fit_forecast_ets(std::span<const double> train, std::size_t horizon, std::span<const double> taus,
                                  std::optional<double> forced_theta, const std::string& item_id) {
    return forecast_ets(fit_ets(train, forced_theta), horizon, taus, item_id);
}

}  // namespace autoens
