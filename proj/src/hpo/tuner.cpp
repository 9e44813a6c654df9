#include "autoens/hpo/tuner.hpp"

#include "autoens/core/error.hpp"
#include "autoens/hpo/gp.hpp"
#include "autoens/hpo/scheduler.hpp"

#include <algorithm>
#include <chrono>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <thread>

namespace autoens {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

// Evaluates one synchronous phase (a Hyperband rung or an optimizer batch).
class TrialRunner {
public:
    TrialRunner(const TunerSettings& settings, const Objective& objective)
        : settings_(settings), objective_(objective) {}

    std::vector<double> run_phase(std::vector<TrialRequest> requests) {
        for (auto& r : requests) r.trial_id = next_trial_id_++;
        std::vector<TrialResult> results(requests.size());
        // More threads than cores would stretch every measured wall time.
        const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
        run_parallel(requests.size(), std::min(settings_.max_parallel_jobs, hw), [&](std::size_t i) {
            const auto& req = requests[i];
            TrialResult& out = results[i];
            out.trial_id = req.trial_id;
            out.config_id = req.config_id;
            out.config = req.config;
            out.resource = req.resource;
            const auto t0 = std::chrono::steady_clock::now();
            try {
                out.loss = objective_(req);
                if (!std::isfinite(out.loss)) {
                    out.failed = true;
                    out.error = "non-finite loss";
                }
            } catch (const std::exception& e) {
                out.failed = true;
                out.error = e.what();
            }
            if (out.failed) out.loss = kInf;
            out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        });
        std::vector<double> durations;
        std::vector<double> losses;
        for (auto& r : results) {
            durations.push_back(r.wall_time_s);
            losses.push_back(r.loss);
            result_.trials.push_back(std::move(r));
        }
        const auto plan = schedule_trials(durations, settings_.max_parallel_jobs);
        result_.cost_s += plan.cost;
        result_.latency_s += plan.latency;
        return losses;
    }

    TuningResult finish() {
        double best = kInf;
        const TrialResult* winner = nullptr;
        for (const auto& t : result_.trials) {
            if (!t.failed && t.loss < best) {
                best = t.loss;
                winner = &t;
            }
        }
        if (!winner) throw Error("no successful trial");
        result_.best = winner->config;
        result_.best_loss = best;
        return std::move(result_);
    }

    const std::vector<TrialResult>& trials() const { return result_.trials; }

private:
    const TunerSettings& settings_;
    const Objective& objective_;
    int next_trial_id_ = 0;
    TuningResult result_;
};

HyperparameterConfig with_provenance(HyperparameterConfig c, std::string strategy, int bracket = -1,
                                     int rung = -1) {
    c.strategy = std::move(strategy);
    c.bracket = bracket;
    c.rung = rung;
    return c;
}

}  // namespace

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::Hyperband: return "hyperband";
        case Strategy::Bayesian: return "bayesian";
        case Strategy::Random: return "random";
    }
    return "hyperband";
}

Strategy strategy_from_string(std::string_view name) {
    if (name == "hyperband" || name == "Hyperband") return Strategy::Hyperband;
    if (name == "bayesian" || name == "Bayesian") return Strategy::Bayesian;
    if (name == "random" || name == "Random") return Strategy::Random;
    throw ValidationError("unknown tuning strategy '" + std::string(name) + "'");
}

void TunerSettings::validate() const {
    if (max_training_jobs < 1) throw ValidationError("max_training_jobs must be >= 1");
    if (max_parallel_jobs < 1 || max_parallel_jobs > max_training_jobs) {
        throw ValidationError("max_parallel_jobs must lie in [1, max_training_jobs]");
    }
    if (!(eta > 1.0)) throw ValidationError("eta must be > 1");
    if (max_resource < 1) throw ValidationError("max_resource must be >= 1");
    if (ei_candidates < 1) throw ValidationError("ei_candidates must be >= 1");
}

nlohmann::json to_json(const TunerSettings& s) {
    return {{"strategy", to_string(s.strategy)},   {"max_training_jobs", s.max_training_jobs},
            {"max_parallel_jobs", s.max_parallel_jobs}, {"max_resource", s.max_resource},
            {"eta", s.eta},                          {"seed", s.seed},
            {"ei_candidates", s.ei_candidates}};
}

TunerSettings tuner_settings_from_json(const nlohmann::json& j) {
    TunerSettings s;
    for (const auto& [key, v] : j.items()) {
        if (key == "strategy") s.strategy = strategy_from_string(v.get<std::string>());
        else if (key == "max_training_jobs") s.max_training_jobs = v.get<int>();
        else if (key == "max_parallel_jobs") s.max_parallel_jobs = v.get<int>();
        else if (key == "max_resource") s.max_resource = v.get<int>();
        else if (key == "eta") s.eta = v.get<double>();
        else if (key == "seed") s.seed = v.get<std::uint64_t>();
        else if (key == "ei_candidates") s.ei_candidates = v.get<int>();
        else throw ValidationError("unknown tuner setting '" + key + "'");
    }
    s.validate();
    return s;
}

std::vector<Bracket> hyperband_schedule(double max_resource, double eta) {
    if (!(max_resource >= 1.0)) throw ValidationError("hyperband: R must be >= 1");
    if (!(eta > 1.0)) throw ValidationError("hyperband: eta must be > 1");
    constexpr double tol = 1e-9;
    int s_max = 0;
    while (std::pow(eta, s_max + 1) <= max_resource * (1.0 + tol)) ++s_max;
    const double budget = (s_max + 1) * max_resource;
    std::vector<Bracket> out;
    for (int s = s_max; s >= 0; --s) {
        Bracket b;
        b.s = s;
        b.n = static_cast<int>(std::ceil(budget / max_resource * std::pow(eta, s) / (s + 1) - tol));
        b.r = max_resource * std::pow(eta, -s);
        for (int i = 0; i <= s; ++i) {
            const int n_i = static_cast<int>(std::floor(b.n * std::pow(eta, -i) + tol));
            b.rungs.emplace_back(n_i, b.r * std::pow(eta, i));
        }
        out.push_back(std::move(b));
    }
    return out;
}

std::vector<std::size_t> top_k(std::span<const double> losses, int k) {
    if (k < 0) throw ValidationError("top_k: k must be >= 0");
    if (static_cast<std::size_t>(k) > losses.size()) throw ValidationError("top_k: k exceeds the number of configs");
    std::vector<std::size_t> idx(losses.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });
    idx.resize(static_cast<std::size_t>(k));
    return idx;
}

TuningResult run_hyperband(const SearchSpace& space, const TunerSettings& settings, const Objective& objective) {
    space.validate();
    settings.validate();
    Rng rng(settings.seed);
    TrialRunner runner(settings, objective);
    int remaining = settings.max_training_jobs;
    int next_config_id = 0;
    for (const auto& bracket : hyperband_schedule(settings.max_resource, settings.eta)) {
        const int n = std::min(bracket.n, remaining);
        if (n <= 0) break;
        remaining -= n;
        struct Live {
            int config_id;
            HyperparameterConfig config;
            int trained = 0;
        };
        std::vector<Live> live;
        for (int j = 0; j < n; ++j) live.push_back({next_config_id++, sample_configuration(space, rng)});

        for (int i = 0; i <= bracket.s && !live.empty(); ++i) {
            const double r_i = bracket.r * std::pow(settings.eta, i);
            const int resource = std::max(1, static_cast<int>(std::lround(r_i)));
            std::vector<TrialRequest> requests;
            for (const auto& c : live) {
                requests.push_back({0, c.config_id, with_provenance(c.config, "hyperband", bracket.s, i), resource,
                                    c.trained});
            }
            const auto losses = runner.run_phase(std::move(requests));
            for (auto& c : live) c.trained = resource;
            if (i == bracket.s) break;
            const int keep = static_cast<int>(std::floor(static_cast<double>(live.size()) / settings.eta + 1e-9));
            std::vector<Live> survivors;
            for (std::size_t idx : top_k(losses, keep)) survivors.push_back(live[idx]);
            live = std::move(survivors);
        }
    }
    return runner.finish();
}

TuningResult run_random_search(const SearchSpace& space, const TunerSettings& settings, const Objective& objective) {
    space.validate();
    settings.validate();
    Rng rng(settings.seed);
    TrialRunner runner(settings, objective);
    int done = 0;
    while (done < settings.max_training_jobs) {
        const int batch = std::min(settings.max_parallel_jobs, settings.max_training_jobs - done);
        std::vector<TrialRequest> requests;
        for (int b = 0; b < batch; ++b) {
            requests.push_back({0, done + b, with_provenance(sample_configuration(space, rng), "random"),
                                settings.max_resource, 0});
        }
        runner.run_phase(std::move(requests));
        done += batch;
    }
    return runner.finish();
}

namespace {

// Maximizes EI over the unit cube: random candidates, then coordinate search from the best few.
std::vector<double> maximize_ei(const GpModel& gp, double best, std::size_t dims, int n_candidates, Rng& rng) {
    auto ei_at = [&](const std::vector<double>& u) {
        const auto p = gp_predict(gp, Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(dims)));
        return expected_improvement(p.mean, std::sqrt(p.variance), best);
    };
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::vector<double>> cands(static_cast<std::size_t>(n_candidates), std::vector<double>(dims));
    std::vector<double> scores;
    for (auto& c : cands) {
        for (auto& v : c) v = unif(rng);
        scores.push_back(-ei_at(c));
    }
    std::vector<double> best_u;
    double best_ei = -1.0;
    const int starts = std::min(5, n_candidates);
    for (std::size_t idx : top_k(scores, starts)) {
        std::vector<double> u = cands[idx];
        double val = -scores[idx];
        for (double step = 0.1; step >= 1e-3; step *= 0.5) {
            bool moved = true;
            while (moved) {
                moved = false;
                for (std::size_t d = 0; d < dims; ++d) {
                    for (double dir : {-1.0, 1.0}) {
                        auto trial = u;
                        trial[d] = std::clamp(trial[d] + dir * step, 0.0, 1.0);
                        const double v = ei_at(trial);
                        if (v > val) {
                            val = v;
                            u = std::move(trial);
                            moved = true;
                        }
                    }
                }
            }
        }
        if (val > best_ei) {
            best_ei = val;
            best_u = u;
        }
    }
    return best_u;
}

}  // namespace

TuningResult run_bayesian(const SearchSpace& space, const TunerSettings& settings, const Objective& objective) {
    space.validate();
    settings.validate();
    Rng rng(settings.seed);
    TrialRunner runner(settings, objective);
    const std::size_t dims = space.dimensions.size();

    int done = 0;
    {
        std::vector<TrialRequest> requests;
        const int initial = std::min(settings.max_parallel_jobs, settings.max_training_jobs);
        for (int b = 0; b < initial; ++b) {
            requests.push_back({0, b, with_provenance(sample_configuration(space, rng), "bayesian"),
                                settings.max_resource, 0});
        }
        runner.run_phase(std::move(requests));
        done = initial;
    }
    while (done < settings.max_training_jobs) {
        const int batch = std::min(settings.max_parallel_jobs, settings.max_training_jobs - done);
        std::vector<std::vector<double>> xs;
        std::vector<double> ys;
        double worst = -kInf;
        double best = kInf;
        for (const auto& t : runner.trials()) {
            if (!t.failed) {
                worst = std::max(worst, t.loss);
                best = std::min(best, t.loss);
            }
        }
        if (!std::isfinite(best)) best = worst = 0.0;
        for (const auto& t : runner.trials()) {
            xs.push_back(to_unit(space, t.config));
            ys.push_back(t.failed ? worst : t.loss);
        }
        std::vector<TrialRequest> requests;
        for (int b = 0; b < batch; ++b) {
            Eigen::MatrixXd x(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(dims));
            for (std::size_t r = 0; r < xs.size(); ++r) {
                for (std::size_t c = 0; c < dims; ++c) {
                    x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = xs[r][c];
                }
            }
            const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
            const auto gp = gp_fit(x, y);
            const auto u = maximize_ei(gp, best, dims, settings.ei_candidates, rng);
            // Constant liar: the pending point is assumed to score the current best.
            xs.push_back(u);
            ys.push_back(best);
            requests.push_back({0, done + b, with_provenance(from_unit(space, u), "bayesian"), settings.max_resource, 0});
        }
        runner.run_phase(std::move(requests));
        done += batch;
    }
    return runner.finish();
}

TuningResult run_tuning(const SearchSpace& space, const TunerSettings& settings, const Objective& objective) {
    switch (settings.strategy) {
        case Strategy::Hyperband: return run_hyperband(space, settings, objective);
        case Strategy::Bayesian: return run_bayesian(space, settings, objective);
        case Strategy::Random: return run_random_search(space, settings, objective);
    }
    throw ValidationError("unknown strategy");
}

std::string trial_log_header() {
    return "trial_id,strategy,bracket,rung,config_json,resource,loss,wall_time_s";
}

void write_trial_log(std::ostream& out, const std::vector<TrialResult>& trials, bool include_header) {
    if (include_header) out << trial_log_header() << '\n';
    for (const auto& t : trials) {
        out << t.trial_id << ',' << t.config.strategy << ',';
        if (t.config.bracket >= 0) out << t.config.bracket;
        out << ',';
        if (t.config.rung >= 0) out << t.config.rung;
        char wall[32];
        std::snprintf(wall, sizeof wall, "%.6f", t.wall_time_s);
        out << ',' << csv_quote(t.config.values_json().dump()) << ',' << t.resource << ',' << format_double(t.loss)
            << ',' << wall << '\n';
    }
}

}  // namespace autoens
