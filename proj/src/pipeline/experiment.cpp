#include "autoens/pipeline/experiment.hpp"

#include "autoens/core/error.hpp"
#include "autoens/core/ingest.hpp"
#include "autoens/core/number_format.hpp"
#include "autoens/core/random.hpp"
#include "autoens/hpo/scheduler.hpp"
#include "autoens/metrics/evaluate.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace autoens {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double round_ms(double s) { return std::round(s * 1000.0) / 1000.0; }

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
    return out;
}

void check_header(const std::string& line) {
    const auto got = split_csv_line(strip_cr(line));
    const auto& want = record_columns();
    if (got == want) return;
    std::vector<std::string> missing;
    std::vector<std::string> unexpected;
    for (const auto& c : want) {
        if (std::find(got.begin(), got.end(), c) == got.end()) missing.push_back(c);
    }
    for (const auto& c : got) {
        if (std::find(want.begin(), want.end(), c) == want.end()) unexpected.push_back(c);
    }
    std::string msg = "records schema mismatch: expected [" + join(want) + "], found [" + join(got) + "]";
    if (!missing.empty()) msg += "; missing: " + join(missing);
    if (!unexpected.empty()) msg += "; unexpected: " + join(unexpected);
    if (missing.empty() && unexpected.empty()) msg += "; columns out of order";
    throw ValidationError(msg);
}

}  // namespace

Dataset DatasetSource::load() const {
    if (manifest.has_value() == synthetic.has_value()) {
        throw ValidationError("dataset needs exactly one of 'manifest' or 'synthetic'");
    }
    if (manifest) return load_manifest_dataset(*manifest).dataset;
    return generate_synthetic(*synthetic, synthetic_seed);
}

nlohmann::json to_json(const SyntheticSpec& s) {
    return {{"name", s.name},
            {"n_items", s.n_items},
            {"n_steps", s.n_steps},
            {"freq", std::string(to_string(s.freq))},
            {"horizon_k", s.horizon_k},
            {"seasonality_m", s.seasonality_m},
            {"level", s.level},
            {"trend_slope", s.trend_slope},
            {"seasonal_amplitude", s.seasonal_amplitude},
            {"noise_sd", s.noise_sd},
            {"item_heterogeneity", s.item_heterogeneity},
            {"start", s.start}};
}

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
    SyntheticSpec s;
    for (const auto& [key, v] : j.items()) {
        if (key == "name") s.name = v.get<std::string>();
        else if (key == "n_items") s.n_items = v.get<std::size_t>();
        else if (key == "n_steps") s.n_steps = v.get<std::size_t>();
        else if (key == "freq") s.freq = frequency_from_string(v.get<std::string>());
        else if (key == "horizon_k") s.horizon_k = v.get<int>();
        else if (key == "seasonality_m") s.seasonality_m = v.get<int>();
        else if (key == "level") s.level = v.get<double>();
        else if (key == "trend_slope") s.trend_slope = v.get<double>();
        else if (key == "seasonal_amplitude") s.seasonal_amplitude = v.get<double>();
        else if (key == "noise_sd") s.noise_sd = v.get<double>();
        else if (key == "item_heterogeneity") s.item_heterogeneity = v.get<double>();
        else if (key == "start") s.start = v.get<std::int64_t>();
        else throw ValidationError("unknown synthetic dataset field '" + key + "'");
    }
    return s;
}

void ExperimentConfig::validate() const {
    if (use_hpo != tuner.has_value()) throw ValidationError("tuner settings must be given exactly when use_hpo is true");
    if (tuner) tuner->validate();
    if (seeds.empty()) throw ValidationError("at least one seed is required");
    check_taus(quantiles);
    for (double required : {0.1, 0.5, 0.9}) {
        if (std::find(quantiles.begin(), quantiles.end(), required) == quantiles.end()) {
            throw ValidationError("quantiles must include 0.1, 0.5 and 0.9");
        }
    }
    models.validate();
    if (ensemble.iterations < 0 || !(ensemble.step_scale > 0.0)) {
        throw ValidationError("ensemble: iterations >= 0 and step_scale > 0");
    }
    if (workers < 1) throw ValidationError("workers must be >= 1");
}

std::string ExperimentConfig::experiment_name() const {
    if (!name.empty()) return name;
    if (!use_hpo) return "without_HPO";
    std::string s(to_string(tuner->strategy));
    s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s + "_iter_" + std::to_string(tuner->max_training_jobs);
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ValidationError("experiment config must be a JSON object");
    ExperimentConfig cfg;
    for (const auto& [key, v] : j.items()) {
        if (key == "name") {
            cfg.name = v.get<std::string>();
        } else if (key == "dataset") {
            for (const auto& [dk, dv] : v.items()) {
                if (dk == "manifest") {
                    std::filesystem::path p = dv.get<std::string>();
                    cfg.dataset.manifest = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
                } else if (dk == "synthetic") {
                    cfg.dataset.synthetic = synthetic_spec_from_json(dv);
                } else if (dk == "seed") {
                    cfg.dataset.synthetic_seed = dv.get<std::uint64_t>();
                } else {
                    throw ValidationError("unknown dataset field '" + dk + "'");
                }
            }
        } else if (key == "use_hpo") {
            cfg.use_hpo = v.get<bool>();
        } else if (key == "tuner") {
            if (!v.is_null()) cfg.tuner = tuner_settings_from_json(v);
        } else if (key == "seeds") {
            cfg.seeds = v.get<std::vector<std::uint64_t>>();
        } else if (key == "quantiles") {
            cfg.quantiles = v.get<std::vector<double>>();
        } else if (key == "output_dir") {
            std::filesystem::path p = v.get<std::string>();
            cfg.output_dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
        } else if (key == "models") {
            cfg.models = model_settings_from_json(v);
        } else if (key == "ensemble") {
            for (const auto& [ek, ev] : v.items()) {
                if (ek == "iterations") cfg.ensemble.iterations = ev.get<int>();
                else if (ek == "step_scale") cfg.ensemble.step_scale = ev.get<double>();
                else throw ValidationError("unknown ensemble field '" + ek + "'");
            }
        } else if (key == "workers") {
            cfg.workers = v.get<int>();
        } else {
            throw ValidationError("unknown experiment field '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
    nlohmann::json dataset = nlohmann::json::object();
    if (cfg.dataset.manifest) dataset["manifest"] = cfg.dataset.manifest->string();
    if (cfg.dataset.synthetic) {
        dataset["synthetic"] = to_json(*cfg.dataset.synthetic);
        dataset["seed"] = cfg.dataset.synthetic_seed;
    }
    nlohmann::json j{{"dataset", dataset},
                     {"use_hpo", cfg.use_hpo},
                     {"seeds", cfg.seeds},
                     {"quantiles", cfg.quantiles},
                     {"models", to_json(cfg.models)},
                     {"ensemble", {{"iterations", cfg.ensemble.iterations}, {"step_scale", cfg.ensemble.step_scale}}},
                     {"workers", cfg.workers}};
    if (!cfg.name.empty()) j["name"] = cfg.name;
    if (cfg.tuner) j["tuner"] = to_json(*cfg.tuner);
    if (!cfg.output_dir.empty()) j["output_dir"] = cfg.output_dir.string();
    return j;
}

std::string version_label(std::size_t seed_index) {
    std::string s;
    std::size_t n = seed_index + 1;
    while (n > 0) {
        --n;
        s.insert(s.begin(), static_cast<char>('a' + n % 26));
        n /= 26;
    }
    return s;
}

void check_tuning_ranges(const SplitRanges& ranges, std::size_t tune_train_length,
                         std::size_t tune_validation_length) {
    if (tune_train_length + tune_validation_length > ranges.train.length()) {
        throw Error("tuning windows reach past the training window (" +
                    std::to_string(tune_train_length + tune_validation_length) + " > " +
                    std::to_string(ranges.train.length()) + ")");
    }
}

MetricReport backtest(const std::vector<QuantileForecast>& forecasts, const Dataset& window, const Dataset& history) {
    if (window.items.empty()) throw ValidationError("backtest: empty window");
    std::vector<MetricReport> reports;
    for (const auto& ts : window.items) {
        const auto it = std::find_if(forecasts.begin(), forecasts.end(),
                                     [&](const QuantileForecast& f) { return f.item_id() == ts.item_id; });
        if (it == forecasts.end()) throw ValidationError("backtest: no forecast for item '" + ts.item_id + "'");
        if (it->horizon() != ts.size()) {
            throw ValidationError("backtest: forecast length " + std::to_string(it->horizon()) +
                                  " != window length " + std::to_string(ts.size()) + " for item '" + ts.item_id +
                                  "'");
        }
        reports.push_back(evaluate_forecast(ts.values, *it, history.item(ts.item_id).values, window.seasonality_m));
    }
    return mean_report(reports);
}

RunOutcome run_pipeline(const ExperimentConfig& cfg, const Dataset& data, std::size_t seed_index) {
    const auto t_run = Clock::now();
    RunOutcome out;
    out.seed = cfg.seeds.at(seed_index);
    out.record.experiment = cfg.experiment_name();
    out.record.dataset = data.name;
    out.record.version = version_label(seed_index);
    const std::uint64_t seed = out.seed;

    std::string stage;
    try {
        stage = "data_prep";
        auto t0 = Clock::now();
        const SplitSet split = split_three_way(data);
        const auto [tune_train, tune_validation] = tuning_split(split.train);
        for (const auto& ts : data.items) {
            check_tuning_ranges(three_way_ranges(ts.size(), data.horizon_k), tune_train.item(ts.item_id).size(),
                                tune_validation.item(ts.item_id).size());
        }
        const Dataset history = concat(split.train, split.test);
        out.timings.data_prep_s = seconds_since(t0);

        stage = "hpo";
        t0 = Clock::now();
        std::map<Algorithm, NeuralHyperparams> neural_hp;
        for (Algorithm a : cfg.models.algorithms) {
            if (!is_neural(a)) continue;
            neural_hp[a] = cfg.models.neural;
            if (!cfg.use_hpo) continue;
            TunerSettings ts = *cfg.tuner;
            ts.seed = derive_seed({seed, static_cast<std::uint64_t>(a), 1});
            const auto tuned = tune_neural(neural_kind(a), tune_train, tune_validation, cfg.models, ts, cfg.quantiles,
                                           derive_seed({seed, static_cast<std::uint64_t>(a), 2}));
            neural_hp[a] = tuned.best;
            out.record.hpo_latency_s += tuned.result.latency_s;
            out.tuning.push_back({std::string(to_string(a)), tuned.result.best.values_json(), tuned.result.best_loss,
                                  tuned.default_loss, tuned.result.cost_s, tuned.result.latency_s,
                                  tuned.result.trials.size()});
            for (const auto& t : tuned.result.trials) {
                out.trials.push_back(t);
                out.trial_models.emplace_back(to_string(a));
            }
        }
        out.timings.hpo_s = seconds_since(t0);

        auto train_all = [&](const Dataset& train, std::uint64_t stage_tag) {
            std::vector<AlgorithmForecasts> fc;
            for (Algorithm a : cfg.models.algorithms) {
                const std::uint64_t s = derive_seed({seed, static_cast<std::uint64_t>(a), stage_tag});
                if (is_neural(a)) {
                    fc.push_back(forecast_neural_algorithm(a, train, neural_hp.at(a), cfg.models.final_epochs,
                                                           cfg.quantiles, cfg.models, s));
                } else {
                    fc.push_back(forecast_classical(a, train, cfg.quantiles, cfg.models, s));
                }
            }
            return fc;
        };

        stage = "model_training";
        t0 = Clock::now();
        const auto test_forecasts = train_all(split.train, 3);
        out.timings.model_training_s = seconds_since(t0);

        stage = "final_training";
        t0 = Clock::now();
        out.validation_forecasts = train_all(history, 4);
        out.timings.final_training_s = seconds_since(t0);

        stage = "ensemble";
        t0 = Clock::now();
        BasinHoppingSettings bh = cfg.ensemble;
        bh.seed = derive_seed({seed, 5});
        out.ensemble = fit_ensemble(test_forecasts, split.test, out.validation_forecasts, split.validation, history, bh);
        out.record.error = out.ensemble.objective;
        out.timings.ensemble_s = seconds_since(t0);
    } catch (const std::exception& e) {
        out.failed = true;
        out.failed_stage = stage;
        out.message = e.what();
        out.record.error = std::numeric_limits<double>::quiet_NaN();
    }
    out.record.hpo_latency_s = round_ms(out.record.hpo_latency_s);
    out.record.pipeline_latency_s = round_ms(seconds_since(t_run));
    return out;
}

std::vector<RunOutcome> run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const Dataset data = cfg.dataset.load();
    validate(data);
    std::vector<RunOutcome> outcomes(cfg.seeds.size());
    run_parallel(cfg.seeds.size(), cfg.workers, [&](std::size_t i) { outcomes[i] = run_pipeline(cfg, data, i); });

    if (!cfg.output_dir.empty()) {
        std::vector<ExperimentRecord> ok;
        for (const auto& o : outcomes) {
            write_run_artifacts(cfg.output_dir / o.record.experiment / o.record.dataset / o.record.version, o);
            if (!o.failed) ok.push_back(o.record);
        }
        append_records(cfg.output_dir / "records.csv", ok);
    }
    return outcomes;
}

const std::vector<std::string>& record_columns() {
    static const std::vector<std::string> cols{"Experiment", "Dataset", "Version", "Error", "Pipeline", "HPO"};
    return cols;
}

void write_records(std::ostream& out, const std::vector<ExperimentRecord>& records, bool include_header) {
    if (include_header) {
        for (std::size_t i = 0; i < record_columns().size(); ++i) out << (i ? "," : "") << record_columns()[i];
        out << '\n';
    }
    for (const auto& r : records) {
        out << r.experiment << ',' << r.dataset << ',' << r.version << ',' << format_double(r.error) << ','
            << format_double(r.pipeline_latency_s) << ',' << format_double(r.hpo_latency_s) << '\n';
    }
}

std::vector<ExperimentRecord> read_records(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("records file is empty");
    check_header(line);
    std::vector<ExperimentRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != record_columns().size()) {
            throw ValidationError("records line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(record_columns().size()) + " fields, got " +
                                  std::to_string(f.size()));
        }
        try {
            out.push_back({f[0], f[1], f[2], parse_double(f[3]), parse_double(f[4]), parse_double(f[5])});
        } catch (const ValidationError& e) {
            throw ValidationError("records line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void save_records(const std::filesystem::path& path, const std::vector<ExperimentRecord>& records) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    write_records(out, records);
}

void append_records(const std::filesystem::path& path, const std::vector<ExperimentRecord>& records) {
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    if (!fresh) {
        std::ifstream in(path);
        std::string header;
        std::getline(in, header);
        check_header(header);
    } else if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot write " + path.string());
    write_records(out, records, fresh);
}

std::vector<ExperimentRecord> load_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open records file " + path.string());
    return read_records(in);
}

void write_forecasts_csv(std::ostream& out, const std::vector<QuantileForecast>& forecasts) {
    out << "item,step,tau,value\n";
    for (const auto& f : forecasts) {
        for (std::size_t k = 0; k < f.horizon(); ++k) {
            for (std::size_t q = 0; q < f.num_quantiles(); ++q) {
                out << f.item_id() << ',' << k + 1 << ',' << format_double(f.taus()[q]) << ','
                    << format_double(f.at(q, k)) << '\n';
            }
        }
    }
}

std::vector<QuantileForecast> read_forecasts_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || strip_cr(line) != "item,step,tau,value") {
        throw ValidationError("forecast CSV must start with 'item,step,tau,value'");
    }
    struct Rows {
        std::map<std::size_t, std::map<double, double>> by_step;
    };
    std::vector<std::string> order;
    std::map<std::string, Rows> items;
    while (std::getline(in, line)) {
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 4) throw ValidationError("forecast CSV row needs 4 fields: " + line);
        if (!items.contains(f[0])) order.push_back(f[0]);
        const auto step = static_cast<std::size_t>(parse_double(f[1]));
        items[f[0]].by_step[step][parse_double(f[2])] = parse_double(f[3]);
    }
    std::vector<QuantileForecast> out;
    for (const auto& id : order) {
        const auto& rows = items.at(id).by_step;
        std::vector<double> taus;
        for (const auto& [tau, v] : rows.begin()->second) taus.push_back(tau);
        QuantileForecast f(id, taus, rows.size());
        std::size_t k = 0;
        for (const auto& [step, levels] : rows) {
            if (step != k + 1 || levels.size() != taus.size()) {
                throw ValidationError("forecast CSV for item '" + id + "' has gaps");
            }
            std::size_t q = 0;
            for (const auto& [tau, v] : levels) f.at(q++, k) = v;
            ++k;
        }
        out.push_back(std::move(f));
    }
    return out;
}

void write_run_artifacts(const std::filesystem::path& dir, const RunOutcome& outcome) {
    std::filesystem::create_directories(dir);
    auto open = [&](const std::string& name) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw Error("cannot write " + (dir / name).string());
        return f;
    };
    if (!outcome.failed) {
        auto f = open("forecasts.csv");
        write_forecasts_csv(f, outcome.ensemble.forecasts);
        auto e = open("ensemble.json");
        e << to_json(outcome.ensemble).dump(2) << '\n';
    }
    std::map<std::string, std::vector<TrialResult>> by_model;
    for (std::size_t i = 0; i < outcome.trials.size(); ++i) by_model[outcome.trial_models[i]].push_back(outcome.trials[i]);
    for (const auto& [model, trials] : by_model) {
        auto f = open("trials_" + model + ".csv");
        write_trial_log(f, trials);
    }

    nlohmann::json tuning = nlohmann::json::array();
    for (const auto& t : outcome.tuning) {
        tuning.push_back({{"algorithm", t.algorithm},
                          {"best_config", t.best_config},
                          {"best_loss", t.best_loss},
                          {"default_loss", t.default_loss},
                          {"cost_s", t.cost_s},
                          {"latency_s", t.latency_s},
                          {"trials", t.trials}});
    }
    nlohmann::json singles = nlohmann::json::object();
    for (const auto& [name, v] : outcome.ensemble.single_model_avg_wql) singles[name] = v;
    const auto& r = outcome.record;
    nlohmann::json summary{
        {"experiment", r.experiment},
        {"dataset", r.dataset},
        {"version", r.version},
        {"seed", outcome.seed},
        {"failed", outcome.failed},
        {"error", std::isfinite(r.error) ? nlohmann::json(r.error) : nullptr},
        {"pipeline_latency_s", r.pipeline_latency_s},
        {"hpo_latency_s", r.hpo_latency_s},
        {"timings",
         {{"data_prep_s", outcome.timings.data_prep_s},
          {"hpo_s", outcome.timings.hpo_s},
          {"model_training_s", outcome.timings.model_training_s},
          {"final_training_s", outcome.timings.final_training_s},
          {"ensemble_s", outcome.timings.ensemble_s}}},
        {"tuning", tuning},
        {"single_model_validation_avg_wql", singles}};
    if (outcome.failed) {
        summary["failed_stage"] = outcome.failed_stage;
        summary["message"] = outcome.message;
    }
    auto s = open("summary.json");
    s << summary.dump(2) << '\n';
}

}  // namespace autoens
