#include "autoens/analysis/analysis.hpp"
#include "autoens/core/error.hpp"
#include "autoens/core/ingest.hpp"
#include "autoens/core/split.hpp"
#include "autoens/pipeline/experiment.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

using namespace autoens;
namespace fs = std::filesystem;

namespace {

constexpr int kValidationExit = 1;
constexpr int kRuntimeExit = 2;

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

/// "start:stop:step" or a comma-separated list.
std::vector<double> parse_theta_grid(const std::string& text) {
    if (text.empty()) return default_theta_grid();
    std::vector<double> out;
    try {
        if (text.find(':') != std::string::npos) {
            std::stringstream ss(text);
            std::string a, b, c;
            std::getline(ss, a, ':');
            std::getline(ss, b, ':');
            std::getline(ss, c, ':');
            const double start = std::stod(a);
            const double stop = std::stod(b);
            const double step = std::stod(c);
            if (!(step > 0.0) || stop < start) throw ValidationError("theta grid needs start <= stop and step > 0");
            const auto n = static_cast<int>(std::floor((stop - start) / step + 1e-9));
            for (int i = 0; i <= n; ++i) out.push_back(start + step * i);
        } else {
            std::stringstream ss(text);
            std::string cell;
            while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
        }
    } catch (const std::invalid_argument&) {
        throw ValidationError("malformed theta grid '" + text + "'");
    }
    if (out.empty()) throw ValidationError("empty theta grid");
    return out;
}

std::vector<ExperimentRecord> load_nonempty_records(const fs::path& path) {
    auto records = load_records(path);
    if (records.empty()) throw ValidationError("no records in " + path.string());
    return records;
}

int cmd_ingest(const fs::path& csv, const fs::path& manifest_path, const std::string& name,
               std::optional<int> horizon, std::optional<int> seasonality) {
    IngestOptions opt;
    opt.name = name.empty() ? csv.stem().string() : name;
    opt.horizon_k = horizon;
    opt.seasonality_m = seasonality;
    const auto result = ingest_long_csv(csv, {}, opt);
    validate(result.dataset);
    DatasetManifest m;
    m.name = result.dataset.name;
    m.freq = result.dataset.freq;
    m.horizon_k = result.dataset.horizon_k;
    m.seasonality_m = result.dataset.seasonality_m;
    m.source_path = fs::absolute(csv);
    write_manifest(manifest_path, m);
    std::cout << "items: " << result.dataset.size() << "\nrows: " << result.report.rows
              << "\nimputed: " << result.report.imputed << "\nmanifest: " << manifest_path.string() << '\n';
    return 0;
}

int cmd_run(const fs::path& config_path, const std::string& out_dir) {
    const auto j = read_json(config_path);
    const fs::path base = config_path.parent_path();
    std::vector<ExperimentConfig> configs;
    if (j.is_array()) {
        for (const auto& item : j) configs.push_back(experiment_config_from_json(item, base));
    } else {
        configs.push_back(experiment_config_from_json(j, base));
    }
    if (configs.empty()) throw ValidationError("no experiments in " + config_path.string());
    bool any_failed = false;
    for (auto& cfg : configs) {
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        for (const auto& o : run_experiment(cfg)) {
            if (o.failed) {
                any_failed = true;
                std::cerr << o.record.experiment << ' ' << o.record.dataset << ' ' << o.record.version
                          << ": failed in " << o.failed_stage << ": " << o.message << '\n';
            } else {
                std::cout << o.record.experiment << ',' << o.record.dataset << ',' << o.record.version << ','
                          << o.record.error << ',' << o.record.pipeline_latency_s << ',' << o.record.hpo_latency_s
                          << '\n';
            }
        }
    }
    return any_failed ? kRuntimeExit : 0;
}

int cmd_tune(const fs::path& manifest, const std::string& model, TunerSettings settings, const fs::path& out_dir,
             std::uint64_t seed) {
    settings.validate();
    const Algorithm algorithm = algorithm_from_string(model);
    if (!is_neural(algorithm)) throw ValidationError("only mq_lite and deepar_lite are tunable");
    const auto data = load_manifest_dataset(manifest).dataset;
    validate(data);
    const auto split = split_three_way(data);
    const auto [tune_train, tune_validation] = tuning_split(split.train);
    settings.seed = seed;
    const auto tuned = tune_neural(neural_kind(algorithm), tune_train, tune_validation, ModelSettings{}, settings,
                                   default_quantiles(), seed);
    auto log = open_output(out_dir / ("trials_" + model + ".csv"));
    write_trial_log(log, tuned.result.trials);
    nlohmann::json summary{{"algorithm", model},
                           {"strategy", std::string(to_string(settings.strategy))},
                           {"best_config", tuned.result.best.values_json()},
                           {"best_loss", tuned.result.best_loss},
                           {"default_loss", tuned.default_loss},
                           {"cost_s", tuned.result.cost_s},
                           {"latency_s", tuned.result.latency_s},
                           {"trials", tuned.result.trials.size()}};
    open_output(out_dir / "tuning.json") << summary.dump(2) << '\n';
    std::cout << summary.dump(2) << '\n';
    return 0;
}

int cmd_analyze(const std::string& records_path, const std::string& normalized_path, const std::string& tables,
                const std::string& theta_grid, const std::string& strategy, const std::string& compare,
                const fs::path& out_dir) {
    if (records_path.empty() == normalized_path.empty()) {
        throw ValidationError("analyze needs exactly one of --records or --normalized");
    }
    std::vector<ExperimentRecord> records;
    NormalizedTable table;
    if (!records_path.empty()) {
        records = load_nonempty_records(records_path);
        const auto summaries = select_strategy(aggregate(records), strategy);
        if (summaries.empty()) throw ValidationError("no records for strategy '" + strategy + "'");
        table = normalize(summaries);
        for (auto& label : table.labels) label = std::to_string(parse_experiment_label(label).max_training_jobs);
    } else {
        std::ifstream in(normalized_path);
        if (!in) throw ValidationError("cannot open " + normalized_path);
        table = read_normalized_csv(in);
    }

    std::set<std::string> wanted;
    std::stringstream ss(tables);
    std::string t;
    while (std::getline(ss, t, ',')) {
        if (t != "6" && t != "7" && t != "8") throw ValidationError("unknown table '" + t + "' (expected 6, 7 or 8)");
        wanted.insert(t == "8" ? "7" : t);
    }
    const auto grid = theta_sweep(table, parse_theta_grid(theta_grid));
    if (wanted.contains("6")) {
        auto out = open_output(out_dir / "table6.csv");
        write_normalized_csv(out, table);
    }
    if (wanted.contains("7")) {
        auto out = open_output(out_dir / "table7.csv");
        write_tradeoff_csv(out, grid);
    }
    {
        auto svg = open_output(out_dir / "tradeoff.svg");
        write_tradeoff_svg(svg, grid);
    }

    nlohmann::json crossings = nlohmann::json::array();
    for (const auto& x : argmin_crossovers(table, grid)) {
        crossings.push_back({{"from", x.from}, {"to", x.to}, {"theta", x.theta}});
    }
    open_output(out_dir / "crossover.json") << nlohmann::json{{"strategy", strategy}, {"crossovers", crossings}}.dump(2)
                                            << '\n';

    if (!compare.empty() && !records.empty()) {
        const auto comma = compare.find(',');
        if (comma == std::string::npos) throw ValidationError("--compare expects 'StrategyA,StrategyB'");
        const auto c = compare_strategies(records, compare.substr(0, comma), compare.substr(comma + 1));
        open_output(out_dir / "strategy_comparison.json") << to_json(c).dump(2) << '\n';
    }
    std::cout << "wrote analysis for " << table.labels.size() << " configurations to " << out_dir.string() << '\n';
    return 0;
}

void write_bar_svg(const fs::path& path, const std::string& title, const std::vector<std::string>& labels,
                   const std::vector<double>& values) {
    auto out = open_output(path);
    const int bar_h = 18;
    const int left = 150;
    const int width = 560;
    const int height = 40 + static_cast<int>(labels.size()) * bar_h + 10;
    double hi = 0.0;
    for (double v : values) hi = std::max(hi, v);
    if (hi <= 0.0) hi = 1.0;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
    out << "<text x=\"10\" y=\"16\" font-size=\"12\">" << title << "</text>\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = 30 + static_cast<int>(i) * bar_h;
        const int w = static_cast<int>(std::lround((width - left - 80) * values[i] / hi));
        out << "<text x=\"" << left - 6 << "\" y=\"" << y + 12 << "\" text-anchor=\"end\">" << labels[i]
            << "</text>\n";
        out << "<rect x=\"" << left << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << bar_h - 4
            << "\" fill=\"steelblue\"/>\n";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", values[i]);
        out << "<text x=\"" << left + w + 4 << "\" y=\"" << y + 12 << "\">" << buf << "</text>\n";
    }
    out << "</svg>\n";
}

int cmd_report(const fs::path& records_path, const fs::path& svg_dir) {
    const auto records = load_nonempty_records(records_path);
    const auto summaries = aggregate(records);
    std::vector<std::string> labels;
    std::vector<double> err, lat;
    {
        auto csv = open_output(svg_dir / "summary.csv");
        csv << "config,n_runs,mean_error,std_error,mean_hpo_latency_s,std_hpo_latency_s,mean_pipeline_latency_s\n";
        for (const auto& s : summaries) {
            csv << s.label << ',' << s.n_runs << ',' << s.mean_error << ',' << s.std_error << ','
                << s.mean_hpo_latency_s << ',' << s.std_latency << ',' << s.mean_pipeline_latency_s << '\n';
            labels.push_back(s.label);
            err.push_back(s.mean_error);
            lat.push_back(s.mean_hpo_latency_s);
        }
    }
    write_bar_svg(svg_dir / "error.svg", "mean error (avg-wQL) per configuration", labels, err);
    write_bar_svg(svg_dir / "hpo_latency.svg", "mean HPO latency (s) per configuration", labels, lat);
    std::vector<ConfigSummary> tuned;
    for (const auto& s : summaries) {
        if (s.mean_hpo_latency_s > 0.0 && s.mean_error > 0.0) tuned.push_back(s);
    }
    if (!tuned.empty()) {
        auto svg = open_output(svg_dir / "tradeoff.svg");
        write_tradeoff_svg(svg, theta_sweep(normalize(tuned), default_theta_grid()));
    }
    std::cout << "wrote report for " << summaries.size() << " configurations to " << svg_dir.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Forecast ensemble engine: ingest data, run experiments, tune neural models, analyze results"};
    app.require_subcommand(1);

    auto* ingest = app.add_subcommand("ingest", "Ingest a long-format CSV (item_id,timestamp,target) and write a manifest");
    std::string csv_path, manifest_out, dataset_name;
    std::optional<int> horizon, seasonality;
    ingest->add_option("--csv", csv_path, "Input CSV")->required();
    ingest->add_option("--manifest", manifest_out, "Manifest JSON to write")->required();
    ingest->add_option("--name", dataset_name, "Dataset name (default: CSV file stem)");
    ingest->add_option("--horizon", horizon, "Forecast horizon k");
    ingest->add_option("--seasonality", seasonality, "Seasonality period m (default: 7 daily, 24 hourly)");

    auto* run = app.add_subcommand("run", "Run experiments from a JSON config (object or array)");
    std::string config_path, run_out;
    run->add_option("--config", config_path, "Experiment config JSON")->required();
    run->add_option("--out", run_out, "Output directory (overrides output_dir)");

    auto* tune = app.add_subcommand("tune", "Tune one neural model on a dataset's tuning split");
    std::string tune_manifest, tune_model = "mq_lite", tune_strategy = "hyperband", tune_out = "tuning";
    TunerSettings tuner;
    std::uint64_t tune_seed = 0;
    tune->add_option("--manifest", tune_manifest, "Dataset manifest JSON")->required();
    tune->add_option("--model", tune_model, "mq_lite or deepar_lite")->capture_default_str();
    tune->add_option("--strategy", tune_strategy, "hyperband, bayesian or random")->capture_default_str();
    tune->add_option("--jobs", tuner.max_training_jobs, "max_training_jobs")->capture_default_str();
    tune->add_option("--parallel", tuner.max_parallel_jobs, "max_parallel_jobs")->capture_default_str();
    tune->add_option("--max-resource", tuner.max_resource, "R, epochs")->capture_default_str();
    tune->add_option("--eta", tuner.eta, "Hyperband reduction factor")->capture_default_str();
    tune->add_option("--seed", tune_seed, "Random seed")->capture_default_str();
    tune->add_option("--out", tune_out, "Output directory")->capture_default_str();

    auto* analyze = app.add_subcommand("analyze", "Normalized table, cost sweep, crossovers and strategy comparison");
    std::string analyze_records, normalized_input, tables = "6,7", theta_grid = "0:1.56:0.04", strategy = "Hyperband",
                                 compare = "Hyperband,Bayesian", analyze_out = "analysis";
    analyze->add_option("--records", analyze_records, "Records CSV");
    analyze->add_option("--normalized", normalized_input,
                        "Normalized table CSV (config,normalized_error,normalized_latency) instead of records");
    analyze->add_option("--tables", tables, "Tables to emit: 6 (normalized), 7 (cost sweep; 8 is an alias)")
        ->capture_default_str();
    analyze->add_option("--theta-grid", theta_grid, "start:stop:step or comma list")->capture_default_str();
    analyze->add_option("--strategy", strategy, "Strategy whose configurations are normalized")->capture_default_str();
    analyze->add_option("--compare", compare, "Strategy pair to compare; empty to skip")->capture_default_str();
    analyze->add_option("--out", analyze_out, "Output directory")->capture_default_str();

    auto* report = app.add_subcommand("report", "Per-configuration summary CSV and SVG charts");
    std::string report_records, svg_dir = "report";
    report->add_option("--records", report_records, "Records CSV")->required();
    report->add_option("--svg", svg_dir, "Output directory for summary.csv and SVG files")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kValidationExit;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(csv_path, manifest_out, dataset_name, horizon, seasonality);
        if (run->parsed()) return cmd_run(config_path, run_out);
        if (tune->parsed()) {
            tuner.strategy = strategy_from_string(tune_strategy);
            return cmd_tune(tune_manifest, tune_model, tuner, tune_out, tune_seed);
        }
        if (analyze->parsed()) {
            return cmd_analyze(analyze_records, normalized_input, tables, theta_grid, strategy, compare, analyze_out);
        }
        if (report->parsed()) return cmd_report(report_records, svg_dir);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidationExit;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeExit;
    }
    return kValidationExit;
}
