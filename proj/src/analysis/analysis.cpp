#include "autoens/analysis/analysis.hpp"

#include "autoens/core/error.hpp"
#include "autoens/core/number_format.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>

namespace autoens {

namespace {

double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double population_sd(std::span<const double> v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::size_t index_of(const NormalizedTable& table, const std::string& label) {
    const auto it = std::find(table.labels.begin(), table.labels.end(), label);
    if (it == table.labels.end()) throw ValidationError("unknown configuration '" + label + "'");
    return static_cast<std::size_t>(it - table.labels.begin());
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

}  // namespace

ExperimentLabel parse_experiment_label(const std::string& experiment) {
    const auto pos = experiment.find("_iter_");
    if (pos == std::string::npos) return {experiment, 0};
    ExperimentLabel l{experiment.substr(0, pos), 0};
    try {
        l.max_training_jobs = std::stoi(experiment.substr(pos + 6));
    } catch (const std::exception&) {
        throw ValidationError("malformed experiment label '" + experiment + "'");
    }
    return l;
}

std::vector<ConfigSummary> aggregate(const std::vector<ExperimentRecord>& records) {
    if (records.empty()) throw ValidationError("aggregate: no records");
    std::vector<std::string> order;
    std::map<std::string, std::vector<const ExperimentRecord*>> groups;
    for (const auto& r : records) {
        if (!groups.contains(r.experiment)) order.push_back(r.experiment);
        groups[r.experiment].push_back(&r);
    }
    std::vector<ConfigSummary> out;
    for (const auto& label : order) {
        const auto& g = groups.at(label);
        std::vector<double> err, lat, pipe;
        std::map<std::string, std::vector<double>> by_dataset;
        for (const auto* r : g) {
            err.push_back(r->error);
            lat.push_back(r->hpo_latency_s);
            pipe.push_back(r->pipeline_latency_s);
            by_dataset[r->dataset].push_back(r->hpo_latency_s);
        }
        std::vector<double> dataset_means;
        for (const auto& [name, v] : by_dataset) dataset_means.push_back(mean(v));
        out.push_back({label, mean(err), population_sd(err), mean(lat), population_sd(lat), mean(pipe),
                       mean(dataset_means), g.size()});
    }
    return out;
}

std::vector<ConfigSummary> select_strategy(const std::vector<ConfigSummary>& summaries, const std::string& strategy) {
    std::vector<ConfigSummary> out;
    for (const auto& s : summaries) {
        if (parse_experiment_label(s.label).strategy == strategy) out.push_back(s);
    }
    std::stable_sort(out.begin(), out.end(), [](const ConfigSummary& a, const ConfigSummary& b) {
        return parse_experiment_label(a.label).max_training_jobs < parse_experiment_label(b.label).max_training_jobs;
    });
    return out;
}

std::vector<double> normalize(std::span<const double> values) {
    if (values.empty()) throw ValidationError("normalize: no values");
    double total = 0.0;
    for (double v : values) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("normalize: values must be positive and finite");
        total += v;
    }
    std::vector<double> out;
    for (double v : values) out.push_back(v / total);
    return out;
}

NormalizedTable normalize(const std::vector<ConfigSummary>& summaries) {
    NormalizedTable t;
    std::vector<double> err, lat;
    for (const auto& s : summaries) {
        t.labels.push_back(s.label);
        err.push_back(s.mean_error);
        lat.push_back(s.mean_hpo_latency_s);
    }
    t.error = normalize(err);
    t.latency = normalize(lat);
    return t;
}

std::vector<double> tradeoff_cost(double theta, const NormalizedTable& table) {
    std::vector<double> out;
    for (std::size_t c = 0; c < table.labels.size(); ++c) {
        out.push_back(theta * table.latency[c] + (1.0 - theta) * table.error[c]);
    }
    return out;
}

double crossover_theta(const NormalizedTable& table, const std::string& config_a, const std::string& config_b) {
    const auto a = index_of(table, config_a);
    const auto b = index_of(table, config_b);
    // theta * (lat_a - err_a - lat_b + err_b) = err_b - err_a
    const double slope = (table.latency[a] - table.error[a]) - (table.latency[b] - table.error[b]);
    if (slope == 0.0) throw Error("no crossover: cost lines of '" + config_a + "' and '" + config_b + "' are parallel");
    return (table.error[b] - table.error[a]) / slope;
}

std::vector<double> default_theta_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 39; ++i) g.push_back(static_cast<double>(i) / 25.0);
    return g;
}

TradeoffGrid theta_sweep(const NormalizedTable& table, std::span<const double> thetas) {
    if (thetas.empty()) throw ValidationError("theta_sweep: empty grid");
    if (table.labels.empty()) throw ValidationError("theta_sweep: no configurations");
    TradeoffGrid g;
    g.thetas.assign(thetas.begin(), thetas.end());
    g.labels = table.labels;
    for (double theta : thetas) {
        auto cost = tradeoff_cost(theta, table);
        g.argmin.push_back(static_cast<std::size_t>(std::min_element(cost.begin(), cost.end()) - cost.begin()));
        g.cost.push_back(std::move(cost));
    }
    return g;
}

std::vector<Crossover> argmin_crossovers(const NormalizedTable& table, const TradeoffGrid& grid) {
    std::vector<Crossover> out;
    for (std::size_t i = 1; i < grid.argmin.size(); ++i) {
        if (grid.argmin[i] == grid.argmin[i - 1]) continue;
        const auto& from = grid.labels[grid.argmin[i - 1]];
        const auto& to = grid.labels[grid.argmin[i]];
        out.push_back({from, to, crossover_theta(table, from, to)});
    }
    return out;
}

void write_normalized_csv(std::ostream& out, const NormalizedTable& table) {
    out << "config,normalized_error,normalized_latency\n";
    for (std::size_t c = 0; c < table.labels.size(); ++c) {
        out << table.labels[c] << ',' << fixed(table.error[c], 6) << ',' << fixed(table.latency[c], 6) << '\n';
    }
}

NormalizedTable read_normalized_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("normalized table is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "config,normalized_error,normalized_latency") {
        throw ValidationError("normalized table header must be 'config,normalized_error,normalized_latency'");
    }
    NormalizedTable t;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
            throw ValidationError("normalized table line " + std::to_string(line_no) + " needs 3 fields");
        }
        t.labels.push_back(line.substr(0, c1));
        t.error.push_back(parse_double(line.substr(c1 + 1, c2 - c1 - 1)));
        t.latency.push_back(parse_double(line.substr(c2 + 1)));
    }
    if (t.labels.empty()) throw ValidationError("normalized table has no rows");
    return t;
}

void write_tradeoff_csv(std::ostream& out, const TradeoffGrid& grid) {
    out << "theta";
    for (const auto& l : grid.labels) out << ',' << l;
    out << ",argmin\n";
    for (std::size_t i = 0; i < grid.thetas.size(); ++i) {
        out << fixed(grid.thetas[i], 2);
        for (double c : grid.cost[i]) out << ',' << fixed(c, 5);
        out << ',' << grid.labels[grid.argmin[i]] << '\n';
    }
}

void write_tradeoff_svg(std::ostream& out, const TradeoffGrid& grid) {
    const int cell_w = 90;
    const int cell_h = 14;
    const int left = 60;
    const int top = 40;
    const auto n_cols = static_cast<int>(grid.labels.size());
    const auto n_rows = static_cast<int>(grid.thetas.size());
    const int width = left + n_cols * cell_w + 20;
    const int height = top + n_rows * cell_h + 30;

    double lo = INFINITY;
    double hi = -INFINITY;
    for (const auto& row : grid.cost) {
        for (double c : row) {
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
    }
    const double span = hi > lo ? hi - lo : 1.0;

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
    out << "<text x=\"" << left << "\" y=\"14\" font-size=\"12\">cost = theta * latency + (1 - theta) * error</text>\n";
    for (int c = 0; c < n_cols; ++c) {
        out << "<text x=\"" << left + c * cell_w + cell_w / 2 << "\" y=\"" << top - 6
            << "\" text-anchor=\"middle\">" << xml_escape(grid.labels[static_cast<std::size_t>(c)]) << "</text>\n";
    }
    for (int r = 0; r < n_rows; ++r) {
        const auto ri = static_cast<std::size_t>(r);
        const int y = top + r * cell_h;
        out << "<text x=\"" << left - 6 << "\" y=\"" << y + cell_h - 3 << "\" text-anchor=\"end\">"
            << fixed(grid.thetas[ri], 2) << "</text>\n";
        for (int c = 0; c < n_cols; ++c) {
            const auto ci = static_cast<std::size_t>(c);
            const double t = (grid.cost[ri][ci] - lo) / span;
            const int red = static_cast<int>(std::lround(255.0 * t));
            const int blue = 255 - red;
            out << "<rect x=\"" << left + c * cell_w << "\" y=\"" << y << "\" width=\"" << cell_w << "\" height=\""
                << cell_h << "\" fill=\"rgb(" << red << ",96," << blue << ")\"";
            if (grid.argmin[ri] == ci) out << " stroke=\"black\" stroke-width=\"2\"";
            out << "/>\n";
        }
    }
    out << "<text x=\"" << left << "\" y=\"" << height - 10
        << "\">rows: theta; columns: configuration; outlined cell: lowest cost</text>\n";
    out << "</svg>\n";
}

StrategyComparison compare_strategies(const std::vector<ExperimentRecord>& records, const std::string& strategy_a,
                                      const std::string& strategy_b) {
    const auto summaries = aggregate(records);
    const auto a = select_strategy(summaries, strategy_a);
    const auto b = select_strategy(summaries, strategy_b);
    StrategyComparison out;
    out.strategy_a = strategy_a;
    out.strategy_b = strategy_b;
    std::vector<double> lat_a, lat_b, err_changes, lat_changes;
    for (const auto& sa : a) {
        const int jobs = parse_experiment_label(sa.label).max_training_jobs;
        const auto it = std::find_if(b.begin(), b.end(), [&](const ConfigSummary& sb) {
            return parse_experiment_label(sb.label).max_training_jobs == jobs;
        });
        if (it == b.end()) continue;
        StrategyPair p;
        p.max_training_jobs = jobs;
        p.mean_error_a = sa.mean_error;
        p.mean_error_b = it->mean_error;
        p.mean_latency_a = sa.mean_hpo_latency_s;
        p.mean_latency_b = it->mean_hpo_latency_s;
        p.error_change = p.mean_error_b != 0.0 ? (p.mean_error_a - p.mean_error_b) / p.mean_error_b : 0.0;
        p.latency_change = p.mean_latency_b != 0.0 ? (p.mean_latency_a - p.mean_latency_b) / p.mean_latency_b : 0.0;
        out.pairs.push_back(p);
        lat_a.push_back(p.mean_latency_a);
        lat_b.push_back(p.mean_latency_b);
        err_changes.push_back(p.error_change);
        lat_changes.push_back(p.latency_change);
    }
    if (out.pairs.empty()) {
        throw Error("no matched (max_training_jobs) pairs between '" + strategy_a + "' and '" + strategy_b + "'");
    }
    out.mean_error_change = mean(err_changes);
    out.mean_latency_change = mean(lat_changes);
    out.latency_sd_a = population_sd(lat_a);
    out.latency_sd_b = population_sd(lat_b);
    return out;
}

nlohmann::json to_json(const StrategyComparison& c) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : c.pairs) {
        pairs.push_back({{"max_training_jobs", p.max_training_jobs},
                         {"mean_error_a", p.mean_error_a},
                         {"mean_error_b", p.mean_error_b},
                         {"mean_hpo_latency_a", p.mean_latency_a},
                         {"mean_hpo_latency_b", p.mean_latency_b},
                         {"error_change", p.error_change},
                         {"latency_change", p.latency_change}});
    }
    return {{"strategy_a", c.strategy_a},
            {"strategy_b", c.strategy_b},
            {"pairs", pairs},
            {"mean_error_change", c.mean_error_change},
            {"mean_latency_change", c.mean_latency_change},
            {"latency_sd_a", c.latency_sd_a},
            {"latency_sd_b", c.latency_sd_b}};
}

}  // namespace autoens
