#include "autoens/core/ingest.hpp"

#include "autoens/core/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

namespace autoens {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

int parse_int(std::string_view text, std::size_t pos, std::size_t len) {
    if (pos + len > text.size()) throw ValidationError("truncated timestamp '" + std::string(text) + "'");
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
    if (ec != std::errc{} || ptr != text.data() + pos + len) {
        throw ValidationError("bad timestamp '" + std::string(text) + "'");
    }
    return value;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

struct RawPoint {
    std::int64_t ts;
    double value;  // NaN marks a missing target
    std::size_t line;
};

}  // namespace

std::int64_t parse_iso8601(std::string_view text) {
    using namespace std::chrono;
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') {
        throw ValidationError("bad timestamp '" + std::string(text) + "'");
    }
    const year_month_day ymd{year{parse_int(text, 0, 4)}, month{static_cast<unsigned>(parse_int(text, 5, 2))},
                             day{static_cast<unsigned>(parse_int(text, 8, 2))}};
    if (!ymd.ok()) throw ValidationError("invalid date '" + std::string(text) + "'");
    std::int64_t secs = sys_days{ymd}.time_since_epoch().count() * std::int64_t{86400};
    if (text.size() == 10) return secs;
    if (text[10] != 'T' && text[10] != ' ') throw ValidationError("bad timestamp '" + std::string(text) + "'");
    const int hh = parse_int(text, 11, 2);
    if (text.size() < 16 || text[13] != ':') throw ValidationError("bad timestamp '" + std::string(text) + "'");
    const int mm = parse_int(text, 14, 2);
    int ss = 0;
    std::size_t pos = 16;
    if (text.size() > 16 && text[16] == ':') {
        ss = parse_int(text, 17, 2);
        pos = 19;
    }
    std::string_view rest = text.substr(pos);
    if (!(rest.empty() || rest == "Z" || rest == "+00:00")) {
        throw ValidationError("unsupported timezone in '" + std::string(text) + "'");
    }
    if (hh > 23 || mm > 59 || ss > 60) throw ValidationError("invalid time '" + std::string(text) + "'");
    return secs + hh * 3600 + mm * 60 + ss;
}

std::string format_iso8601(std::int64_t epoch_seconds, Frequency freq) {
    using namespace std::chrono;
    const auto days_since = static_cast<int>(std::floor(static_cast<double>(epoch_seconds) / 86400.0));
    const year_month_day ymd{sys_days{days{days_since}}};
    const std::int64_t rem = epoch_seconds - std::int64_t{days_since} * 86400;
    char buf[32];
    if (freq == Frequency::Daily && rem == 0) {
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    } else {
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                      static_cast<int>(rem / 3600), static_cast<int>((rem % 3600) / 60),
                      static_cast<int>(rem % 60));
    }
    return buf;
}

IngestResult ingest_long_csv(std::istream& in, const CsvSchema& schema, const IngestOptions& options) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty CSV: missing header");
    const auto header = split_csv_line(line);
    auto column = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ValidationError("CSV header lacks column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t item_col = column(schema.item_column);
    const std::size_t ts_col = column(schema.timestamp_column);
    const std::size_t target_col = column(schema.target_column);

    // std::map keeps item order deterministic; first-seen order is kept separately.
    std::map<std::string, std::vector<RawPoint>> points;
    std::vector<std::string> order;
    IngestResult result;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
        }
        RawPoint p{};
        p.line = line_no;
        try {
            p.ts = parse_iso8601(fields[ts_col]);
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
        }
        const std::string& target = fields[target_col];
        if (target.empty() || target == "NaN" || target == "nan" || target == "NA") {
            p.value = std::numeric_limits<double>::quiet_NaN();
        } else {
            auto [ptr, ec] = std::from_chars(target.data(), target.data() + target.size(), p.value);
            if (ec != std::errc{} || ptr != target.data() + target.size() || !std::isfinite(p.value)) {
                throw ValidationError("line " + std::to_string(line_no) + ": bad target '" + target + "'");
            }
        }
        const std::string& id = fields[item_col];
        if (id.empty()) throw ValidationError("line " + std::to_string(line_no) + ": empty item_id");
        auto& series = points[id];
        if (series.empty()) order.push_back(id);
        if (!series.empty()) {
            if (p.ts == series.back().ts) {
                throw ValidationError("line " + std::to_string(line_no) + ": duplicate (item, timestamp) (" + id +
                                      ", " + fields[ts_col] + ")");
            }
            if (p.ts < series.back().ts) {
                throw ValidationError("line " + std::to_string(line_no) + ": timestamps not increasing for item '" +
                                      id + "'");
            }
        }
        series.push_back(p);
        ++result.report.rows;
    }
    if (order.empty()) throw ValidationError("CSV contains no data rows");

    // Each item's frequency is its smallest spacing; all items must agree.
    std::optional<std::int64_t> step;
    std::string step_item;
    for (const auto& id : order) {
        const auto& s = points[id];
        if (s.size() < 2) continue;
        std::int64_t min_gap = std::numeric_limits<std::int64_t>::max();
        for (std::size_t i = 1; i < s.size(); ++i) min_gap = std::min(min_gap, s[i].ts - s[i - 1].ts);
        if (!step) {
            step = min_gap;
            step_item = id;
        } else if (*step != min_gap) {
            throw ValidationError("mixed frequencies: item '" + step_item + "' has spacing " +
                                  std::to_string(*step) + "s, item '" + id + "' has " + std::to_string(min_gap) + "s");
        }
    }
    Frequency freq = Frequency::Daily;
    if (step) {
        if (*step == 3600) {
            freq = Frequency::Hourly;
        } else if (*step != 86400) {
            throw ValidationError("unsupported spacing of " + std::to_string(*step) + "s (need hourly or daily)");
        }
    }
    const std::int64_t dt = step_seconds(freq);

    Dataset& d = result.dataset;
    d.name = options.name;
    d.freq = freq;
    d.horizon_k = options.horizon_k.value_or(1);
    d.seasonality_m = options.seasonality_m.value_or(default_seasonality(freq));
    for (const auto& id : order) {
        const auto& s = points[id];
        TimeSeries ts;
        ts.item_id = id;
        ts.freq = freq;
        ts.start = s.front().ts;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i > 0) {
                const std::int64_t gap = s[i].ts - s[i - 1].ts;
                if (gap % dt != 0) {
                    throw ValidationError("line " + std::to_string(s[i].line) + ": timestamp off the " +
                                          std::string(to_string(freq)) + " grid for item '" + id + "'");
                }
                for (std::int64_t g = 1; g < gap / dt; ++g) {
                    ts.values.push_back(std::numeric_limits<double>::quiet_NaN());
                }
            }
            ts.values.push_back(s[i].value);
        }
        // Forward fill, then zero fill whatever leads the series.
        double last = std::numeric_limits<double>::quiet_NaN();
        for (double& v : ts.values) {
            if (std::isnan(v)) {
                v = std::isnan(last) ? 0.0 : last;
                ++result.report.imputed;
            } else {
                last = v;
            }
        }
        d.items.push_back(std::move(ts));
    }
    validate(d);
    return result;
}

IngestResult ingest_long_csv(const std::filesystem::path& path, const CsvSchema& schema,
                             const IngestOptions& options) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    return ingest_long_csv(in, schema, options);
}

void write_long_csv(std::ostream& out, const Dataset& d) {
    out << "item_id,timestamp,target\n";
    const std::int64_t dt = step_seconds(d.freq);
    for (const auto& ts : d.items) {
        for (std::size_t i = 0; i < ts.size(); ++i) {
            out << ts.item_id << ',' << format_iso8601(ts.start + static_cast<std::int64_t>(i) * dt, d.freq) << ','
                << format_double(ts.values[i]) << '\n';
        }
    }
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open manifest '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("manifest '" + path.string() + "': " + e.what());
    }
    DatasetManifest m;
    try {
        m.name = j.at("name").get<std::string>();
        m.freq = frequency_from_string(j.at("freq").get<std::string>());
        m.horizon_k = j.at("horizon_k").get<int>();
        m.seasonality_m = j.value("seasonality_m", default_seasonality(m.freq));
        m.source_path = j.at("source_path").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("manifest '" + path.string() + "': " + e.what());
    }
    if (m.horizon_k < 1 || m.seasonality_m < 1) {
        throw ValidationError("manifest '" + path.string() + "': horizon_k and seasonality_m must be positive");
    }
    return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
    nlohmann::ordered_json j;
    j["name"] = m.name;
    j["freq"] = std::string(to_string(m.freq));
    j["horizon_k"] = m.horizon_k;
    j["seasonality_m"] = m.seasonality_m;
    j["source_path"] = m.source_path.string();
    std::ofstream out(path);
    if (!out) throw Error("cannot write manifest '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

IngestResult load_manifest_dataset(const std::filesystem::path& manifest_path) {
    const DatasetManifest m = read_manifest(manifest_path);
    std::filesystem::path source = m.source_path;
    if (source.is_relative()) source = manifest_path.parent_path() / source;
    IngestOptions opts;
    opts.name = m.name;
    opts.horizon_k = m.horizon_k;
    opts.seasonality_m = m.seasonality_m;
    IngestResult r = ingest_long_csv(source, CsvSchema{}, opts);
    if (r.dataset.freq != m.freq) {
        throw ValidationError("manifest declares " + std::string(to_string(m.freq)) + " but data is " +
                              std::string(to_string(r.dataset.freq)));
    }
    return r;
}

}  // namespace autoens
