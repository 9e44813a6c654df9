#pragma once

#include "autoens/core/time_series.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace autoens {

struct CsvSchema {
    std::string item_column = "item_id";
    std::string timestamp_column = "timestamp";
    std::string target_column = "target";
};

struct IngestReport {
    std::size_t rows = 0;
    std::size_t imputed = 0;  // forward-filled plus zero-filled points
};

struct IngestResult {
    Dataset dataset;
    IngestReport report;
};

/// Options applied after parsing. Unset horizon/seasonality fall back to the
/// frequency default for seasonality and 1 for the horizon.
struct IngestOptions {
    std::string name = "dataset";
    std::optional<int> horizon_k;
    std::optional<int> seasonality_m;
};

IngestResult ingest_long_csv(std::istream& in, const CsvSchema& schema = {},
                             const IngestOptions& options = {});
IngestResult ingest_long_csv(const std::filesystem::path& path, const CsvSchema& schema = {},
                             const IngestOptions& options = {});

void write_long_csv(std::ostream& out, const Dataset& d);

/// ISO-8601 date (YYYY-MM-DD) or date-time (YYYY-MM-DDTHH:MM[:SS][Z]) to epoch seconds.
std::int64_t parse_iso8601(std::string_view text);
std::string format_iso8601(std::int64_t epoch_seconds, Frequency freq);

/// `{name, freq, horizon_k, seasonality_m, source_path}`.
struct DatasetManifest {
    std::string name;
    Frequency freq = Frequency::Daily;
    int horizon_k = 1;
    int seasonality_m = 1;
    std::filesystem::path source_path;
};

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Loads the manifest's CSV (relative paths resolve against the manifest's
/// directory) and applies its metadata.
IngestResult load_manifest_dataset(const std::filesystem::path& manifest_path);

}  // namespace autoens
