#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "idsbench/table.hpp"

namespace idsbench {

enum class TimestampFormat {
    day_first,    // dd/mm/yyyy HH:MM:SS (CSE-CIC-IDS2018)
    month_first,  // mm/dd/yyyy HH:MM:SS
    iso8601,      // yyyy-mm-dd HH:MM:SS or yyyy-mm-ddTHH:MM:SS
};

enum class DatasetPreset { cicids2018, kdd99, custom };

DatasetPreset parse_dataset_preset(std::string_view name);
std::string_view to_string(DatasetPreset preset);
TimestampFormat parse_timestamp_format(std::string_view name);

struct Schema {
    // Columns the header must contain. Empty means "whatever the header says".
    std::vector<std::string> column_names;
    std::string label_column = "Label";
    std::set<std::string, std::less<>> benign_tokens = {"Benign", "BENIGN", "normal.", "normal"};
    std::vector<std::string> timestamp_columns;
    TimestampFormat timestamp_format = TimestampFormat::day_first;
    // Columns removed to standardize datasets; absent names are ignored.
    std::vector<std::string> drop_columns;
    // When non-empty, only benign rows and rows whose label is listed are read.
    std::set<std::string, std::less<>> label_filter;
    bool drop_constant_columns = true;

    // Throws ConfigError on a broken schema.
    void validate() const;
};

Schema preset_schema(DatasetPreset preset);

// The 41 KDD Cup 1999 feature names followed by the label column.
const std::vector<std::string>& kdd99_header();

struct IngestReport {
    std::size_t rows_read = 0;
    std::size_t rows_dropped_malformed = 0;
    std::size_t rows_dropped_nonfinite = 0;
    // Rows outside label_filter. Not part of rows_read.
    std::size_t rows_skipped_slice = 0;
    std::vector<std::string> columns_dropped;
    std::map<std::string, std::size_t> label_histogram;  // over retained rows
    bool single_class = false;
};

struct LoadedTable {
    ColumnarTable table;
    IngestReport report;
};

// Reads an RFC-4180 CSV with a header row.
// Throws DataError (unreadable file, header mismatch), ConfigError (missing label
// column) or EmptyDatasetError (nothing retained).
LoadedTable load_csv(const std::filesystem::path& path, const Schema& schema);
LoadedTable load_csv(std::istream& in, const Schema& schema, const std::string& source_name = "<stream>");

// Seconds since 1970-01-01T00:00:00 UTC, or nullopt if the text does not parse.
std::optional<double> convert_timestamp(std::string_view raw, TimestampFormat format);

std::vector<Label> binarize_labels(std::span<const std::string> raw_labels,
                                   const std::set<std::string, std::less<>>& benign_tokens);

// Splits one CSV record. Quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_csv_record(std::string_view line);

// Reads one logical CSV record (quoted fields may span lines). False at EOF.
bool read_csv_record(std::istream& in, std::string& record);

}  // namespace idsbench
