#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "idsbench/classifiers.hpp"
#include "idsbench/ingest.hpp"
#include "idsbench/metrics.hpp"
#include "idsbench/model_select.hpp"
#include "idsbench/preprocess.hpp"

namespace idsbench {

// CE1: raw data, default hyperparameters. CE2: preprocessed, defaults. CE3: preprocessed, grid search.
enum class Scenario { ce1, ce2, ce3 };

std::string_view to_string(Scenario scenario);  // "CE1", "CE2", "CE3"
Scenario parse_scenario(std::string_view name);  // case-insensitive
bool uses_preprocessing(Scenario scenario);
bool uses_grid_search(Scenario scenario);

struct SliceSpec {
    std::string name;
    std::vector<std::string> files;  // relative to the data directory unless absolute
    // Attack labels kept alongside benign rows; empty keeps every row.
    std::set<std::string, std::less<>> attack_labels;
    bool balance = true;
};

// Per-attack slices over the CSE-CIC-IDS2018 day files.
std::vector<SliceSpec> cicids2018_slices();
// The whole KDD file as one slice, no balancing.
SliceSpec kdd99_slice();
inline constexpr const char* kKddFileName = "kddcup.data_10_percent.csv";

struct Seeds {
    std::uint64_t split = 42;
    std::uint64_t folds = 42;
    std::uint64_t models = 42;
    std::uint64_t balancing = 42;
    std::uint64_t subsample = 42;
};

struct HarnessConfig {
    DatasetPreset preset = DatasetPreset::kdd99;
    Schema schema;
    std::filesystem::path data_dir;
    std::vector<SliceSpec> slices;
    std::size_t row_budget = 60000;  // 0 disables the cap
    PreprocessConfig preprocess;
    std::vector<Algorithm> algorithms;
    std::map<Algorithm, HyperParams> default_overrides;
    std::map<Algorithm, ParamGrid> grids;
    // Restricts grid search to these algorithms when non-empty; others keep defaults in CE3.
    std::vector<Algorithm> grid_algorithms;
    Seeds seeds;
    std::size_t cv_folds = 5;
    double test_fraction = 0.3;
    std::filesystem::path output_dir = "results";
    unsigned threads = 1;
    // Lets final fits share the thread pool. Timing comparisons are void when set.
    bool parallel = false;
    bool save_models = true;

    // Throws ConfigError.
    void validate() const;
};

// Preset schema, slices, every algorithm and the default grids.
HarnessConfig default_config(DatasetPreset preset);

// JSON config; relative paths resolve against base_dir. Throws ConfigError.
HarnessConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
HarnessConfig load_config(const std::filesystem::path& path);

// Data directory from IDSBENCH_DATA_DIR, else "data".
std::filesystem::path default_data_dir();

struct TimingRecord {
    double fit_seconds = 0.0;
    double predict_total_seconds = 0.0;
    double predict_per_instance_seconds = 0.0;
    std::map<std::string, double> preprocess_stage_seconds;  // empty for CE1

    bool operator==(const TimingRecord&) const = default;
};

struct ReportRow {
    std::string slice;
    Algorithm algorithm = Algorithm::decision_tree;
    Scenario scenario = Scenario::ce1;
    MetricSet metrics;
    TimingRecord timing;
    HyperParams params;  // effective assignment used for the final fit
    bool params_from_grid = false;
    std::size_t rows_input = 0;  // after ingest and row budget
    std::size_t rows_train = 0;
    std::size_t rows_test = 0;
    std::size_t features = 0;
    std::size_t rows_dropped_outlier = 0;
    std::size_t columns_dropped_correlation = 0;
    std::size_t rows_dropped_balancing = 0;
    bool balancing_skipped = false;
    std::uint64_t split_seed = 0;
    double test_fraction = 0.0;
    std::string model_file;  // relative to the output directory; empty when not saved
};

struct ScenarioReport {
    std::vector<ReportRow> rows;  // sorted by (slice order, algorithm order, scenario)
};

struct RunOptions {
    std::vector<Scenario> scenarios = {Scenario::ce1, Scenario::ce2, Scenario::ce3};
    std::string slice;  // empty runs every slice
    std::ostream* log = nullptr;
    bool write_files = true;
};

// Runs every configured (slice, algorithm, scenario) triple. With write_files set, the
// report, per-scenario preprocessing tables, search tables and models go to output_dir.
ScenarioReport run_scenarios(const HarnessConfig& config, const RunOptions& options = {});

// Loads and merges a slice's files, then applies the row budget.
LoadedTable load_slice(const HarnessConfig& config, const SliceSpec& slice);

// Seeded stratified subsample of `budget` rows (all rows when budget is 0 or >= n), ascending.
std::vector<std::size_t> stratified_subsample(std::span<const Label> labels, std::size_t budget, std::uint64_t seed);

// Deterministic columns: metrics at 4 decimals and full precision, confusion counts,
// hyperparameters and drop statistics.
std::string report_csv(const ScenarioReport& report);
// Timing columns keyed by (slice, algorithm, scenario).
std::string timings_csv(const ScenarioReport& report);
std::string report_markdown(const ScenarioReport& report);

// Writes report.csv, timings.csv and report.md into dir.
void emit_report(const ScenarioReport& report, const std::filesystem::path& dir);
// Reads the CSV pair written by emit_report. Throws DataError.
ScenarioReport read_report(const std::filesystem::path& dir);
ScenarioReport parse_report(std::string_view report_text, std::string_view timings_text);

struct AlgorithmComparison {
    Algorithm algorithm = Algorithm::decision_tree;
    // Arithmetic means over slices, keyed by scenario.
    std::map<Scenario, double> mean_fit_seconds;
    std::map<Scenario, double> mean_predict_seconds;
    std::map<Scenario, double> mean_total_seconds;
    std::map<Scenario, MetricSet> mean_metrics;
    // 100 * (t_CE1 - t_CE2) / t_CE1 on fit + predict time; change_pct is its negation.
    double reduction_pct = 0.0;
    double change_pct = 0.0;
    double fit_reduction_pct = 0.0;
    double predict_reduction_pct = 0.0;
    MetricSet delta_ce2_ce1;
    MetricSet delta_ce3_ce2;  // zero when CE3 is absent
    bool has_ce3 = false;
};

struct Comparison {
    std::vector<AlgorithmComparison> algorithms;
};

// Needs CE1 and CE2 rows for the same (slice, algorithm) pairs; CE3 is optional but must
// match too when present. Throws PipelineError listing the missing triples.
Comparison compare_scenarios(const ScenarioReport& report);
double percent_reduction(double before, double after);

std::string comparison_csv(const Comparison& comparison);
std::string comparison_markdown(const Comparison& comparison);

// Four decimals, the display precision of the report tables.
std::string format_metric(double value);

}  // namespace idsbench
