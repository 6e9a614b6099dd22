#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "idsbench/table.hpp"

namespace idsbench {

enum class FitScope { whole_dataset, train_only };

FitScope parse_fit_scope(std::string_view name);
std::string_view to_string(FitScope scope);

struct PreprocessConfig {
    double zscore_threshold = 7.0;
    double corr_threshold = 0.99;
    double scale_min = 0.0;
    double scale_max = 1.0;
    bool balance = true;
    std::uint64_t balance_seed = 42;
    FitScope fit_scope = FitScope::whole_dataset;

    // Throws ConfigError.
    void validate() const;
};

struct ColumnRange {
    std::string name;
    double min_value = 0.0;
    double max_value = 0.0;
};

struct ScalerParams {
    std::vector<ColumnRange> ranges;

    const ColumnRange* find(std::string_view name) const;
};

struct CorrelationDrop {
    std::string kept_name;
    std::string dropped_name;
    double r = 0.0;
};

// Stage names match the preprocessing-time table columns.
inline constexpr const char* kStageOutlier = "outlier_filtering";
inline constexpr const char* kStageNormalization = "normalization";
inline constexpr const char* kStageCorrelation = "correlation_filtering";
inline constexpr const char* kStageBalancing = "balancing";
inline constexpr const char* kStageTotal = "total";

struct PreprocessReport {
    std::size_t rows_dropped_outlier = 0;
    std::vector<CorrelationDrop> columns_dropped_correlation;
    std::size_t rows_dropped_balancing = 0;
    bool balancing_skipped = false;
    std::map<std::string, double> stage_seconds;

    void merge(const PreprocessReport& other);
};

template <typename T>
struct Stage {
    T table;
    PreprocessReport report;
};

// Keeps a row iff every feature column with nonzero std has |z| <= threshold.
// Population mean/std of the input. Throws EmptyDatasetError if nothing survives.
Stage<ColumnarTable> zscore_filter(const ColumnarTable& table, double threshold);

ScalerParams fit_scaler(const ColumnarTable& table);

// Min-max scaling onto [scale_min, scale_max]; zero-span columns map to scale_min.
// Throws ContractViolation if a column has no fitted range.
ColumnarTable apply_scaler(const ColumnarTable& table, const ScalerParams& params, double scale_min = 0.0,
                           double scale_max = 1.0);

// Pearson correlation; 0 when either input has zero variance.
double pearson_corr(std::span<const double> x, std::span<const double> y);

// Ascending-index pair scan dropping the later column of any pair with |r| > threshold.
Stage<ColumnarTable> correlation_filter(const ColumnarTable& table, double threshold);

// Names of columns correlation_filter would drop, without building the table.
std::vector<CorrelationDrop> correlated_columns(const ColumnarTable& table, double threshold);

// Random undersampling of the majority class to the minority count. Survivor order is
// preserved. Single-class input is returned unchanged with balancing_skipped set.
Stage<ColumnarTable> balance(const ColumnarTable& table, std::uint64_t seed);

// Row indices balance() would keep, ascending.
std::vector<std::size_t> balance_indices(std::span<const Label> labels, std::uint64_t seed);

struct PreprocessOutcome {
    ColumnarTable table;
    ScalerParams scaler;
    std::vector<std::string> dropped_columns;  // correlation drops, by name
    PreprocessReport report;
};

// Fixed order: outlier filter -> scaler -> correlation filter -> balance (when enabled).
// Each stage is timed into report.stage_seconds.
PreprocessOutcome preprocess(const ColumnarTable& table, const PreprocessConfig& config, bool allow_balance = true);

// Applies fitted scaler and column drops to held-out rows (train-only fit scope).
ColumnarTable apply_fitted(const ColumnarTable& table, const PreprocessOutcome& fitted,
                           const PreprocessConfig& config);

// CSV with columns stage,rows_dropped,columns_dropped,seconds.
std::string preprocess_report_csv(const PreprocessReport& report);

}  // namespace idsbench
