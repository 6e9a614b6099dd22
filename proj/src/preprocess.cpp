#include "idsbench/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "idsbench/error.hpp"
#include "idsbench/util.hpp"

namespace idsbench {

namespace {

struct Moments {
    double mean = 0.0;
    double std = 0.0;
    bool constant = true;
};

Moments column_moments(std::span<const double> v) {
    Moments m;
    if (v.empty()) return m;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    m.constant = *lo == *hi;
    m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (m.constant) return m;
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(v.size()));
    return m;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

FitScope parse_fit_scope(std::string_view name) {
    if (name == "whole-dataset" || name == "whole_dataset") return FitScope::whole_dataset;
    if (name == "train-only" || name == "train_only") return FitScope::train_only;
    throw ConfigError("unknown fit_scope '" + std::string(name) + "'");
}

std::string_view to_string(FitScope scope) {
    return scope == FitScope::whole_dataset ? "whole-dataset" : "train-only";
}

void PreprocessConfig::validate() const {
    if (!(zscore_threshold > 0.0)) throw ConfigError("preprocess: zscore_threshold must be > 0");
    if (!(corr_threshold > 0.0 && corr_threshold <= 1.0)) {
        throw ConfigError("preprocess: corr_threshold must lie in (0, 1]");
    }
    if (!(scale_min < scale_max)) throw ConfigError("preprocess: scale_min must be < scale_max");
}

const ColumnRange* ScalerParams::find(std::string_view name) const {
    for (const auto& r : ranges) {
        if (r.name == name) return &r;
    }
    return nullptr;
}

void PreprocessReport::merge(const PreprocessReport& other) {
    rows_dropped_outlier += other.rows_dropped_outlier;
    columns_dropped_correlation.insert(columns_dropped_correlation.end(), other.columns_dropped_correlation.begin(),
                                       other.columns_dropped_correlation.end());
    rows_dropped_balancing += other.rows_dropped_balancing;
    balancing_skipped = balancing_skipped || other.balancing_skipped;
    for (const auto& [k, v] : other.stage_seconds) stage_seconds[k] += v;
}

Stage<ColumnarTable> zscore_filter(const ColumnarTable& table, double threshold) {
    if (table.empty()) throw ContractViolation("zscore_filter: empty table");
    if (!(threshold > 0.0)) throw ContractViolation("zscore_filter: threshold must be > 0");

    const std::size_t n = table.n_rows();
    std::vector<bool> keep(n, true);
    for (std::size_t j = 0; j < table.n_features(); ++j) {
        const auto col = table.values(j);
        const Moments m = column_moments(col);
        if (m.constant || m.std == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) {
            if (keep[i] && std::abs((col[i] - m.mean) / m.std) > threshold) keep[i] = false;
        }
    }

    std::vector<std::size_t> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (keep[i]) rows.push_back(i);
    }
    if (rows.empty()) throw EmptyDatasetError("zscore_filter: every row was filtered as an outlier");

    Stage<ColumnarTable> out{table.select_rows(rows), {}};
    out.report.rows_dropped_outlier = n - rows.size();
    return out;
}

ScalerParams fit_scaler(const ColumnarTable& table) {
    if (table.empty()) throw ContractViolation("fit_scaler: empty table");
    ScalerParams params;
    params.ranges.reserve(table.n_features());
    for (const auto& c : table.columns()) {
        const auto [lo, hi] = std::minmax_element(c.values.begin(), c.values.end());
        params.ranges.push_back({c.name, *lo, *hi});
    }
    return params;
}

ColumnarTable apply_scaler(const ColumnarTable& table, const ScalerParams& params, double scale_min,
                           double scale_max) {
    std::vector<Column> cols;
    cols.reserve(table.n_features());
    const double target_span = scale_max - scale_min;
    for (const auto& c : table.columns()) {
        const ColumnRange* r = params.find(c.name);
        if (r == nullptr) throw ContractViolation("apply_scaler: no fitted range for column '" + c.name + "'");
        Column out{c.name, std::vector<double>(c.values.size())};
        const double span = r->max_value - r->min_value;
        for (std::size_t i = 0; i < c.values.size(); ++i) {
            out.values[i] = span > 0.0 ? (c.values[i] - r->min_value) / span * target_span + scale_min : scale_min;
        }
        cols.push_back(std::move(out));
    }
    return ColumnarTable(std::move(cols), std::vector<Label>(table.labels().begin(), table.labels().end()));
}

double pearson_corr(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ContractViolation("pearson_corr: length mismatch");
    if (x.size() < 2) throw ContractViolation("pearson_corr: need at least two values");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<CorrelationDrop> correlated_columns(const ColumnarTable& table, double threshold) {
    const std::size_t d = table.n_features();
    const std::size_t n = table.n_rows();
    std::vector<CorrelationDrop> drops;
    if (d < 2 || n < 2) return drops;

    // Centered columns and their norms, computed once.
    std::vector<std::vector<double>> centered(d);
    std::vector<double> norms(d, 0.0);
    std::vector<bool> constant(d, false);
    for (std::size_t j = 0; j < d; ++j) {
        const auto v = table.values(j);
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        constant[j] = *lo == *hi;
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
        centered[j].resize(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            centered[j][i] = v[i] - mean;
            ss += centered[j][i] * centered[j][i];
        }
        norms[j] = std::sqrt(ss);
    }

    std::vector<bool> dropped(d, false);
    for (std::size_t i = 0; i < d; ++i) {
        if (dropped[i]) continue;
        for (std::size_t j = i + 1; j < d; ++j) {
            if (dropped[j]) continue;
            double r = 0.0;
            if (!constant[i] && !constant[j] && norms[i] > 0.0 && norms[j] > 0.0) {
                const double dot = std::inner_product(centered[i].begin(), centered[i].end(), centered[j].begin(), 0.0);
                r = std::clamp(dot / (norms[i] * norms[j]), -1.0, 1.0);
            }
            if (std::abs(r) > threshold) {
                dropped[j] = true;
                drops.push_back({table.column(i).name, table.column(j).name, r});
            }
        }
    }
    return drops;
}

Stage<ColumnarTable> correlation_filter(const ColumnarTable& table, double threshold) {
    if (table.n_features() < 1) throw ContractViolation("correlation_filter: table has no feature columns");
    Stage<ColumnarTable> out;
    out.report.columns_dropped_correlation = correlated_columns(table, threshold);
    std::vector<std::size_t> drop_idx;
    for (const auto& dcol : out.report.columns_dropped_correlation) {
        drop_idx.push_back(*table.find_column(dcol.dropped_name));
    }
    out.table = table.drop_columns(drop_idx);
    return out;
}

std::vector<std::size_t> balance_indices(std::span<const Label> labels, std::uint64_t seed) {
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    std::vector<std::size_t> all(labels.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    if (by_class[0].empty() || by_class[1].empty() || by_class[0].size() == by_class[1].size()) return all;

    const int majority = by_class[0].size() > by_class[1].size() ? 0 : 1;
    auto& major = by_class[majority];
    const std::size_t target = by_class[1 - majority].size();

    // Partial Fisher-Yates: the first `target` slots become a uniform sample.
    Rng rng(seed);
    for (std::size_t i = 0; i < target; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(major.size() - i));
        std::swap(major[i], major[j]);
    }
    major.resize(target);

    std::vector<std::size_t> kept = by_class[1 - majority];
    kept.insert(kept.end(), major.begin(), major.end());
    std::sort(kept.begin(), kept.end());
    return kept;
}

Stage<ColumnarTable> balance(const ColumnarTable& table, std::uint64_t seed) {
    Stage<ColumnarTable> out;
    const std::size_t attacks = table.count_label(1);
    if (attacks == 0 || attacks == table.n_rows()) {
        out.table = table;
        out.report.balancing_skipped = true;
        return out;
    }
    const auto kept = balance_indices(table.labels(), seed);
    out.report.rows_dropped_balancing = table.n_rows() - kept.size();
    out.table = kept.size() == table.n_rows() ? table : table.select_rows(kept);
    return out;
}

PreprocessOutcome preprocess(const ColumnarTable& table, const PreprocessConfig& config, bool allow_balance) {
    config.validate();
    PreprocessOutcome out;
    Stopwatch total;

    Stopwatch sw;
    auto filtered = zscore_filter(table, config.zscore_threshold);
    filtered.report.stage_seconds[kStageOutlier] = sw.seconds();
    out.report.merge(filtered.report);

    sw.restart();
    out.scaler = fit_scaler(filtered.table);
    ColumnarTable scaled = apply_scaler(filtered.table, out.scaler, config.scale_min, config.scale_max);
    out.report.stage_seconds[kStageNormalization] = sw.seconds();

    sw.restart();
    auto decorrelated = correlation_filter(scaled, config.corr_threshold);
    decorrelated.report.stage_seconds[kStageCorrelation] = sw.seconds();
    out.report.merge(decorrelated.report);
    for (const auto& dcol : decorrelated.report.columns_dropped_correlation) {
        out.dropped_columns.push_back(dcol.dropped_name);
    }

    if (config.balance && allow_balance) {
        sw.restart();
        auto balanced = balance(decorrelated.table, config.balance_seed);
        balanced.report.stage_seconds[kStageBalancing] = sw.seconds();
        out.report.merge(balanced.report);
        out.table = std::move(balanced.table);
    } else {
        out.table = std::move(decorrelated.table);
    }
    out.report.stage_seconds[kStageTotal] = total.seconds();
    return out;
}

ColumnarTable apply_fitted(const ColumnarTable& table, const PreprocessOutcome& fitted,
                           const PreprocessConfig& config) {
    std::vector<std::size_t> drop_idx;
    for (const auto& name : fitted.dropped_columns) {
        if (auto j = table.find_column(name)) drop_idx.push_back(*j);
    }
    return apply_scaler(table.drop_columns(drop_idx), fitted.scaler, config.scale_min, config.scale_max);
}

std::string preprocess_report_csv(const PreprocessReport& report) {
    auto seconds = [&](const char* stage) {
        const auto it = report.stage_seconds.find(stage);
        return it == report.stage_seconds.end() ? 0.0 : it->second;
    };
    std::ostringstream os;
    os << "stage,rows_dropped,columns_dropped,seconds\n";
    os << kStageOutlier << ',' << report.rows_dropped_outlier << ",0," << fmt_double(seconds(kStageOutlier)) << '\n';
    os << kStageNormalization << ",0,0," << fmt_double(seconds(kStageNormalization)) << '\n';
    os << kStageCorrelation << ",0," << report.columns_dropped_correlation.size() << ','
       << fmt_double(seconds(kStageCorrelation)) << '\n';
    os << kStageBalancing << ',' << report.rows_dropped_balancing << ",0," << fmt_double(seconds(kStageBalancing))
       << '\n';
    os << kStageTotal << ',' << report.rows_dropped_outlier + report.rows_dropped_balancing << ','
       << report.columns_dropped_correlation.size() << ',' << fmt_double(seconds(kStageTotal)) << '\n';
    return os.str();
}

}  // namespace idsbench
