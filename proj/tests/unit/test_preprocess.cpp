#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "idsbench/error.hpp"
#include "idsbench/preprocess.hpp"
#include "support/synthetic.hpp"

using namespace idsbench;
using idsbench::testing::make_table;

namespace {

// Brute-force z-scan oracle: a row is an outlier if any non-constant column has |z| > t.
std::vector<std::size_t> zscan_oracle(const ColumnarTable& t, double threshold) {
    std::vector<std::size_t> keep;
    const double n = static_cast<double>(t.n_rows());
    for (std::size_t i = 0; i < t.n_rows(); ++i) {
        bool ok = true;
        for (std::size_t j = 0; j < t.n_features(); ++j) {
            double mean = 0;
            for (double v : t.values(j)) mean += v;
            mean /= n;
            double var = 0;
            for (double v : t.values(j)) var += (v - mean) * (v - mean);
            const double sd = std::sqrt(var / n);
            if (sd > 0 && std::abs((t.at(i, j) - mean) / sd) > threshold) ok = false;
        }
        if (ok) keep.push_back(i);
    }
    return keep;
}

std::vector<double> normals(std::size_t n, std::uint32_t seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> dist;
    std::vector<double> v(n);
    for (auto& x : v) x = dist(gen);
    return v;
}

}  // namespace

TEST_CASE("zscore filter drops a value beyond the threshold") {
    // 1000 alternating +-1 values plus one planted value, then standardized to mean 0, std 1.
    std::vector<double> col;
    for (int i = 0; i < 1000; ++i) col.push_back(i % 2 == 0 ? 1.0 : -1.0);
    col.push_back(7.75);
    double mean = 0, var = 0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(col.size());
    for (double v : col) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(col.size()));
    for (double& v : col) v = (v - mean) / sd;
    REQUIRE(col.back() == doctest::Approx(7.5).epsilon(0.01));

    const auto t = make_table({col}, std::vector<Label>(col.size(), 0));
    const auto out = zscore_filter(t, 7.0);
    CHECK(out.report.rows_dropped_outlier == 1);
    CHECK(out.table.n_rows() == 1000);
    CHECK(out.table.values(0).back() == col[999]);
}

TEST_CASE("zscore filter ignores constant columns") {
    const auto t = make_table({{3, 3, 3, 3}, {1, 2, 3, 4}}, {0, 1, 0, 1});
    const auto out = zscore_filter(t, 1.5);
    CHECK(out.table.n_rows() == 4);
}

TEST_CASE("zscore filter drops exactly a planted mean+10 std row (oracle)") {
    auto col = normals(100, 11);
    double mean = 0, var = 0;
    for (double v : col) mean += v;
    mean /= 100;
    for (double v : col) var += (v - mean) * (v - mean);
    col[37] = mean + 10.0 * std::sqrt(var / 100);
    // A second column without outliers.
    const auto t = make_table({col, normals(100, 12)}, std::vector<Label>(100, 1));
    const auto out = zscore_filter(t, 7.0);
    const auto oracle = zscan_oracle(t, 7.0);
    CHECK(oracle.size() == 99);
    CHECK(std::find(oracle.begin(), oracle.end(), 37) == oracle.end());
    CHECK(out.table == t.select_rows(oracle));
}

TEST_CASE("zscore filter empty output is an error") {
    // Threshold below every |z| of a two-point column.
    const auto t = make_table({{0, 1}}, {0, 1});
    CHECK_THROWS_AS(zscore_filter(t, 0.5), EmptyDatasetError);
}

TEST_CASE("fit_scaler stores exact column extremes") {
    const auto p = fit_scaler(make_table({{2, 4, 6}}, {0, 0, 1}));
    CHECK(p.ranges.at(0).min_value == 2);
    CHECK(p.ranges.at(0).max_value == 6);
    const auto one = fit_scaler(make_table({{5}, {-3}}, {1}));
    CHECK(one.ranges.at(0).min_value == one.ranges.at(0).max_value);
    CHECK(one.ranges.at(1).min_value == -3);
    const auto two = fit_scaler(make_table({{0, 10}, {-1, 1}}, {0, 1}));
    CHECK(two.ranges.at(0).min_value == 0);
    CHECK(two.ranges.at(0).max_value == 10);
    CHECK(two.ranges.at(1).min_value == -1);
    CHECK(two.ranges.at(1).max_value == 1);
}

TEST_CASE("apply_scaler maps endpoints to the target bounds") {
    const auto t = make_table({{0, 5, 10}, {3, 3, 3}}, {0, 1, 0});
    const auto s = apply_scaler(t, fit_scaler(t));
    CHECK(s.column(0).values == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(s.column(1).values == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("scaling onto (0,1) equals plain min-max standardization") {
    const auto t = make_table({{2, 4}}, {0, 1});
    const auto s = apply_scaler(t, fit_scaler(t), 0.0, 1.0);
    CHECK(s.column(0).values == std::vector<double>{0.0, 1.0});
    // General target range: x_std * (max - min) + min.
    const auto wide = apply_scaler(t, fit_scaler(t), -1.0, 3.0);
    CHECK(wide.column(0).values == std::vector<double>{-1.0, 3.0});
}

TEST_CASE("apply_scaler rejects columns without fitted ranges") {
    const auto t = make_table({{1, 2}}, {0, 1});
    CHECK_THROWS_AS(apply_scaler(t, ScalerParams{}), ContractViolation);
}

TEST_CASE("pearson_corr examples") {
    const std::vector<double> a = {1, 2, 3}, b = {2, 4, 6}, c = {6, 4, 2};
    CHECK(pearson_corr(a, b) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pearson_corr(a, c) == doctest::Approx(-1.0).epsilon(1e-15));
    // Hand-computed: cov sum 4, variance sums 5 and 5 -> 0.8.
    const std::vector<double> x = {1, 2, 3, 4}, y = {1, 3, 2, 4};
    CHECK(pearson_corr(x, y) == doctest::Approx(0.8).epsilon(1e-15));
    const std::vector<double> k = {5, 5, 5};
    CHECK(pearson_corr(a, k) == 0.0);
    const std::vector<double> short_v = {1, 2};
    CHECK_THROWS_AS(pearson_corr(a, short_v), ContractViolation);
}

TEST_CASE("pearson_corr properties: symmetry, self-correlation, affine invariance") {
    for (std::uint32_t seed = 1; seed <= 20; ++seed) {
        const auto x = normals(50, seed);
        const auto y = normals(50, seed + 100);
        CHECK(pearson_corr(x, y) == doctest::Approx(pearson_corr(y, x)).epsilon(1e-12));
        CHECK(pearson_corr(x, x) == doctest::Approx(1.0).epsilon(1e-12));
        std::vector<double> ax(x.size());
        const double a = 0.5 + seed, b = -3.0 * seed;
        for (std::size_t i = 0; i < x.size(); ++i) ax[i] = a * x[i] + b;
        CHECK(std::abs(pearson_corr(ax, y) - pearson_corr(x, y)) <= 1e-9);
    }
}

TEST_CASE("correlation filter drops the later duplicate") {
    const auto t = make_table({{1, 2, 3, 5}, {1, 2, 3, 5}}, {0, 1, 0, 1});
    const auto out = correlation_filter(t, 0.99);
    CHECK(out.table.column_names() == std::vector<std::string>{"f0"});
    REQUIRE(out.report.columns_dropped_correlation.size() == 1);
    CHECK(out.report.columns_dropped_correlation[0].kept_name == "f0");
    CHECK(out.report.columns_dropped_correlation[0].dropped_name == "f1");
    CHECK(out.report.columns_dropped_correlation[0].r == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("correlation below the threshold keeps both columns") {
    // r = 0.95 exactly is awkward; find a pair near it and check the condition directly.
    const std::vector<double> x = {1, 2, 3, 4, 5, 6};
    const std::vector<double> y = {1.2, 1.8, 3.5, 3.6, 5.6, 5.4};
    const double r = pearson_corr(x, y);
    REQUIRE(std::abs(r) < 0.99);
    REQUIRE(std::abs(r) > 0.9);
    const auto out = correlation_filter(make_table({x, y}, {0, 1, 0, 1, 0, 1}), 0.99);
    CHECK(out.table.n_features() == 2);
}

TEST_CASE("negative correlation counts through its magnitude") {
    const auto out = correlation_filter(make_table({{1, 2, 3}, {3, 2, 1}}, {0, 1, 0}), 0.99);
    CHECK(out.table.n_features() == 1);
}

TEST_CASE("three mutual duplicates keep only the first (exhaustive pair oracle)") {
    const std::vector<double> v = {0.5, 1.5, 2.0, 7.0};
    std::vector<double> w(v.size()), z(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        w[i] = 2 * v[i] + 1;
        z[i] = -v[i];
    }
    const auto t = make_table({v, w, z}, {0, 1, 0, 1});
    // Oracle: enumerate pairs i<j ascending, drop j if i alive and |r| > 0.99.
    std::vector<bool> dropped(3, false);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = i + 1; j < 3; ++j) {
            if (!dropped[i] && !dropped[j] && std::abs(pearson_corr(t.values(i), t.values(j))) > 0.99) dropped[j] = true;
        }
    }
    CHECK(dropped == std::vector<bool>{false, true, true});
    const auto out = correlation_filter(t, 0.99);
    CHECK(out.table.column_names() == std::vector<std::string>{"f0"});
}

TEST_CASE("balance undersamples the majority to the minority count") {
    std::vector<Label> labels(110, 0);
    for (std::size_t i = 100; i < 110; ++i) labels[i] = 1;
    std::vector<double> idx(110);
    for (std::size_t i = 0; i < 110; ++i) idx[i] = static_cast<double>(i);
    const auto t = make_table({idx}, labels);
    const auto out = balance(t, 42);
    CHECK(out.table.count_label(0) == 10);
    CHECK(out.table.count_label(1) == 10);
    CHECK(out.report.rows_dropped_balancing == 90);
    // Survivor order is preserved.
    const auto v = out.table.values(0);
    CHECK(std::is_sorted(v.begin(), v.end()));
    // Same seed, same survivors; another seed, another sample.
    CHECK(balance(t, 42).table == out.table);
    CHECK_FALSE(balance(t, 43).table == out.table);
}

TEST_CASE("balance leaves balanced and single-class input unchanged") {
    std::vector<Label> labels(100);
    for (std::size_t i = 0; i < 100; ++i) labels[i] = static_cast<Label>(i % 2);
    const auto t = idsbench::testing::gaussian_blobs(50, 2, 1.0, 3);
    CHECK(balance(t, 1).table == t);
    const auto single = make_table({{1, 2, 3}}, {1, 1, 1});
    const auto out = balance(single, 1);
    CHECK(out.report.balancing_skipped);
    CHECK(out.table == single);
}

TEST_CASE("preprocess config invariants") {
    PreprocessConfig c;
    c.zscore_threshold = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.corr_threshold = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.scale_min = 1;
    c.scale_max = 1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("preprocessing properties on random tables") {
    for (std::uint32_t seed = 1; seed <= 15; ++seed) {
        std::mt19937 gen(seed);
        std::normal_distribution<double> nd;
        const std::size_t n = 150, d = 6;
        std::vector<std::vector<double>> cols(d, std::vector<double>(n));
        std::vector<Label> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = static_cast<Label>(gen() % 3 == 0);
            for (std::size_t j = 0; j < d; ++j) cols[j][i] = nd(gen) * (1.0 + static_cast<double>(j)) + static_cast<double>(j);
            cols[4][i] = 3.0 * cols[1][i] + 1e-4 * nd(gen);  // near duplicate
            if (i == 7) cols[2][i] = 1e6;                      // planted outlier
        }
        const auto t = make_table(cols, labels);

        // Scaler range and rank preservation.
        const auto scaled = apply_scaler(t, fit_scaler(t));
        for (std::size_t j = 0; j < d; ++j) {
            const auto orig = t.values(j);
            const auto sv = scaled.values(j);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(sv[i] >= -1e-12);
                CHECK(sv[i] <= 1.0 + 1e-12);
                for (std::size_t k = 0; k < n; k += 7) {
                    if (orig[i] < orig[k]) CHECK(sv[i] <= sv[k]);
                }
            }
        }

        // Retained pairs after the filter satisfy |r| <= threshold on the filter's input.
        const auto filtered = correlation_filter(scaled, 0.99);
        for (std::size_t a = 0; a < filtered.table.n_features(); ++a) {
            for (std::size_t b = a + 1; b < filtered.table.n_features(); ++b) {
                CHECK(std::abs(pearson_corr(filtered.table.values(a), filtered.table.values(b))) <= 0.99);
            }
        }
        for (const auto& dcol : filtered.report.columns_dropped_correlation) CHECK(std::abs(dcol.r) > 0.99);

        // Filters never change surviving values.
        const auto z = zscore_filter(t, 7.0);
        CHECK(z.report.rows_dropped_outlier == 1);
        for (std::size_t j = 0; j < d; ++j) {
            const auto keep = zscan_oracle(t, 7.0);
            CHECK(z.table == t.select_rows(keep));
        }
        for (const auto& col : filtered.table.columns()) {
            CHECK(col.values == scaled.column(*scaled.find_column(col.name)).values);
        }
        const auto bal = balance(t, seed);
        CHECK(bal.table.count_label(0) == bal.table.count_label(1));
        const auto kept = balance_indices(t.labels(), seed);
        CHECK(bal.table == t.select_rows(kept));
    }
}

TEST_CASE("preprocess runs stages in the fixed order and times each") {
    auto t = idsbench::testing::gaussian_blobs(200, 3, 2.0, 5);
    PreprocessConfig cfg;
    const auto out = preprocess(t, cfg);
    for (const char* stage : {kStageOutlier, kStageNormalization, kStageCorrelation, kStageBalancing, kStageTotal}) {
        CHECK(out.report.stage_seconds.contains(stage));
    }
    // Equivalent to running the stages by hand.
    const auto z = zscore_filter(t, cfg.zscore_threshold);
    const auto s = apply_scaler(z.table, fit_scaler(z.table));
    const auto c = correlation_filter(s, cfg.corr_threshold);
    const auto b = balance(c.table, cfg.balance_seed);
    CHECK(out.table == b.table);

    const auto no_balance = preprocess(t, cfg, false);
    CHECK_FALSE(no_balance.report.stage_seconds.contains(kStageBalancing));

    const std::string csv = preprocess_report_csv(out.report);
    CHECK(csv.rfind("stage,rows_dropped,columns_dropped,seconds\noutlier_filtering,", 0) == 0);
    CHECK(csv.find("\nnormalization,") != std::string::npos);
    CHECK(csv.find("\ncorrelation_filtering,") != std::string::npos);
    CHECK(csv.find("\ntotal,") != std::string::npos);
}

TEST_CASE("train-only scope applies fitted parameters to held-out rows") {
    const auto train = make_table({{0, 10, 5, 2}, {0, 20, 10, 4}}, {0, 1, 0, 1});
    const auto test = make_table({{5, 20}, {1, 1}}, {0, 1});
    PreprocessConfig cfg;
    cfg.balance = false;
    const auto fitted = preprocess(train, cfg);
    CHECK(fitted.dropped_columns == std::vector<std::string>{"f1"});
    const auto applied = apply_fitted(test, fitted, cfg);
    CHECK(applied.column_names() == std::vector<std::string>{"f0"});
    CHECK(applied.column(0).values == std::vector<double>{0.5, 2.0});
}
