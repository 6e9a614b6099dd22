#include <doctest.h>

#include <cmath>
#include <random>

#include "idsbench/error.hpp"
#include "idsbench/metrics.hpp"

using namespace idsbench;

namespace {

// Exhaustive pairwise oracle: concordant pairs plus half the ties over P*N.
double pairwise_auc(const std::vector<Label>& y, const std::vector<double>& s) {
    double num = 0, pairs = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] != 1) continue;
        for (std::size_t j = 0; j < y.size(); ++j) {
            if (y[j] != 0) continue;
            pairs += 1;
            if (s[i] > s[j]) num += 1;
            if (s[i] == s[j]) num += 0.5;
        }
    }
    return num / pairs;
}

// Threshold-sweep oracle: trapezoids between ROC points, one point per distinct threshold.
double sweep_auc(const std::vector<Label>& y, const std::vector<double>& s) {
    std::vector<double> thresholds(s);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    double P = 0, N = 0;
    for (Label l : y) (l ? P : N) += 1;
    double area = 0, px = 0, py = 0;
    for (double t : thresholds) {
        double tp = 0, fp = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (s[i] >= t) (y[i] ? tp : fp) += 1;
        }
        const double x = fp / N, yv = tp / P;
        area += (x - px) * (yv + py) / 2;
        px = x;
        py = yv;
    }
    return area;
}

struct Brute {
    double acc, prec, rec, f1;
};

// Per-class metrics straight from the definitions, weighted by true-class support.
Brute brute_metrics(const std::vector<Label>& y, const std::vector<Label>& p) {
    Brute b{0, 0, 0, 0};
    const double n = static_cast<double>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) b.acc += y[i] == p[i];
    b.acc /= n;
    for (int c = 0; c < 2; ++c) {
        double tp = 0, pred = 0, support = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            tp += y[i] == c && p[i] == c;
            pred += p[i] == c;
            support += y[i] == c;
        }
        const double prec = pred > 0 ? tp / pred : 0;
        const double rec = support > 0 ? tp / support : 0;
        const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0;
        b.prec += support / n * prec;
        b.rec += support / n * rec;
        b.f1 += support / n * f1;
    }
    return b;
}

}  // namespace

TEST_CASE("confusion counts with attack as positive") {
    const std::vector<Label> y = {1, 1, 0, 0}, p = {1, 0, 0, 1};
    CHECK(confusion(y, p) == ConfusionCounts{1, 1, 1, 1});
    CHECK(confusion(y, y) == ConfusionCounts{2, 0, 2, 0});
    const std::vector<Label> benign = {0, 0, 0}, attack = {1, 1, 1};
    const auto c = confusion(benign, attack);
    CHECK(c.tn == 0);
    CHECK(c.fp == 3);
    const std::vector<Label> shorter = {1};
    CHECK_THROWS_AS(confusion(y, shorter), ContractViolation);
}

TEST_CASE("scalar metrics examples") {
    const auto m = scalar_metrics({1, 1, 1, 1});
    CHECK(m.accuracy == 0.5);
    CHECK(m.precision_weighted == 0.5);
    CHECK(m.recall_weighted == 0.5);
    CHECK(m.f1_weighted == 0.5);
    CHECK_FALSE(m.undefined_ratio);

    const auto perfect = scalar_metrics({3, 0, 5, 0});
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.precision_weighted == 1.0);
    CHECK(perfect.recall_weighted == 1.0);
    CHECK(perfect.f1_weighted == 1.0);

    // No predicted positives: positive-class precision is 0/0 -> 0, flagged.
    const auto none = scalar_metrics({0, 0, 6, 4});
    CHECK(none.undefined_ratio);
    CHECK(none.precision_weighted == doctest::Approx(0.6 * 0.6));
    CHECK(none.accuracy == 0.6);
}

TEST_CASE("roc_auc examples") {
    const std::vector<Label> y = {1, 0, 1, 0};
    const std::vector<double> ranked = {0.9, 0.8, 0.7, 0.6};
    CHECK(roc_auc(y, ranked) == 0.75);
    const std::vector<double> perfect = {0.9, 0.1, 0.8, 0.2};
    CHECK(roc_auc(y, perfect) == 1.0);
    const std::vector<double> reversed = {0.1, 0.9, 0.2, 0.8};
    CHECK(roc_auc(y, reversed) == 0.0);
    const std::vector<Label> single = {1, 1};
    const std::vector<double> two = {0.1, 0.2};
    CHECK_THROWS_AS(roc_auc(single, two), DataError);
}

TEST_CASE("roc_auc matches pairwise counting and curve integration on random cases") {
    std::mt19937 gen(2024);
    for (int round = 0; round < 25; ++round) {
        const std::size_t n = 200;
        std::vector<Label> y(n);
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = static_cast<Label>(gen() % 2);
            // Coarse scores so ties occur.
            s[i] = static_cast<double>(gen() % 40) / 40.0 + 0.3 * y[i];
        }
        y[0] = 0;
        y[1] = 1;
        const double auc = roc_auc(y, s);
        CHECK(std::abs(auc - pairwise_auc(y, s)) <= 1e-12);
        CHECK(std::abs(auc - sweep_auc(y, s)) <= 1e-12);
        const auto curve = roc_curve(y, s);
        CHECK(std::abs(auc - trapezoid_area(curve)) <= 1e-12);
        CHECK(curve.front().fpr == 0.0);
        CHECK(curve.front().tpr == 0.0);
        CHECK(curve.back().fpr == 1.0);
        CHECK(curve.back().tpr == 1.0);
    }
}

TEST_CASE("roc_auc properties") {
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int round = 0; round < 20; ++round) {
        std::vector<Label> y(120);
        std::vector<double> s(120), neg(120), mono(120);
        for (std::size_t i = 0; i < y.size(); ++i) {
            y[i] = static_cast<Label>(i % 3 == 0);
            s[i] = u(gen) + 0.2 * y[i];
            neg[i] = -s[i];
            mono[i] = std::exp(3 * s[i]) - 5;
        }
        const double auc = roc_auc(y, s);
        CHECK(roc_auc(y, mono) == doctest::Approx(auc).epsilon(1e-15));
        CHECK(std::abs(auc + roc_auc(y, neg) - 1.0) <= 1e-12);
    }
}

TEST_CASE("metrics match brute force and accuracy equals weighted recall") {
    std::mt19937 gen(99);
    for (int round = 0; round < 30; ++round) {
        const std::size_t n = 200;
        std::vector<Label> y(n), p(n);
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = static_cast<Label>(gen() % 4 == 0);
            s[i] = std::uniform_real_distribution<double>(0, 1)(gen) * 0.7 + 0.3 * y[i];
            p[i] = s[i] > 0.5;
        }
        y[0] = 0;
        y[1] = 1;
        p[0] = s[0] > 0.5;
        p[1] = s[1] > 0.5;
        const MetricSet m = evaluate(y, s);
        const Brute b = brute_metrics(y, p);
        CHECK(std::abs(m.accuracy - b.acc) <= 1e-9);
        CHECK(std::abs(m.precision_weighted - b.prec) <= 1e-9);
        CHECK(std::abs(m.recall_weighted - b.rec) <= 1e-9);
        CHECK(std::abs(m.f1_weighted - b.f1) <= 1e-9);
        CHECK(std::abs(m.roc_auc - sweep_auc(y, s)) <= 1e-9);
        CHECK(std::abs(m.accuracy - m.recall_weighted) <= 1e-12);
        for (double v : {m.accuracy, m.precision_weighted, m.recall_weighted, m.f1_weighted, m.roc_auc}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        CHECK(m.counts.total() == n);
    }
}
