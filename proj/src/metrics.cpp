#include "idsbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "idsbench/classifiers.hpp"
#include "idsbench/error.hpp"

namespace idsbench {

namespace {

double ratio(double num, double den, bool& undefined) {
    if (den == 0.0) {
        undefined = true;
        return 0.0;
    }
    return num / den;
}

}  // namespace

ConfusionCounts confusion(std::span<const Label> y_true, std::span<const Label> y_pred) {
    if (y_true.size() != y_pred.size()) throw ContractViolation("confusion: length mismatch");
    if (y_true.empty()) throw ContractViolation("confusion: no instances");
    ConfusionCounts c;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] == 1) {
            (y_pred[i] == 1 ? c.tp : c.fn) += 1;
        } else {
            (y_pred[i] == 1 ? c.fp : c.tn) += 1;
        }
    }
    return c;
}

MetricSet scalar_metrics(const ConfusionCounts& c) {
    MetricSet m;
    m.counts = c;
    const double n = static_cast<double>(c.total());
    if (n == 0.0) throw ContractViolation("scalar_metrics: no instances");
    m.accuracy = static_cast<double>(c.tp + c.tn) / n;

    // Class 1 (attack) and class 0 (benign) seen as the positive class in turn.
    struct PerClass {
        double tp, fp, fn, support;
    };
    const PerClass classes[2] = {
        {double(c.tn), double(c.fn), double(c.fp), double(c.tn + c.fp)},
        {double(c.tp), double(c.fp), double(c.fn), double(c.tp + c.fn)},
    };
    for (const auto& k : classes) {
        const double w = k.support / n;
        const double p = ratio(k.tp, k.tp + k.fp, m.undefined_ratio);
        const double r = ratio(k.tp, k.tp + k.fn, m.undefined_ratio);
        const double f = ratio(2.0 * p * r, p + r, m.undefined_ratio);
        m.precision_weighted += w * p;
        m.recall_weighted += w * r;
        m.f1_weighted += w * f;
    }
    return m;
}

double roc_auc(std::span<const Label> y_true, std::span<const double> scores) {
    if (y_true.size() != scores.size()) throw ContractViolation("roc_auc: length mismatch");
    const std::size_t n = y_true.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of midranks of the positives.
    double rank_sum = 0.0;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (y_true[order[k]] == 1) {
                rank_sum += midrank;
                ++positives;
            }
        }
        i = j;
    }
    const std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0) throw DataError("roc_auc: undefined for single-class ground truth");
    const double p = static_cast<double>(positives);
    const double u = rank_sum - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(negatives));
}

std::vector<RocPoint> roc_curve(std::span<const Label> y_true, std::span<const double> scores) {
    if (y_true.size() != scores.size()) throw ContractViolation("roc_curve: length mismatch");
    const std::size_t n = y_true.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    const double p = static_cast<double>(std::count(y_true.begin(), y_true.end(), Label{1}));
    const double neg = static_cast<double>(n) - p;
    if (p == 0.0 || neg == 0.0) throw DataError("roc_curve: undefined for single-class ground truth");

    std::vector<RocPoint> curve{{0.0, 0.0}};
    double tp = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            (y_true[order[j]] == 1 ? tp : fp) += 1.0;
            ++j;
        }
        curve.push_back({fp / neg, tp / p});
        i = j;
    }
    return curve;
}

double trapezoid_area(std::span<const RocPoint> curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) * 0.5;
    }
    return area;
}

MetricSet evaluate(std::span<const Label> y_true, std::span<const double> scores) {
    const auto pred = threshold_scores(scores);
    MetricSet m = scalar_metrics(confusion(y_true, pred));
    m.roc_auc = roc_auc(y_true, scores);
    return m;
}

}  // namespace idsbench
