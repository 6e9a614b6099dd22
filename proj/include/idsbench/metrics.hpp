#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "idsbench/table.hpp"

namespace idsbench {

// Attack is the positive class.
struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    bool operator==(const ConfusionCounts&) const = default;
};

struct MetricSet {
    double accuracy = 0.0;
    double precision_weighted = 0.0;
    double recall_weighted = 0.0;
    double f1_weighted = 0.0;
    double roc_auc = 0.0;
    ConfusionCounts counts;
    // Set when some 0/0 ratio was evaluated as 0.
    bool undefined_ratio = false;
};

ConfusionCounts confusion(std::span<const Label> y_true, std::span<const Label> y_pred);

// Everything except roc_auc. Per-class precision/recall/F1 averaged with class-support weights.
MetricSet scalar_metrics(const ConfusionCounts& counts);

// Mann-Whitney form of the area under the ROC curve (ties count one half).
// Throws DataError when y_true holds a single class.
double roc_auc(std::span<const Label> y_true, std::span<const double> scores);

struct RocPoint {
    double fpr;
    double tpr;
};

// ROC curve over every distinct score threshold, from (0,0) to (1,1).
std::vector<RocPoint> roc_curve(std::span<const Label> y_true, std::span<const double> scores);

// Trapezoidal area under a curve from roc_curve().
double trapezoid_area(std::span<const RocPoint> curve);

// Predictions are scores thresholded at 0.5.
MetricSet evaluate(std::span<const Label> y_true, std::span<const double> scores);

}  // namespace idsbench
