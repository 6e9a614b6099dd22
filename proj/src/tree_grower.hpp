#pragma once

// Level-wise exact greedy tree growth shared by the CART, forest and boosting learners.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "idsbench/table.hpp"
#include "idsbench/tree.hpp"
#include "idsbench/util.hpp"

namespace idsbench::detail {

struct FeatureView {
    std::vector<std::span<const double>> columns;
    std::size_t n_rows = 0;
};

FeatureView view_of(const ColumnarTable& table);

// Per feature: row indices sorted by value, ties by row index.
using SortedIndex = std::vector<std::vector<std::uint32_t>>;

SortedIndex presort(const FeatureView& x);

struct GrowParams {
    int max_depth = 0;  // 0 = unlimited
    double min_samples_split = 2.0;
    std::size_t max_features = 0;  // 0 or >= d: every feature at every node
    double lambda = 1.0;
    double min_child_weight = 1.0;
};

// Gini classification tree over rows with weight > 0. `rng` is required when
// max_features restricts the candidate set.
NodeList grow_classifier(const FeatureView& x, const SortedIndex& sorted, std::span<const Label> labels,
                         std::span<const double> weights, const GrowParams& params, Rng* rng);

// Regression tree on gradient/hessian statistics; leaf value = -G / (H + lambda).
NodeList grow_regressor(const FeatureView& x, const SortedIndex& sorted, std::span<const double> grad,
                        std::span<const double> hess, const GrowParams& params);

}  // namespace idsbench::detail
