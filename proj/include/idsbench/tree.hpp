#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "idsbench/classifiers.hpp"

namespace idsbench {

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // rows with x[feature] <= threshold go left
    std::int32_t left = -1;
    std::int32_t right = -1;
    // Training rows (bootstrap-weighted) routed here, per class.
    double count_benign = 0.0;
    double count_attack = 0.0;
    // Leaf output: attack fraction for classification, additive weight for regression.
    double value = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

// Flat node array, root at index 0.
using NodeList = std::vector<TreeNode>;

// Leaf reached by one row of a columnar table.
const TreeNode& route(const NodeList& nodes, const ColumnarTable& features, std::size_t row);
const TreeNode& route(const NodeList& nodes, std::span<const double> x);

double gini(double benign, double attack);

struct TreeLimits {
    int max_depth = 0;  // 0 = unlimited
    double min_samples_split = 2.0;
};

class TreeModel final : public TrainedModel {
public:
    TreeModel(NodeList nodes, std::size_t n_features);

    Algorithm algorithm() const override { return Algorithm::decision_tree; }
    std::size_t n_features() const override { return n_features_; }
    std::vector<double> predict_score(const ColumnarTable& features) const override;
    std::string serialize() const override;

    const NodeList& nodes() const noexcept { return nodes_; }
    std::size_t depth() const;
    std::size_t leaf_count() const;

private:
    NodeList nodes_;
    std::size_t n_features_;
};

// Greedy CART: best Gini split per node over midpoints between sorted unique values.
// Ties go to the lowest feature index, then the smallest threshold.
TreeModel tree_fit(const ColumnarTable& train, const TreeLimits& limits = {});

struct ForestOptions {
    std::size_t n_trees = 100;
    TreeLimits limits;
    bool bootstrap = true;
    std::size_t max_features = 0;  // 0 = ceil(sqrt(d))
    std::uint64_t seed = 42;
    unsigned threads = 1;
};

class ForestModel final : public TrainedModel {
public:
    ForestModel(std::vector<NodeList> trees, std::vector<std::uint64_t> tree_seeds, std::size_t n_features);

    Algorithm algorithm() const override { return Algorithm::random_forest; }
    std::size_t n_features() const override { return n_features_; }
    // Fraction of trees whose leaf predicts attack.
    std::vector<double> predict_score(const ColumnarTable& features) const override;
    std::string serialize() const override;

    const std::vector<NodeList>& trees() const noexcept { return trees_; }
    const std::vector<std::uint64_t>& tree_seeds() const noexcept { return tree_seeds_; }

private:
    std::vector<NodeList> trees_;
    std::vector<std::uint64_t> tree_seeds_;
    std::size_t n_features_;
};

// Bagged trees; tree t uses seed + t for its bootstrap and feature draws.
ForestModel forest_fit(const ColumnarTable& train, const ForestOptions& options = {});

}  // namespace idsbench
