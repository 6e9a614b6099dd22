#include "idsbench/tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "idsbench/error.hpp"
#include "model_json.hpp"
#include "tree_grower.hpp"

namespace idsbench {

const TreeNode& route(const NodeList& nodes, const ColumnarTable& features, std::size_t row) {
    const TreeNode* node = &nodes[0];
    while (!node->is_leaf()) {
        node = &nodes[features.at(row, node->feature) <= node->threshold ? node->left : node->right];
    }
    return *node;
}

const TreeNode& route(const NodeList& nodes, std::span<const double> x) {
    const TreeNode* node = &nodes[0];
    while (!node->is_leaf()) node = &nodes[x[node->feature] <= node->threshold ? node->left : node->right];
    return *node;
}

double gini(double benign, double attack) {
    const double total = benign + attack;
    if (total <= 0.0) return 0.0;
    const double p0 = benign / total;
    const double p1 = attack / total;
    return 1.0 - p0 * p0 - p1 * p1;
}

void TrainedModel::check_width(const ColumnarTable& features) const {
    if (features.n_features() != n_features()) {
        throw ContractViolation("model expects " + std::to_string(n_features()) + " features, got " +
                                std::to_string(features.n_features()));
    }
}

TreeModel::TreeModel(NodeList nodes, std::size_t n_features) : nodes_(std::move(nodes)), n_features_(n_features) {
    if (nodes_.empty()) throw ContractViolation("TreeModel: empty node list");
}

std::vector<double> TreeModel::predict_score(const ColumnarTable& features) const {
    check_width(features);
    std::vector<double> out(features.n_rows());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = route(nodes_, features, i).value;
    return out;
}

std::size_t TreeModel::depth() const {
    std::function<std::size_t(std::int32_t)> rec = [&](std::int32_t id) -> std::size_t {
        const TreeNode& n = nodes_[id];
        return n.is_leaf() ? 0 : 1 + std::max(rec(n.left), rec(n.right));
    };
    return rec(0);
}

std::size_t TreeModel::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::string TreeModel::serialize() const {
    auto j = detail::model_header(algorithm(), n_features_);
    j["nodes"] = detail::nodes_to_json(nodes_);
    return j.dump();
}

TreeModel tree_fit(const ColumnarTable& train, const TreeLimits& limits) {
    if (train.empty()) throw ContractViolation("tree_fit: no training rows");
    const auto view = detail::view_of(train);
    const auto sorted = detail::presort(view);
    const std::vector<double> weights(train.n_rows(), 1.0);
    detail::GrowParams gp;
    gp.max_depth = limits.max_depth;
    gp.min_samples_split = limits.min_samples_split;
    return TreeModel(detail::grow_classifier(view, sorted, train.labels(), weights, gp, nullptr), train.n_features());
}

ForestModel::ForestModel(std::vector<NodeList> trees, std::vector<std::uint64_t> tree_seeds, std::size_t n_features)
    : trees_(std::move(trees)), tree_seeds_(std::move(tree_seeds)), n_features_(n_features) {
    if (trees_.empty()) throw ContractViolation("ForestModel: no trees");
    if (tree_seeds_.size() != trees_.size()) throw ContractViolation("ForestModel: one seed per tree required");
}

std::vector<double> ForestModel::predict_score(const ColumnarTable& features) const {
    check_width(features);
    std::vector<double> votes(features.n_rows(), 0.0);
    for (const auto& tree : trees_) {
        for (std::size_t i = 0; i < votes.size(); ++i) {
            if (route(tree, features, i).value > 0.5) votes[i] += 1.0;
        }
    }
    const double n = static_cast<double>(trees_.size());
    for (double& v : votes) v /= n;
    return votes;
}

std::string ForestModel::serialize() const {
    auto j = detail::model_header(algorithm(), n_features_);
    j["tree_seeds"] = tree_seeds_;
    auto arr = detail::Json::array();
    for (const auto& t : trees_) arr.push_back(detail::nodes_to_json(t));
    j["trees"] = std::move(arr);
    return j.dump();
}

ForestModel forest_fit(const ColumnarTable& train, const ForestOptions& options) {
    if (options.n_trees < 1) throw ContractViolation("forest_fit: n_trees must be >= 1");
    if (train.empty()) throw ContractViolation("forest_fit: no training rows");
    const std::size_t n = train.n_rows();
    const std::size_t d = train.n_features();
    const auto view = detail::view_of(train);
    const auto sorted = detail::presort(view);

    detail::GrowParams gp;
    gp.max_depth = options.limits.max_depth;
    gp.min_samples_split = options.limits.min_samples_split;
    gp.max_features = options.max_features == 0 ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))))
                                                 : std::min(options.max_features, d);

    std::vector<NodeList> trees(options.n_trees);
    std::vector<std::uint64_t> seeds(options.n_trees);
    parallel_for(options.n_trees, options.threads, [&](std::size_t t) {
        seeds[t] = options.seed + t;
        Rng rng(seeds[t]);
        std::vector<double> weights(n, options.bootstrap ? 0.0 : 1.0);
        if (options.bootstrap) {
            for (std::size_t k = 0; k < n; ++k) weights[rng.below(n)] += 1.0;
        }
        trees[t] = detail::grow_classifier(view, sorted, train.labels(), weights, gp, &rng);
    });
    return ForestModel(std::move(trees), std::move(seeds), d);
}

namespace detail {

Json nodes_to_json(const NodeList& nodes) {
    auto arr = Json::array();
    for (const auto& n : nodes) {
        arr.push_back(Json::array({n.feature, n.threshold, n.left, n.right, n.count_benign, n.count_attack, n.value}));
    }
    return arr;
}

NodeList nodes_from_json(const Json& j) {
    NodeList nodes;
    for (const auto& a : j) {
        TreeNode n;
        n.feature = a.at(0).get<std::int32_t>();
        n.threshold = a.at(1).get<double>();
        n.left = a.at(2).get<std::int32_t>();
        n.right = a.at(3).get<std::int32_t>();
        n.count_benign = a.at(4).get<double>();
        n.count_attack = a.at(5).get<double>();
        n.value = a.at(6).get<double>();
        const auto size = static_cast<std::int32_t>(j.size());
        if (!n.is_leaf() && (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size)) {
            throw DataError("model file: node child index out of range");
        }
        nodes.push_back(n);
    }
    if (nodes.empty()) throw DataError("model file: empty tree");
    return nodes;
}

std::unique_ptr<TrainedModel> tree_from_json(const Json& j) {
    return std::make_unique<TreeModel>(nodes_from_json(j.at("nodes")), j.at("n_features").get<std::size_t>());
}

std::unique_ptr<TrainedModel> forest_from_json(const Json& j) {
    std::vector<NodeList> trees;
    for (const auto& t : j.at("trees")) trees.push_back(nodes_from_json(t));
    return std::make_unique<ForestModel>(std::move(trees), j.at("tree_seeds").get<std::vector<std::uint64_t>>(),
                                         j.at("n_features").get<std::size_t>());
}

}  // namespace detail

}  // namespace idsbench
