#include "idsbench/boosting.hpp"

#include <algorithm>
#include <cmath>

#include "idsbench/error.hpp"
#include "model_json.hpp"
#include "tree_grower.hpp"

namespace idsbench {

namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

BoostModel::BoostModel(double initial_margin, double learning_rate, std::vector<NodeList> trees,
                       std::size_t n_features)
    : initial_margin_(initial_margin), learning_rate_(learning_rate), trees_(std::move(trees)),
      n_features_(n_features) {}

std::vector<double> BoostModel::predict_margin(const ColumnarTable& features) const {
    check_width(features);
    std::vector<double> margin(features.n_rows(), 0.0);
    for (const auto& tree : trees_) {
        for (std::size_t i = 0; i < margin.size(); ++i) margin[i] += route(tree, features, i).value;
    }
    for (double& m : margin) m = initial_margin_ + learning_rate_ * m;
    return margin;
}

std::vector<double> BoostModel::predict_score(const ColumnarTable& features) const {
    auto margin = predict_margin(features);
    for (double& m : margin) m = sigmoid(m);
    return margin;
}

std::string BoostModel::serialize() const {
    auto j = detail::model_header(algorithm(), n_features_);
    j["initial_margin"] = initial_margin_;
    j["learning_rate"] = learning_rate_;
    auto arr = detail::Json::array();
    for (const auto& t : trees_) arr.push_back(detail::nodes_to_json(t));
    j["trees"] = std::move(arr);
    return j.dump();
}

BoostModel boost_fit(const ColumnarTable& train, const BoostOptions& options) {
    if (train.empty()) throw ContractViolation("boost_fit: no training rows");
    if (!(options.learning_rate > 0.0)) throw ContractViolation("boost_fit: learning_rate must be > 0");
    if (options.lambda < 0.0) throw ContractViolation("boost_fit: lambda must be >= 0");
    const std::size_t n = train.n_rows();
    const auto labels = train.labels();

    const double prior = std::clamp(static_cast<double>(train.count_label(1)) / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
    const double base = std::log(prior / (1.0 - prior));

    const auto view = detail::view_of(train);
    const auto sorted = options.rounds > 0 ? detail::presort(view) : detail::SortedIndex{};
    detail::GrowParams gp;
    gp.max_depth = options.max_depth;
    gp.lambda = options.lambda;
    gp.min_child_weight = options.min_child_weight;

    std::vector<double> margin(n, base);
    std::vector<double> grad(n);
    std::vector<double> hess(n);
    std::vector<NodeList> trees;
    trees.reserve(options.rounds);
    for (std::size_t round = 0; round < options.rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(margin[i]);
            grad[i] = p - static_cast<double>(labels[i]);
            hess[i] = std::max(p * (1.0 - p), 1e-16);
        }
        NodeList tree = detail::grow_regressor(view, sorted, grad, hess, gp);
        for (std::size_t i = 0; i < n; ++i) margin[i] += options.learning_rate * route(tree, train, i).value;
        trees.push_back(std::move(tree));
    }
    return BoostModel(base, options.learning_rate, std::move(trees), train.n_features());
}

double log_loss(std::span<const Label> labels, std::span<const double> probabilities) {
    if (labels.size() != probabilities.size() || labels.empty()) throw ContractViolation("log_loss: bad lengths");
    double sum = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double p = std::clamp(probabilities[i], 1e-15, 1.0 - 1e-15);
        sum -= labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
    }
    return sum / static_cast<double>(labels.size());
}

namespace detail {

std::unique_ptr<TrainedModel> boost_from_json(const Json& j) {
    std::vector<NodeList> trees;
    for (const auto& t : j.at("trees")) trees.push_back(nodes_from_json(t));
    return std::make_unique<BoostModel>(j.at("initial_margin").get<double>(), j.at("learning_rate").get<double>(),
                                        std::move(trees), j.at("n_features").get<std::size_t>());
}

}  // namespace detail

}  // namespace idsbench
