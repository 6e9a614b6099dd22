#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "idsbench/tree.hpp"

namespace idsbench {

struct BoostOptions {
    std::size_t rounds = 100;
    double learning_rate = 0.3;
    int max_depth = 6;
    double lambda = 1.0;            // L2 penalty on leaf weights
    double min_child_weight = 1.0;  // minimum hessian sum per child
};

// probability = logistic(initial_margin + learning_rate * sum of tree outputs)
class BoostModel final : public TrainedModel {
public:
    BoostModel(double initial_margin, double learning_rate, std::vector<NodeList> trees, std::size_t n_features);

    Algorithm algorithm() const override { return Algorithm::boosting; }
    std::size_t n_features() const override { return n_features_; }
    std::vector<double> predict_score(const ColumnarTable& features) const override;
    std::string serialize() const override;

    std::vector<double> predict_margin(const ColumnarTable& features) const;

    double initial_margin() const noexcept { return initial_margin_; }
    double learning_rate() const noexcept { return learning_rate_; }
    const std::vector<NodeList>& trees() const noexcept { return trees_; }

private:
    double initial_margin_;
    double learning_rate_;
    std::vector<NodeList> trees_;
    std::size_t n_features_;
};

// Second-order boosting on logistic loss with exact greedy regression trees.
// Leaf weight = -G / (H + lambda).
BoostModel boost_fit(const ColumnarTable& train, const BoostOptions& options = {});

// Mean binary cross-entropy of probabilities against labels.
double log_loss(std::span<const Label> labels, std::span<const double> probabilities);

}  // namespace idsbench
