#pragma once

#include <array>
#include <span>
#include <vector>

#include "idsbench/classifiers.hpp"

namespace idsbench {

class GaussianNbModel final : public TrainedModel {
public:
    struct ClassStats {
        double log_prior = 0.0;
        std::vector<double> mean;
        std::vector<double> variance;  // floored, always > 0
    };

    GaussianNbModel(std::array<ClassStats, 2> classes, double variance_floor);

    Algorithm algorithm() const override { return Algorithm::naive_bayes; }
    std::size_t n_features() const override { return classes_[0].mean.size(); }
    std::vector<double> predict_score(const ColumnarTable& features) const override;
    std::string serialize() const override;

    // P(attack | x) for one feature vector.
    double score(std::span<const double> x) const;

    const ClassStats& class_stats(Label l) const { return classes_[l]; }
    double variance_floor() const noexcept { return variance_floor_; }

private:
    std::array<ClassStats, 2> classes_;
    double variance_floor_;
};

// Population moments per class; variances floored at smoothing * max feature variance.
// Throws PipelineError when only one class is present.
GaussianNbModel gnb_fit(const ColumnarTable& train, double smoothing);

}  // namespace idsbench
