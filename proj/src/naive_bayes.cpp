#include "idsbench/naive_bayes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "idsbench/error.hpp"
#include "model_json.hpp"

namespace idsbench {

GaussianNbModel::GaussianNbModel(std::array<ClassStats, 2> classes, double variance_floor)
    : classes_(std::move(classes)), variance_floor_(variance_floor) {
    const std::size_t d = classes_[0].mean.size();
    for (const auto& c : classes_) {
        if (c.mean.size() != d || c.variance.size() != d) throw ContractViolation("GaussianNbModel: ragged statistics");
        for (double v : c.variance) {
            if (!(v > 0.0)) throw ContractViolation("GaussianNbModel: variances must be positive");
        }
    }
}

double GaussianNbModel::score(std::span<const double> x) const {
    if (x.size() != n_features()) throw ContractViolation("gnb_score: dimension mismatch");
    constexpr double log_2pi = 1.8378770664093454835606594728112;  // log(2*pi)
    double joint[2];
    for (int c = 0; c < 2; ++c) {
        const auto& s = classes_[c];
        double ll = s.log_prior;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double diff = x[j] - s.mean[j];
            ll -= 0.5 * (log_2pi + std::log(s.variance[j]) + diff * diff / s.variance[j]);
        }
        joint[c] = ll;
    }
    // log-sum-exp normalisation
    const double hi = std::max(joint[0], joint[1]);
    const double log_norm = hi + std::log(std::exp(joint[0] - hi) + std::exp(joint[1] - hi));
    return std::exp(joint[1] - log_norm);
}

std::vector<double> GaussianNbModel::predict_score(const ColumnarTable& features) const {
    check_width(features);
    std::vector<double> out(features.n_rows());
    std::vector<double> x(features.n_features());
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t j = 0; j < x.size(); ++j) x[j] = features.at(i, j);
        out[i] = score(x);
    }
    return out;
}

std::string GaussianNbModel::serialize() const {
    auto j = detail::model_header(algorithm(), n_features());
    j["variance_floor"] = variance_floor_;
    auto arr = detail::Json::array();
    for (const auto& c : classes_) {
        arr.push_back({{"log_prior", c.log_prior}, {"mean", c.mean}, {"variance", c.variance}});
    }
    j["classes"] = std::move(arr);
    return j.dump();
}

GaussianNbModel gnb_fit(const ColumnarTable& train, double smoothing) {
    if (!(smoothing > 0.0)) throw ContractViolation("gnb_fit: smoothing factor must be > 0");
    const std::size_t n = train.n_rows();
    const std::size_t d = train.n_features();
    const auto labels = train.labels();
    double count[2] = {0.0, 0.0};
    for (Label l : labels) count[l] += 1.0;
    if (count[0] == 0.0 || count[1] == 0.0) throw PipelineError("gnb_fit: both classes must be present");

    std::array<GaussianNbModel::ClassStats, 2> cls;
    double max_var = 0.0;
    for (int c = 0; c < 2; ++c) {
        cls[c].log_prior = std::log(count[c] / static_cast<double>(n));
        cls[c].mean.assign(d, 0.0);
        cls[c].variance.assign(d, 0.0);
    }
    for (std::size_t j = 0; j < d; ++j) {
        const auto col = train.values(j);
        double sum[2] = {0.0, 0.0};
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum[labels[i]] += col[i];
            total += col[i];
        }
        const double mean_all = total / static_cast<double>(n);
        double ss_all = 0.0;
        double ss[2] = {0.0, 0.0};
        for (int c = 0; c < 2; ++c) cls[c].mean[j] = sum[c] / count[c];
        for (std::size_t i = 0; i < n; ++i) {
            const double dc = col[i] - cls[labels[i]].mean[j];
            ss[labels[i]] += dc * dc;
            ss_all += (col[i] - mean_all) * (col[i] - mean_all);
        }
        for (int c = 0; c < 2; ++c) cls[c].variance[j] = ss[c] / count[c];
        max_var = std::max(max_var, ss_all / static_cast<double>(n));
    }

    // With every feature constant the relative floor would be zero; fall back to the factor itself.
    const double floor = max_var > 0.0 ? smoothing * max_var : smoothing;
    for (auto& c : cls) {
        for (double& v : c.variance) v = std::max(v, floor);
    }
    return GaussianNbModel(std::move(cls), floor);
}

namespace detail {

std::unique_ptr<TrainedModel> gnb_from_json(const Json& j) {
    std::array<GaussianNbModel::ClassStats, 2> cls;
    const auto& arr = j.at("classes");
    if (arr.size() != 2) throw DataError("model file: naive bayes needs two classes");
    for (int c = 0; c < 2; ++c) {
        cls[c].log_prior = arr[c].at("log_prior").get<double>();
        cls[c].mean = arr[c].at("mean").get<std::vector<double>>();
        cls[c].variance = arr[c].at("variance").get<std::vector<double>>();
    }
    return std::make_unique<GaussianNbModel>(std::move(cls), j.at("variance_floor").get<double>());
}

}  // namespace detail

}  // namespace idsbench
