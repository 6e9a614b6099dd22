#include "idsbench/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "model_json.hpp"

namespace idsbench {

namespace {

using Eigen::ArrayXXd;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) - y z, computed without overflow.
double bce_from_logit(double z, double y) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - y * z; }

MatrixXd gather_columns(const MatrixXd& x, std::span<const std::size_t> idx) {
    MatrixXd out(x.rows(), static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Index>(k)) = x.col(static_cast<Index>(idx[k]));
    return out;
}

VectorXd gather(const VectorXd& y, std::span<const std::size_t> idx) {
    VectorXd out(static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Index>(k)) = y(static_cast<Index>(idx[k]));
    return out;
}

MatrixXd samples_as_columns(const ColumnarTable& t, std::size_t begin, std::size_t end) {
    MatrixXd x(static_cast<Index>(t.n_features()), static_cast<Index>(end - begin));
    for (std::size_t j = 0; j < t.n_features(); ++j) {
        const auto col = t.values(j);
        for (std::size_t i = begin; i < end; ++i) x(static_cast<Index>(j), static_cast<Index>(i - begin)) = col[i];
    }
    return x;
}

double binary_accuracy(const VectorXd& p, const VectorXd& y) {
    double correct = 0.0;
    for (Index i = 0; i < p.size(); ++i) correct += ((p(i) > 0.5 ? 1.0 : 0.0) == y(i)) ? 1.0 : 0.0;
    return p.size() > 0 ? correct / static_cast<double>(p.size()) : 0.0;
}

}  // namespace

Eigen::ArrayXXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
    const double keep_scale = 1.0 / (1.0 - rate);
    Eigen::ArrayXXd mask(rows, cols);
    for (Index k = 0; k < mask.size(); ++k) mask.data()[k] = rng.uniform() >= rate ? keep_scale : 0.0;
    return mask;
}

MlpModel::MlpModel(std::size_t n_inputs, const MlpConfig& config) : n_inputs_(n_inputs), config_(config) {
    if (n_inputs == 0) throw ContractViolation("MlpModel: no inputs");
    if (config.dropout < 0.0 || config.dropout >= 1.0) throw ContractViolation("MlpModel: dropout must be in [0, 1)");
    const auto d = static_cast<Index>(n_inputs);
    norm_.gamma = VectorXd::Ones(d);
    norm_.beta = VectorXd::Zero(d);
    norm_.running_mean = VectorXd::Zero(d);
    norm_.running_var = VectorXd::Ones(d);

    Rng rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
    std::size_t fan_in = n_inputs;
    for (std::size_t width : config.hidden) {
        Dense layer{MatrixXd(static_cast<Index>(width), static_cast<Index>(fan_in)), VectorXd::Zero(static_cast<Index>(width))};
        const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (Index k = 0; k < layer.weight.size(); ++k) layer.weight.data()[k] = stddev * rng.normal();
        layers_.push_back(std::move(layer));
        fan_in = width;
    }
    Dense out{MatrixXd(1, static_cast<Index>(fan_in)), VectorXd::Zero(1)};
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + 1));
    for (Index k = 0; k < out.weight.size(); ++k) out.weight.data()[k] = rng.uniform(-limit, limit);
    layers_.push_back(std::move(out));
}

VectorXd MlpModel::forward(const MatrixXd& x) const {
    const VectorXd inv_std = (norm_.running_var.array() + config_.bn_epsilon).rsqrt();
    MatrixXd a = ((x.colwise() - norm_.running_mean).array().colwise() * (inv_std.array() * norm_.gamma.array()))
                     .colwise() +
                 norm_.beta.array();
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        MatrixXd z = layers_[l].weight * a;
        z.colwise() += layers_[l].bias;
        a = z.cwiseMax(0.0);
    }
    RowVectorXd logits = layers_.back().weight * a;
    logits.array() += layers_.back().bias(0);
    VectorXd p(logits.size());
    for (Index i = 0; i < logits.size(); ++i) p(i) = sigmoid(logits(i));
    return p;
}

double MlpModel::loss_and_gradients(const MatrixXd& x, const VectorXd& y, NormMode mode, Rng* dropout_rng,
                                    Gradients* grads, VectorXd* outputs) const {
    const Index batch = x.cols();
    if (batch == 0 || y.size() != batch) throw ContractViolation("mlp: empty batch or label length mismatch");
    if (x.rows() != static_cast<Index>(n_inputs_)) throw ContractViolation("mlp: input width mismatch");

    VectorXd mean;
    VectorXd var;
    if (mode == NormMode::batch) {
        mean = x.rowwise().mean();
        var = (x.colwise() - mean).array().square().rowwise().sum() / static_cast<double>(batch);
    } else {
        mean = norm_.running_mean;
        var = norm_.running_var;
    }
    const VectorXd inv_std = (var.array() + config_.bn_epsilon).rsqrt();
    const MatrixXd xhat = (x.colwise() - mean).array().colwise() * inv_std.array();

    const std::size_t n_layers = layers_.size();
    std::vector<MatrixXd> inputs(n_layers);   // input to each dense layer
    std::vector<MatrixXd> pre(n_layers - 1);  // hidden pre-activations
    std::vector<ArrayXXd> masks(n_layers - 1);
    const bool drop = dropout_rng != nullptr && config_.dropout > 0.0;

    inputs[0] = (xhat.array().colwise() * norm_.gamma.array()).colwise() + norm_.beta.array();
    for (std::size_t l = 0; l + 1 < n_layers; ++l) {
        pre[l] = layers_[l].weight * inputs[l];
        pre[l].colwise() += layers_[l].bias;
        MatrixXd a = pre[l].cwiseMax(0.0);
        if (drop) {
            masks[l] = dropout_mask(a.rows(), a.cols(), config_.dropout, *dropout_rng);
            a.array() *= masks[l];
        }
        inputs[l + 1] = std::move(a);
    }
    RowVectorXd logits = layers_.back().weight * inputs.back();
    logits.array() += layers_.back().bias(0);

    double loss = 0.0;
    RowVectorXd dz(batch);
    if (outputs != nullptr) outputs->resize(batch);
    for (Index i = 0; i < batch; ++i) {
        loss += bce_from_logit(logits(i), y(i));
        const double p = sigmoid(logits(i));
        dz(i) = (p - y(i)) / static_cast<double>(batch);
        if (outputs != nullptr) (*outputs)(i) = p;
    }
    loss /= static_cast<double>(batch);
    if (grads == nullptr) return loss;

    grads->weight.resize(n_layers);
    grads->bias.resize(n_layers);
    MatrixXd delta = dz;
    for (std::size_t l = n_layers; l-- > 0;) {
        grads->weight[l] = delta * inputs[l].transpose();
        grads->bias[l] = delta.rowwise().sum();
        MatrixXd upstream = layers_[l].weight.transpose() * delta;
        if (l > 0) {
            if (drop) upstream.array() *= masks[l - 1];
            delta = upstream.array() * (pre[l - 1].array() > 0.0).cast<double>();
        } else {
            grads->gamma = (upstream.array() * xhat.array()).rowwise().sum();
            grads->beta = upstream.rowwise().sum();
        }
    }
    return loss;
}

void MlpModel::update_running_stats(const MatrixXd& x) {
    const double m = config_.bn_momentum;
    const VectorXd mean = x.rowwise().mean();
    const VectorXd var = (x.colwise() - mean).array().square().rowwise().sum() / static_cast<double>(x.cols());
    norm_.running_mean = m * norm_.running_mean + (1.0 - m) * mean;
    norm_.running_var = m * norm_.running_var + (1.0 - m) * var;
}

std::vector<double*> MlpModel::parameters() {
    std::vector<double*> out;
    auto add = [&](double* p, Index n) {
        for (Index k = 0; k < n; ++k) out.push_back(p + k);
    };
    add(norm_.gamma.data(), norm_.gamma.size());
    add(norm_.beta.data(), norm_.beta.size());
    for (auto& l : layers_) {
        add(l.weight.data(), l.weight.size());
        add(l.bias.data(), l.bias.size());
    }
    return out;
}

std::vector<double> MlpModel::flatten(const Gradients& g) {
    std::vector<double> out;
    auto add = [&](const double* p, Index n) { out.insert(out.end(), p, p + n); };
    add(g.gamma.data(), g.gamma.size());
    add(g.beta.data(), g.beta.size());
    for (std::size_t l = 0; l < g.weight.size(); ++l) {
        add(g.weight[l].data(), g.weight[l].size());
        add(g.bias[l].data(), g.bias[l].size());
    }
    return out;
}

std::vector<double> MlpModel::predict_score(const ColumnarTable& features) const {
    check_width(features);
    std::vector<double> out;
    out.reserve(features.n_rows());
    constexpr std::size_t chunk = 8192;
    for (std::size_t begin = 0; begin < features.n_rows(); begin += chunk) {
        const std::size_t end = std::min(features.n_rows(), begin + chunk);
        const VectorXd p = forward(samples_as_columns(features, begin, end));
        out.insert(out.end(), p.data(), p.data() + p.size());
    }
    return out;
}

std::string MlpModel::serialize() const {
    auto j = detail::model_header(algorithm(), n_inputs_);
    auto vec = [](const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    j["hidden"] = config_.hidden;
    j["dropout"] = config_.dropout;
    j["bn_epsilon"] = config_.bn_epsilon;
    j["batch_norm"] = {{"gamma", vec(norm_.gamma)},
                       {"beta", vec(norm_.beta)},
                       {"running_mean", vec(norm_.running_mean)},
                       {"running_var", vec(norm_.running_var)}};
    auto arr = detail::Json::array();
    for (const auto& l : layers_) {
        arr.push_back({{"rows", l.weight.rows()},
                       {"cols", l.weight.cols()},
                       {"weight", std::vector<double>(l.weight.data(), l.weight.data() + l.weight.size())},
                       {"bias", vec(l.bias)}});
    }
    j["layers"] = std::move(arr);
    return j.dump();
}

struct MlpAccess {
    static MlpModel from_json(const detail::Json& j) {
        MlpConfig cfg;
        cfg.hidden = j.at("hidden").get<std::vector<std::size_t>>();
        cfg.dropout = j.at("dropout").get<double>();
        cfg.bn_epsilon = j.at("bn_epsilon").get<double>();
        MlpModel m(j.at("n_features").get<std::size_t>(), cfg);
        auto vec = [](const detail::Json& a, Index expected) {
            const auto v = a.get<std::vector<double>>();
            if (static_cast<Index>(v.size()) != expected) throw DataError("model file: mlp vector size mismatch");
            return VectorXd(Eigen::Map<const VectorXd>(v.data(), expected));
        };
        const auto& bn = j.at("batch_norm");
        const Index d = m.norm_.gamma.size();
        m.norm_.gamma = vec(bn.at("gamma"), d);
        m.norm_.beta = vec(bn.at("beta"), d);
        m.norm_.running_mean = vec(bn.at("running_mean"), d);
        m.norm_.running_var = vec(bn.at("running_var"), d);
        const auto& layers = j.at("layers");
        if (layers.size() != m.layers_.size()) throw DataError("model file: mlp layer count mismatch");
        for (std::size_t l = 0; l < m.layers_.size(); ++l) {
            auto& dst = m.layers_[l];
            const Index rows = layers[l].at("rows").get<Index>();
            const Index cols = layers[l].at("cols").get<Index>();
            if (rows != dst.weight.rows() || cols != dst.weight.cols()) throw DataError("model file: mlp shape mismatch");
            const VectorXd w = vec(layers[l].at("weight"), rows * cols);
            dst.weight = Eigen::Map<const MatrixXd>(w.data(), rows, cols);
            dst.bias = vec(layers[l].at("bias"), rows);
        }
        return m;
    }
};

MlpModel mlp_fit(const ColumnarTable& train, const MlpConfig& config) {
    const std::size_t n = train.n_rows();
    if (n < 2) throw PipelineError("mlp_fit: need at least two training rows");
    if (train.count_label(0) == 0 || train.count_label(1) == 0) {
        throw PipelineError("mlp_fit: both classes must be present");
    }
    if (config.batch_size == 0) throw ContractViolation("mlp_fit: batch_size must be > 0");
    if (config.validation_fraction < 0.0 || config.validation_fraction >= 1.0) {
        throw ContractViolation("mlp_fit: validation_fraction must be in [0, 1)");
    }

    const MatrixXd x = samples_as_columns(train, 0, n);
    VectorXd y(static_cast<Index>(n));
    for (std::size_t i = 0; i < n; ++i) y(static_cast<Index>(i)) = train.labels()[i];

    Rng rng(config.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * config.validation_fraction));
    std::vector<std::size_t> train_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
    const std::vector<std::size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
    const MatrixXd x_val = gather_columns(x, val_idx);
    const VectorXd y_val = gather(y, val_idx);

    MlpModel model(train.n_features(), config);
    auto params = model.parameters();
    std::vector<double> m1(params.size(), 0.0);
    std::vector<double> m2(params.size(), 0.0);
    std::size_t step = 0;

    MlpModel best = model;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    MlpModel::Gradients grads;
    VectorXd outputs;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        rng.shuffle(train_idx);
        double loss_sum = 0.0;
        double correct = 0.0;
        std::size_t batch_no = 0;
        for (std::size_t begin = 0; begin < train_idx.size(); begin += config.batch_size, ++batch_no) {
            const std::size_t end = std::min(train_idx.size(), begin + config.batch_size);
            const std::span<const std::size_t> idx(train_idx.data() + begin, end - begin);
            const MatrixXd xb = gather_columns(x, idx);
            const VectorXd yb = gather(y, idx);
            const double loss = model.loss_and_gradients(xb, yb, MlpModel::NormMode::batch, &rng, &grads, &outputs);
            if (!std::isfinite(loss)) {
                throw MlpTrainingError("mlp_fit: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                       std::to_string(batch_no));
            }
            model.update_running_stats(xb);

            ++step;
            const auto g = MlpModel::flatten(grads);
            const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
            for (std::size_t k = 0; k < params.size(); ++k) {
                m1[k] = config.beta1 * m1[k] + (1.0 - config.beta1) * g[k];
                m2[k] = config.beta2 * m2[k] + (1.0 - config.beta2) * g[k] * g[k];
                *params[k] -= config.learning_rate * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + config.adam_epsilon);
            }
            loss_sum += loss * static_cast<double>(idx.size());
            correct += binary_accuracy(outputs, yb) * static_cast<double>(idx.size());
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(train_idx.size());
        rec.train_accuracy = correct / static_cast<double>(train_idx.size());
        if (n_val > 0) {
            VectorXd p_val;
            rec.val_loss =
                model.loss_and_gradients(x_val, y_val, MlpModel::NormMode::running, nullptr, nullptr, &p_val);
            rec.val_accuracy = binary_accuracy(p_val, y_val);
        } else {
            rec.val_loss = rec.train_loss;
            rec.val_accuracy = rec.train_accuracy;
        }
        if (!std::isfinite(rec.val_loss)) {
            throw MlpTrainingError("mlp_fit: non-finite validation loss at epoch " + std::to_string(epoch));
        }
        model.history_.push_back(rec);

        if (rec.val_loss < best_loss) {
            best_loss = rec.val_loss;
            best = model;
            best.best_epoch_ = epoch;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            break;
        }
    }
    best.history_ = model.history_;
    return best;
}

namespace detail {

std::unique_ptr<TrainedModel> mlp_from_json(const Json& j) { return std::make_unique<MlpModel>(MlpAccess::from_json(j)); }

}  // namespace detail

}  // namespace idsbench
