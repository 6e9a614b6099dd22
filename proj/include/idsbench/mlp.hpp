#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "idsbench/classifiers.hpp"
#include "idsbench/error.hpp"
#include "idsbench/util.hpp"

namespace idsbench {

struct MlpConfig {
    std::vector<std::size_t> hidden = {128, 64, 32};
    double dropout = 0.3;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::size_t batch_size = 512;
    std::size_t max_epochs = 100;
    std::size_t patience = 5;
    double validation_fraction = 0.1;
    double bn_momentum = 0.99;
    double bn_epsilon = 1e-3;
    std::uint64_t seed = 42;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;  // binary accuracy at 0.5
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

class MlpTrainingError : public PipelineError {
public:
    using PipelineError::PipelineError;
};

// Inverted dropout: each entry is 0 with probability `rate`, else 1 / (1 - rate).
Eigen::ArrayXXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng);

// input -> batch-norm -> [dense(ReLU) -> dropout] x hidden.size() -> dense(1, sigmoid)
class MlpModel final : public TrainedModel {
public:
    struct Dense {
        Eigen::MatrixXd weight;  // out x in
        Eigen::VectorXd bias;
    };
    struct BatchNorm {
        Eigen::VectorXd gamma;
        Eigen::VectorXd beta;
        Eigen::VectorXd running_mean;
        Eigen::VectorXd running_var;
    };
    struct Gradients {
        Eigen::VectorXd gamma;
        Eigen::VectorXd beta;
        std::vector<Eigen::MatrixXd> weight;
        std::vector<Eigen::VectorXd> bias;
    };
    // batch: normalise with the batch's own statistics (training); running: use stored statistics.
    enum class NormMode { batch, running };

    // He-normal hidden layers, Glorot-uniform output layer, zero biases.
    MlpModel(std::size_t n_inputs, const MlpConfig& config);

    Algorithm algorithm() const override { return Algorithm::mlp; }
    std::size_t n_features() const override { return n_inputs_; }
    std::vector<double> predict_score(const ColumnarTable& features) const override;
    std::string serialize() const override;

    // Inference-mode outputs for samples stored as columns (n_inputs x batch).
    Eigen::VectorXd forward(const Eigen::MatrixXd& x) const;

    // Mean binary cross-entropy on one batch. With dropout_rng set, dropout masks are drawn
    // from it; with grads set, gradients of the loss are written there. `outputs` receives
    // the sigmoid outputs when non-null.
    double loss_and_gradients(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, NormMode mode, Rng* dropout_rng,
                              Gradients* grads, Eigen::VectorXd* outputs = nullptr) const;

    // Folds the batch statistics of x into the running estimates.
    void update_running_stats(const Eigen::MatrixXd& x);

    // Flat views over all trainable parameters, in a fixed order.
    std::vector<double*> parameters();
    static std::vector<double> flatten(const Gradients& grads);

    const MlpConfig& config() const noexcept { return config_; }
    std::vector<Dense>& layers() noexcept { return layers_; }
    const std::vector<Dense>& layers() const noexcept { return layers_; }
    BatchNorm& batch_norm() noexcept { return norm_; }
    const BatchNorm& batch_norm() const noexcept { return norm_; }

    const std::vector<EpochRecord>& history() const noexcept { return history_; }
    std::size_t best_epoch() const noexcept { return best_epoch_; }

private:
    friend MlpModel mlp_fit(const ColumnarTable& train, const MlpConfig& config);
    friend struct MlpAccess;

    std::size_t n_inputs_;
    MlpConfig config_;
    BatchNorm norm_;
    std::vector<Dense> layers_;
    std::vector<EpochRecord> history_;
    std::size_t best_epoch_ = 0;
};

// Mini-batch Adam with early stopping on validation loss; the best weights are restored.
// The validation set is the last validation_fraction of the shuffled training rows.
// Throws MlpTrainingError on a non-finite loss.
MlpModel mlp_fit(const ColumnarTable& train, const MlpConfig& config = {});

}  // namespace idsbench
