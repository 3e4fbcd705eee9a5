#pragma once

#include "procqx/dataset.hpp"
#include "procqx/rng.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace procqx {

/// Training regime: rectifier units with inverted dropout, ADADELTA updates,
/// a per-unit incoming-weight-norm cap, and AUROC-based early stopping.
struct NetworkConfig {
    std::size_t input_dim = kFeatureCount;
    std::vector<std::size_t> hidden_sizes{64, 64, 64, 64};
    double input_dropout = 0.2;
    std::vector<double> hidden_dropout{0.5, 0.5, 0.5, 0.5};
    std::size_t max_epochs = 1000;
    double rho = 0.99;
    double epsilon = 1e-8;
    double max_w2 = 100.0;
    std::size_t stopping_rounds = 5;
    double stopping_tolerance = 0.005;
    std::size_t minibatch_size = 32;
    std::uint64_t seed = 0;

    void validate() const; // throws ValidationError
};

/// Weights are row-major: w[u * in + i] feeds unit u from input i.
struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> w;
    std::vector<double> b;

    bool operator==(const Layer&) const = default;
};

/// Hidden layers (ReLU) followed by a single sigmoid output unit.
struct Network {
    std::vector<Layer> layers;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
    std::size_t parameter_count() const;

    bool operator==(const Network&) const = default;
};

/// Uniform-adaptive init: per layer, weights ~ U(-a, a) with
/// a = sqrt(6 / (fan_in + fan_out)); biases zero. Deterministic for the
/// config seed.
Network init_network(const NetworkConfig& config);

/// Inference-mode score in (0, 1); no dropout, no rescaling.
double forward(const Network& net, const FeatureVector& x);

/// Multiplicative activation scales for one example: 0 for dropped units,
/// 1/keep_prob for kept ones (inverted dropout).
struct DropoutMask {
    std::vector<double> input;
    std::vector<std::vector<double>> hidden; // one per hidden layer
};

DropoutMask sample_dropout_mask(const NetworkConfig& config, Rng& rng);

/// Training-mode score with an explicit mask.
double forward_train(const Network& net, const FeatureVector& x, const DropoutMask& mask);

/// Training-mode score with a mask freshly drawn from `seed`.
double forward_train(const Network& net, const NetworkConfig& config, const FeatureVector& x,
                     std::uint64_t seed);

/// Per-parameter storage shaped like a Network; also used for the ADADELTA
/// accumulators.
struct ParamTensor {
    struct LayerSlot {
        std::vector<double> w;
        std::vector<double> b;
    };
    std::vector<LayerSlot> layers;

    static ParamTensor zeros_like(const Network& net);
};

using Gradients = ParamTensor;

/// Mean binary cross-entropy over the batch (probabilities clamped to
/// [1e-12, 1-1e-12]) and exact backpropagation through the masked network.
/// Labels are 1 for Passed, 0 for Failed.
double loss_and_gradients(const Network& net, const std::vector<FeatureVector>& rows,
                          const std::vector<int>& targets, const std::vector<DropoutMask>& masks,
                          Gradients& grads);

struct AdadeltaState {
    ParamTensor accum_grad_sq;   // E[g^2]
    ParamTensor accum_update_sq; // E[dx^2]

    static AdadeltaState zeros_like(const Network& net);
};

/// One ADADELTA update applied in place:
///   E[g^2]  <- rho E[g^2] + (1-rho) g^2
///   dx       = -sqrt(E[dx^2]+eps) / sqrt(E[g^2]+eps) * g
///   E[dx^2] <- rho E[dx^2] + (1-rho) dx^2
void adadelta_step(Network& net, AdadeltaState& state, const Gradients& grads, double rho,
                   double epsilon);

/// Rescales each unit's incoming weights so their squared sum is at most
/// `limit`; biases untouched.
void clip_max_w2(Network& net, double limit);

struct ScoringRound {
    std::size_t epoch = 0; // 1-based
    double val_auroc = 0.0;
    double train_loss = 0.0;
};

struct TrainingHistory {
    std::vector<ScoringRound> rounds;
    bool stopped_early = false;
    std::size_t best_epoch = 0;  // earliest round with the maximum AUROC
    double best_auroc = 0.0;
    /// AUROC of the restored best snapshot, re-scored after training; this is
    /// the validation AUROC of the network actually returned.
    double final_validation_auroc = 0.0;
};

/// Stop at the first round k >= 2*stopping_rounds where the moving average of
/// the last `stopping_rounds` values fails to exceed the best moving average
/// over windows ending at or before k - stopping_rounds by the relative
/// tolerance.
bool should_stop_early(const std::vector<double>& round_metrics, std::size_t stopping_rounds,
                       double relative_tolerance);

/// Hook for computing the per-round validation metric; tests may substitute a
/// scripted sequence. The default computes AUROC of infer-mode scores.
using ValidationScorer = std::function<double(const Network& net, const LabeledDataset& valid)>;

struct TrainResult {
    Network net; // snapshot from the best-AUROC round
    TrainingHistory history;
};

/// Full Table-1 regime: seeded shuffling into minibatches, masked
/// forward/backward, ADADELTA, weight-norm clipping after every update, one
/// scoring round per epoch, early stopping, best-round snapshot restore.
/// Deterministic for config.seed.
TrainResult train(const NetworkConfig& config, const LabeledDataset& train_set,
                  const LabeledDataset& valid_set, const ValidationScorer& scorer = {});

/// Infer-mode scores, one per row, order preserved.
std::vector<double> predict(const Network& net, const LabeledDataset& data);

/// Max over units of the squared sum of incoming weights.
double max_unit_weight_norm_sq(const Network& net);

} // namespace procqx
