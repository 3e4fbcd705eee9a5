#include "procqx/neural_net.hpp"

#include "procqx/errors.hpp"
#include "procqx/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace procqx {

namespace {

constexpr double kProbClamp = 1e-12;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Distinct stream ids for the seeded RNGs used during training.
enum Stream : std::uint64_t { kInitStream = 1, kShuffleStream = 2, kDropoutStream = 3 };

struct ForwardTrace {
    // activations[0] is the masked input; activations[l+1] the masked output
    // of hidden layer l; final entry the sigmoid probability.
    std::vector<std::vector<double>> activations;
    std::vector<std::vector<double>> pre_activations; // per layer
};

void check_finite_input(const FeatureVector& x, std::size_t expected_dim) {
    if (x.size() != expected_dim) {
        throw ValidationError("input has " + std::to_string(x.size()) + " features, network expects " +
                              std::to_string(expected_dim));
    }
    for (double v : x) {
        if (!std::isfinite(v)) throw ValidationError("non-finite network input");
    }
}

void affine(const Layer& layer, const std::vector<double>& in, std::vector<double>& out) {
    out.assign(layer.out, 0.0);
    for (std::size_t u = 0; u < layer.out; ++u) {
        const double* wrow = layer.w.data() + u * layer.in;
        double z = layer.b[u];
        for (std::size_t i = 0; i < layer.in; ++i) z += wrow[i] * in[i];
        out[u] = z;
    }
}

ForwardTrace run_forward(const Network& net, const FeatureVector& x, const DropoutMask* mask) {
    ForwardTrace trace;
    const std::size_t n_layers = net.layers.size();
    trace.activations.resize(n_layers + 1);
    trace.pre_activations.resize(n_layers);

    trace.activations[0] = x;
    if (mask) {
        for (std::size_t i = 0; i < x.size(); ++i) trace.activations[0][i] *= mask->input[i];
    }
    for (std::size_t l = 0; l < n_layers; ++l) {
        affine(net.layers[l], trace.activations[l], trace.pre_activations[l]);
        auto& act = trace.activations[l + 1];
        act = trace.pre_activations[l];
        if (l + 1 < n_layers) {
            for (double& v : act) v = std::max(0.0, v);
            if (mask) {
                const auto& m = mask->hidden[l];
                for (std::size_t u = 0; u < act.size(); ++u) act[u] *= m[u];
            }
        } else {
            act[0] = sigmoid(act[0]);
        }
    }
    return trace;
}

} // namespace

void NetworkConfig::validate() const {
    if (input_dim == 0) throw ValidationError("input_dim must be positive");
    if (hidden_sizes.empty()) throw ValidationError("at least one hidden layer required");
    for (std::size_t h : hidden_sizes) {
        if (h == 0) throw ValidationError("hidden layer sizes must be positive");
    }
    if (hidden_dropout.size() != hidden_sizes.size()) {
        throw ValidationError("hidden_dropout must list one ratio per hidden layer");
    }
    if (input_dropout < 0.0 || input_dropout >= 1.0) {
        throw ValidationError("input_dropout must be in [0,1)");
    }
    for (double d : hidden_dropout) {
        if (d < 0.0 || d >= 1.0) throw ValidationError("hidden dropout ratios must be in [0,1)");
    }
    if (!(rho > 0.0) || !(rho < 1.0)) throw ValidationError("rho must be in (0,1)");
    if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
    if (!(max_w2 > 0.0)) throw ValidationError("max_w2 must be positive");
    if (minibatch_size == 0) throw ValidationError("minibatch_size must be positive");
    if (max_epochs == 0) throw ValidationError("max_epochs must be positive");
    if (stopping_rounds == 0) throw ValidationError("stopping_rounds must be positive");
    if (!(stopping_tolerance >= 0.0)) throw ValidationError("stopping_tolerance must be nonnegative");
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) n += layer.w.size() + layer.b.size();
    return n;
}

Network init_network(const NetworkConfig& config) {
    config.validate();
    Rng rng(derive_seed(config.seed, kInitStream));
    Network net;
    std::vector<std::size_t> sizes;
    sizes.push_back(config.input_dim);
    sizes.insert(sizes.end(), config.hidden_sizes.begin(), config.hidden_sizes.end());
    sizes.push_back(1);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        Layer layer;
        layer.in = sizes[l];
        layer.out = sizes[l + 1];
        const double a = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
        layer.w.resize(layer.in * layer.out);
        for (double& w : layer.w) w = rng.uniform(-a, a);
        layer.b.assign(layer.out, 0.0);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

double forward(const Network& net, const FeatureVector& x) {
    check_finite_input(x, net.input_dim());
    return run_forward(net, x, nullptr).activations.back()[0];
}

DropoutMask sample_dropout_mask(const NetworkConfig& config, Rng& rng) {
    DropoutMask mask;
    const double input_keep = 1.0 - config.input_dropout;
    mask.input.resize(config.input_dim);
    for (double& m : mask.input) {
        m = rng.uniform01() < input_keep ? 1.0 / input_keep : 0.0;
    }
    mask.hidden.resize(config.hidden_sizes.size());
    for (std::size_t l = 0; l < config.hidden_sizes.size(); ++l) {
        const double keep = 1.0 - config.hidden_dropout[l];
        mask.hidden[l].resize(config.hidden_sizes[l]);
        for (double& m : mask.hidden[l]) {
            m = rng.uniform01() < keep ? 1.0 / keep : 0.0;
        }
    }
    return mask;
}

double forward_train(const Network& net, const FeatureVector& x, const DropoutMask& mask) {
    check_finite_input(x, net.input_dim());
    return run_forward(net, x, &mask).activations.back()[0];
}

double forward_train(const Network& net, const NetworkConfig& config, const FeatureVector& x,
                     std::uint64_t seed) {
    Rng rng(derive_seed(seed, kDropoutStream));
    const DropoutMask mask = sample_dropout_mask(config, rng);
    return forward_train(net, x, mask);
}

ParamTensor ParamTensor::zeros_like(const Network& net) {
    ParamTensor t;
    t.layers.resize(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        t.layers[l].w.assign(net.layers[l].w.size(), 0.0);
        t.layers[l].b.assign(net.layers[l].b.size(), 0.0);
    }
    return t;
}

AdadeltaState AdadeltaState::zeros_like(const Network& net) {
    return AdadeltaState{ParamTensor::zeros_like(net), ParamTensor::zeros_like(net)};
}

double loss_and_gradients(const Network& net, const std::vector<FeatureVector>& rows,
                          const std::vector<int>& targets, const std::vector<DropoutMask>& masks,
                          Gradients& grads) {
    if (rows.empty() || rows.size() != targets.size() || rows.size() != masks.size()) {
        throw ValidationError("loss_and_gradients: rows, targets and masks must be nonempty and equal length");
    }
    grads = ParamTensor::zeros_like(net);
    const std::size_t n_layers = net.layers.size();
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    double loss = 0.0;

    for (std::size_t r = 0; r < rows.size(); ++r) {
        const ForwardTrace trace = run_forward(net, rows[r], &masks[r]);
        const double p = trace.activations.back()[0];
        const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
        const double y = static_cast<double>(targets[r]);
        loss += -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc)) * inv_n;

        // dL/dz for the sigmoid output under cross-entropy
        std::vector<double> delta{(p - y) * inv_n};
        for (std::size_t l = n_layers; l-- > 0;) {
            const Layer& layer = net.layers[l];
            auto& gw = grads.layers[l].w;
            auto& gb = grads.layers[l].b;
            const auto& in_act = trace.activations[l];
            for (std::size_t u = 0; u < layer.out; ++u) {
                const double d = delta[u];
                gb[u] += d;
                double* grow = gw.data() + u * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) grow[i] += d * in_act[i];
            }
            if (l == 0) break;
            // propagate to the previous hidden layer through its ReLU + mask
            std::vector<double> prev(layer.in, 0.0);
            for (std::size_t u = 0; u < layer.out; ++u) {
                const double d = delta[u];
                const double* wrow = layer.w.data() + u * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) prev[i] += d * wrow[i];
            }
            const auto& pre = trace.pre_activations[l - 1];
            const auto& m = masks[r].hidden[l - 1];
            for (std::size_t i = 0; i < prev.size(); ++i) {
                prev[i] *= (pre[i] > 0.0 ? 1.0 : 0.0) * m[i];
            }
            delta = std::move(prev);
        }
    }
    return loss;
}

void adadelta_step(Network& net, AdadeltaState& state, const Gradients& grads, double rho,
                   double epsilon) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto apply = [&](std::vector<double>& params, const std::vector<double>& g,
                               std::vector<double>& eg2, std::vector<double>& edx2) {
            for (std::size_t i = 0; i < params.size(); ++i) {
                eg2[i] = rho * eg2[i] + (1.0 - rho) * g[i] * g[i];
                const double dx = -std::sqrt(edx2[i] + epsilon) / std::sqrt(eg2[i] + epsilon) * g[i];
                edx2[i] = rho * edx2[i] + (1.0 - rho) * dx * dx;
                params[i] += dx;
            }
        };
        apply(net.layers[l].w, grads.layers[l].w, state.accum_grad_sq.layers[l].w,
              state.accum_update_sq.layers[l].w);
        apply(net.layers[l].b, grads.layers[l].b, state.accum_grad_sq.layers[l].b,
              state.accum_update_sq.layers[l].b);
    }
}

void clip_max_w2(Network& net, double limit) {
    if (!(limit > 0.0)) throw ValidationError("max_w2 limit must be positive");
    for (auto& layer : net.layers) {
        for (std::size_t u = 0; u < layer.out; ++u) {
            double* wrow = layer.w.data() + u * layer.in;
            double s = 0.0;
            for (std::size_t i = 0; i < layer.in; ++i) s += wrow[i] * wrow[i];
            if (s > limit) {
                const double scale = std::sqrt(limit / s);
                for (std::size_t i = 0; i < layer.in; ++i) wrow[i] *= scale;
            }
        }
    }
}

double max_unit_weight_norm_sq(const Network& net) {
    double worst = 0.0;
    for (const auto& layer : net.layers) {
        for (std::size_t u = 0; u < layer.out; ++u) {
            const double* wrow = layer.w.data() + u * layer.in;
            double s = 0.0;
            for (std::size_t i = 0; i < layer.in; ++i) s += wrow[i] * wrow[i];
            worst = std::max(worst, s);
        }
    }
    return worst;
}

bool should_stop_early(const std::vector<double>& round_metrics, std::size_t stopping_rounds,
                       double relative_tolerance) {
    const std::size_t r = stopping_rounds;
    const std::size_t k = round_metrics.size();
    if (r == 0 || k < 2 * r) return false;

    const auto window_mean = [&](std::size_t end) { // window ending at 1-based round `end`
        double sum = 0.0;
        for (std::size_t j = end - r; j < end; ++j) sum += round_metrics[j];
        return sum / static_cast<double>(r);
    };

    const double current = window_mean(k);
    double best_prev = -std::numeric_limits<double>::infinity();
    for (std::size_t j = r; j <= k - r; ++j) {
        best_prev = std::max(best_prev, window_mean(j));
    }
    return current <= best_prev * (1.0 + relative_tolerance);
}

TrainResult train(const NetworkConfig& config, const LabeledDataset& train_set,
                  const LabeledDataset& valid_set, const ValidationScorer& scorer) {
    config.validate();
    train_set.validate();
    valid_set.validate();
    if (!train_set.labeled() || !valid_set.labeled()) {
        throw ValidationError("train and validation sets must be labeled");
    }
    if (train_set.dim() != config.input_dim || valid_set.dim() != config.input_dim) {
        throw ValidationError("dataset dimensionality does not match config.input_dim");
    }
    bool has_passed = false, has_failed = false;
    for (Label l : *valid_set.labels) {
        (l == Label::Passed ? has_passed : has_failed) = true;
    }
    if (!has_passed || !has_failed) {
        throw ValidationError("validation set must contain both classes (AUROC undefined)");
    }

    const ValidationScorer score =
        scorer ? scorer : [](const Network& net, const LabeledDataset& valid) {
            return roc_auroc(predict(net, valid), *valid.labels).auroc;
        };

    std::vector<int> targets(train_set.size());
    for (std::size_t i = 0; i < train_set.size(); ++i) {
        targets[i] = (*train_set.labels)[i] == Label::Passed ? 1 : 0;
    }

    Network net = init_network(config);
    AdadeltaState state = AdadeltaState::zeros_like(net);
    Gradients grads;
    Rng shuffle_rng(derive_seed(config.seed, kShuffleStream));
    Rng dropout_rng(derive_seed(config.seed, kDropoutStream));

    TrainResult result;
    result.history.best_auroc = -1.0;
    std::vector<double> aurocs;
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.minibatch_size) {
            const std::size_t end = std::min(start + config.minibatch_size, order.size());
            std::vector<FeatureVector> batch_rows;
            std::vector<int> batch_targets;
            std::vector<DropoutMask> batch_masks;
            batch_rows.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) {
                batch_rows.push_back(train_set.rows[order[i]]);
                batch_targets.push_back(targets[order[i]]);
                batch_masks.push_back(sample_dropout_mask(config, dropout_rng));
            }
            epoch_loss += loss_and_gradients(net, batch_rows, batch_targets, batch_masks, grads);
            ++batches;
            adadelta_step(net, state, grads, config.rho, config.epsilon);
            clip_max_w2(net, config.max_w2);
        }

        const double auroc = score(net, valid_set);
        aurocs.push_back(auroc);
        result.history.rounds.push_back(
            {epoch, auroc, epoch_loss / static_cast<double>(std::max<std::size_t>(batches, 1))});
        if (auroc > result.history.best_auroc) {
            result.history.best_auroc = auroc;
            result.history.best_epoch = epoch;
            result.net = net;
        }
        if (should_stop_early(aurocs, config.stopping_rounds, config.stopping_tolerance)) {
            result.history.stopped_early = true;
            break;
        }
    }

    // The best-round snapshot is what callers get; re-score it so the history
    // carries the returned model's validation metric.
    result.history.final_validation_auroc = score(result.net, valid_set);
    return result;
}

std::vector<double> predict(const Network& net, const LabeledDataset& data) {
    std::vector<double> scores;
    scores.reserve(data.size());
    for (const auto& row : data.rows) {
        scores.push_back(forward(net, row));
    }
    return scores;
}

} // namespace procqx
