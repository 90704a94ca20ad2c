#pragma once

#include "s2p/common.hpp"

#include <optional>
#include <vector>

namespace s2p::nn {

enum class Activation {
    kElu,       // exponential-linear, alpha = 1
    kIdentity,  // regression output
    kLogits,    // linear output, softmax folded into the loss
};

struct Layer {
    Mat weights;  // out x in
    Vec biases;   // out
    Activation activation = Activation::kIdentity;
};

struct DenseNetwork {
    std::vector<Layer> layers;
    std::optional<int> embedding_layer_index;

    int input_dim() const { return static_cast<int>(layers.front().weights.cols()); }
    int output_dim() const { return static_cast<int>(layers.back().weights.rows()); }
    std::size_t parameter_count() const;
};

/// Per-layer activations from a forward pass over a batch (columns =
/// samples). post[i] feeds layer i; post.back() is the network output.
struct ForwardCache {
    std::vector<Mat> pre;   // pre-activation per layer
    std::vector<Mat> post;  // post[0] = input, post[i+1] = activation of layer i
};

/// Gradients with the same shapes as the network's parameters.
struct Gradients {
    std::vector<Mat> weights;
    std::vector<Vec> biases;

    void setZero(const DenseNetwork& net);
};

struct AdamState {
    std::vector<Mat> m_weights, v_weights;
    std::vector<Vec> m_biases, v_biases;
    long t = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState init(const DenseNetwork& net, double lr);
};

struct TrainConfig {
    int epochs = 1;
    double lr = 1e-3;
    int batch_size = 1;
    std::uint64_t seed = 0;
    bool shuffle_each_epoch = true;
};

enum class LossKind { kMse, kSoftmaxCrossEntropy };

/// One training example: classification stores the class index in
/// target_class, regression stores the target vector.
struct TrainSample {
    Vec input;
    Vec target;            // regression
    int target_class = -1; // classification
};

DenseNetwork init_network(const std::vector<int>& layer_dims,
                          const std::vector<Activation>& activations, std::uint64_t seed);

ForwardCache forward(const DenseNetwork& net, const Mat& inputs);

/// Convenience single-vector forward; returns the output column.
Vec forward_vec(const DenseNetwork& net, const Vec& input);

/// Mean-squared error over all entries, averaged over batch columns.
/// Returns the loss and the gradient with respect to the predictions.
std::pair<double, Mat> mse_loss(const Mat& pred, const Mat& target);

/// Stabilized softmax cross-entropy over batch columns.
std::pair<double, Mat> softmax_cross_entropy(const Mat& logits, const std::vector<int>& classes);

/// Column-wise softmax of logits.
Mat softmax(const Mat& logits);

/// Backpropagate grad_output (d loss / d network output, per column) through
/// the cache. Gradients are summed over the batch; callers that averaged the
/// loss over columns get averaged gradients automatically.
Gradients backward(const DenseNetwork& net, const ForwardCache& cache, const Mat& grad_output);

void adam_step(DenseNetwork& net, const Gradients& grads, AdamState& state);

/// Mini-batch Adam training. Returns the per-epoch mean loss history.
/// Deterministic given (seed, config, initial network).
std::vector<double> train(DenseNetwork& net, const std::vector<TrainSample>& samples,
                          LossKind loss, const TrainConfig& cfg);

}  // namespace s2p::nn
