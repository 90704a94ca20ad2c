#include "s2p/nn.hpp"

#include <cmath>
#include <numeric>

namespace s2p::nn {

namespace {

Mat apply_activation(const Mat& z, Activation act) {
    switch (act) {
        case Activation::kElu:
            return z.unaryExpr([](double x) { return x > 0.0 ? x : std::expm1(x); });
        case Activation::kIdentity:
        case Activation::kLogits:
            return z;
    }
    return z;
}

Mat activation_derivative(const Mat& z, Activation act) {
    switch (act) {
        case Activation::kElu:
            return z.unaryExpr([](double x) { return x > 0.0 ? 1.0 : std::exp(x); });
        case Activation::kIdentity:
        case Activation::kLogits:
            return Mat::Ones(z.rows(), z.cols());
    }
    return Mat::Ones(z.rows(), z.cols());
}

}  // namespace

std::size_t DenseNetwork::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.biases.size();
    return n;
}

void Gradients::setZero(const DenseNetwork& net) {
    weights.clear();
    biases.clear();
    for (const auto& l : net.layers) {
        weights.push_back(Mat::Zero(l.weights.rows(), l.weights.cols()));
        biases.push_back(Vec::Zero(l.biases.size()));
    }
}

AdamState AdamState::init(const DenseNetwork& net, double lr) {
    AdamState s;
    s.lr = lr;
    for (const auto& l : net.layers) {
        s.m_weights.push_back(Mat::Zero(l.weights.rows(), l.weights.cols()));
        s.v_weights.push_back(Mat::Zero(l.weights.rows(), l.weights.cols()));
        s.m_biases.push_back(Vec::Zero(l.biases.size()));
        s.v_biases.push_back(Vec::Zero(l.biases.size()));
    }
    return s;
}

DenseNetwork init_network(const std::vector<int>& layer_dims,
                          const std::vector<Activation>& activations, std::uint64_t seed) {
    if (layer_dims.size() < 2 || activations.size() != layer_dims.size() - 1) {
        throw Error("BadDimensions", "need >= 1 layer and one activation per layer");
    }
    for (int d : layer_dims) {
        if (d <= 0) throw Error("BadDimensions", "layer widths must be positive");
    }
    Rng rng(seed);
    DenseNetwork net;
    for (std::size_t i = 0; i + 1 < layer_dims.size(); ++i) {
        const int in = layer_dims[i];
        const int out = layer_dims[i + 1];
        const double bound = std::sqrt(6.0 / (in + out));
        Layer layer;
        layer.weights.resize(out, in);
        for (int r = 0; r < out; ++r) {
            for (int c = 0; c < in; ++c) layer.weights(r, c) = rng.uniform(-bound, bound);
        }
        layer.biases = Vec::Zero(out);
        layer.activation = activations[i];
        net.layers.push_back(std::move(layer));
    }
    return net;
}

ForwardCache forward(const DenseNetwork& net, const Mat& inputs) {
    if (net.layers.empty()) throw Error("BadDimensions", "empty network");
    if (inputs.rows() != net.input_dim()) {
        throw Error("DimensionMismatch", "input rows " + std::to_string(inputs.rows()) +
                                             " != network input " + std::to_string(net.input_dim()));
    }
    ForwardCache cache;
    cache.post.push_back(inputs);
    for (const auto& layer : net.layers) {
        Mat z = (layer.weights * cache.post.back()).colwise() + layer.biases;
        cache.post.push_back(apply_activation(z, layer.activation));
        cache.pre.push_back(std::move(z));
    }
    return cache;
}

Vec forward_vec(const DenseNetwork& net, const Vec& input) {
    return forward(net, input).post.back().col(0);
}

std::pair<double, Mat> mse_loss(const Mat& pred, const Mat& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
        throw Error("DimensionMismatch", "mse shapes differ");
    }
    const double n = static_cast<double>(pred.rows());
    const double batch = static_cast<double>(pred.cols());
    const Mat diff = pred - target;
    const double loss = diff.squaredNorm() / (n * batch);
    return {loss, 2.0 * diff / (n * batch)};
}

Mat softmax(const Mat& logits) {
    Mat out(logits.rows(), logits.cols());
    for (int c = 0; c < logits.cols(); ++c) {
        const Vec shifted = logits.col(c).array() - logits.col(c).maxCoeff();
        const Vec e = shifted.array().exp();
        out.col(c) = e / e.sum();
    }
    return out;
}

std::pair<double, Mat> softmax_cross_entropy(const Mat& logits, const std::vector<int>& classes) {
    if (static_cast<int>(classes.size()) != logits.cols()) {
        throw Error("DimensionMismatch", "one class index per column required");
    }
    const double batch = static_cast<double>(logits.cols());
    Mat probs = softmax(logits);
    double loss = 0.0;
    Mat grad = probs / batch;
    for (int c = 0; c < logits.cols(); ++c) {
        const int k = classes[static_cast<std::size_t>(c)];
        if (k < 0 || k >= logits.rows()) throw Error("IndexOutOfRange", "class index out of range");
        loss -= std::log(std::max(probs(k, c), 1e-300));
        grad(k, c) -= 1.0 / batch;
    }
    return {loss / batch, grad};
}

Gradients backward(const DenseNetwork& net, const ForwardCache& cache, const Mat& grad_output) {
    if (cache.pre.size() != net.layers.size() || cache.post.size() != net.layers.size() + 1) {
        throw Error("CacheMismatch", "cache does not match network depth");
    }
    if (grad_output.rows() != net.output_dim() || grad_output.cols() != cache.post.back().cols()) {
        throw Error("CacheMismatch", "upstream gradient shape mismatch");
    }
    Gradients grads;
    grads.weights.resize(net.layers.size());
    grads.biases.resize(net.layers.size());

    Mat upstream = grad_output;
    for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
        const Mat dz =
            upstream.cwiseProduct(activation_derivative(cache.pre[i], net.layers[i].activation));
        grads.weights[i] = dz * cache.post[i].transpose();
        grads.biases[i] = dz.rowwise().sum();
        if (i > 0) upstream = net.layers[i].weights.transpose() * dz;
    }
    return grads;
}

void adam_step(DenseNetwork& net, const Gradients& grads, AdamState& state) {
    if (grads.weights.size() != net.layers.size() || state.m_weights.size() != net.layers.size()) {
        throw Error("ShapeMismatch", "gradient/state layer count mismatch");
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        auto& layer = net.layers[i];
        if (grads.weights[i].rows() != layer.weights.rows() ||
            grads.weights[i].cols() != layer.weights.cols()) {
            throw Error("ShapeMismatch", "gradient shape mismatch at layer " + std::to_string(i));
        }
        state.m_weights[i] = state.beta1 * state.m_weights[i] + (1.0 - state.beta1) * grads.weights[i];
        state.v_weights[i] =
            state.beta2 * state.v_weights[i] + (1.0 - state.beta2) * grads.weights[i].cwiseProduct(grads.weights[i]);
        layer.weights.array() -= state.lr * (state.m_weights[i].array() / bc1) /
                                 ((state.v_weights[i].array() / bc2).sqrt() + state.epsilon);

        state.m_biases[i] = state.beta1 * state.m_biases[i] + (1.0 - state.beta1) * grads.biases[i];
        state.v_biases[i] =
            state.beta2 * state.v_biases[i] + (1.0 - state.beta2) * grads.biases[i].cwiseProduct(grads.biases[i]);
        layer.biases.array() -= state.lr * (state.m_biases[i].array() / bc1) /
                                ((state.v_biases[i].array() / bc2).sqrt() + state.epsilon);
    }
}

std::vector<double> train(DenseNetwork& net, const std::vector<TrainSample>& samples,
                          LossKind loss, const TrainConfig& cfg) {
    if (samples.empty()) throw Error("EmptyDataset", "no training samples");
    if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.lr <= 0.0) {
        throw Error("BadConfig", "epochs >= 1, batch_size >= 1, lr > 0 required");
    }
    for (const auto& s : samples) {
        if (s.input.size() != net.input_dim()) {
            throw Error("DimensionMismatch", "sample input width does not match network");
        }
    }

    AdamState state = AdamState::init(net, cfg.lr);
    Rng rng(cfg.seed);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<double> history;
    history.reserve(static_cast<std::size_t>(cfg.epochs));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.shuffle_each_epoch) rng.shuffle(order);

        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t count = std::min(order.size() - start,
                                               static_cast<std::size_t>(cfg.batch_size));
            Mat inputs(net.input_dim(), count);
            Mat targets;
            std::vector<int> classes;
            if (loss == LossKind::kMse) {
                targets.resize(net.output_dim(), count);
            } else {
                classes.resize(count);
            }
            for (std::size_t j = 0; j < count; ++j) {
                const auto& s = samples[order[start + j]];
                inputs.col(static_cast<int>(j)) = s.input;
                if (loss == LossKind::kMse) {
                    if (s.target.size() != net.output_dim()) {
                        throw Error("DimensionMismatch", "target width does not match network");
                    }
                    targets.col(static_cast<int>(j)) = s.target;
                } else {
                    classes[j] = s.target_class;
                }
            }

            ForwardCache cache = forward(net, inputs);
            auto [batch_loss, grad_out] =
                loss == LossKind::kMse ? mse_loss(cache.post.back(), targets)
                                       : softmax_cross_entropy(cache.post.back(), classes);
            if (!std::isfinite(batch_loss)) {
                throw Error("DivergedLoss", "loss became non-finite at epoch " +
                                                std::to_string(epoch));
            }
            Gradients grads = backward(net, cache, grad_out);
            adam_step(net, grads, state);

            epoch_loss += batch_loss * static_cast<double>(count);
            seen += count;
        }
        history.push_back(epoch_loss / static_cast<double>(seen));
    }
    return history;
}

}  // namespace s2p::nn
