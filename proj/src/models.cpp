#include "s2p/models.hpp"

#include "s2p/binio.hpp"

#include <cmath>

namespace s2p::models {

namespace {

constexpr char kMagic[4] = {'S', '2', 'P', 'H'};
constexpr double kStdFloor = 1e-6;

void check_kind(const ModelBundle& bundle, ModelKind expected) {
    if (bundle.kind != expected) throw Error("WrongKind", "model kind does not match operation");
}

}  // namespace

ModelBundle build_speech2phone(std::uint64_t seed, int input_dim, int embedding_dim,
                               int output_dim) {
    ModelBundle b;
    b.kind = ModelKind::kSpeech2Phone;
    b.network = nn::init_network({input_dim, embedding_dim, output_dim},
                                 {nn::Activation::kElu, nn::Activation::kIdentity}, seed);
    b.network.embedding_layer_index = 0;
    return b;
}

ModelBundle build_closed_set(int n_speakers, std::uint64_t seed, int input_dim, int hidden_dim) {
    if (n_speakers < 2) throw Error("BadSpeakerCount", "closed-set model needs >= 2 speakers");
    ModelBundle b;
    b.kind = ModelKind::kClosedSet;
    b.network = nn::init_network({input_dim, hidden_dim, n_speakers},
                                 {nn::Activation::kElu, nn::Activation::kLogits}, seed);
    return b;
}

ModelBundle build_pair_comparator(std::uint64_t seed, int embedding_dim, int hidden_dim) {
    ModelBundle b;
    b.kind = ModelKind::kPairComparator;
    b.network = nn::init_network({2 * embedding_dim, hidden_dim, 2},
                                 {nn::Activation::kElu, nn::Activation::kLogits}, seed);
    return b;
}

void fit_input_norm(ModelBundle& bundle, const std::vector<Vec>& inputs) {
    if (inputs.empty()) throw Error("EmptyDataset", "no inputs to fit normalization");
    const auto dim = inputs.front().size();
    Vec mean = Vec::Zero(dim);
    for (const auto& x : inputs) {
        if (x.size() != dim) throw Error("DimensionMismatch", "inconsistent input widths");
        mean += x;
    }
    mean /= static_cast<double>(inputs.size());

    Vec var = Vec::Zero(dim);
    for (const auto& x : inputs) var.array() += (x - mean).array().square();
    var /= static_cast<double>(inputs.size());

    bundle.input_mean = mean;
    bundle.input_std = var.array().sqrt().max(kStdFloor);
}

Vec normalize_input(const ModelBundle& bundle, const Vec& input) {
    if (bundle.input_mean.size() == 0) return input;
    if (input.size() != bundle.input_mean.size()) {
        throw Error("DimensionMismatch", "input width does not match normalization stats");
    }
    return (input - bundle.input_mean).cwiseQuotient(bundle.input_std);
}

SpeakerEmbedding embed(const ModelBundle& bundle, const Vec& instance_input) {
    check_kind(bundle, ModelKind::kSpeech2Phone);
    if (!bundle.network.embedding_layer_index) {
        throw Error("WrongKind", "model has no embedding layer");
    }
    const nn::ForwardCache cache = nn::forward(bundle.network, normalize_input(bundle, instance_input));
    SpeakerEmbedding e;
    e.vector = cache.post[static_cast<std::size_t>(*bundle.network.embedding_layer_index) + 1].col(0);
    return e;
}

Vec reconstruct(const ModelBundle& bundle, const Vec& instance_input) {
    check_kind(bundle, ModelKind::kSpeech2Phone);
    return nn::forward_vec(bundle.network, normalize_input(bundle, instance_input));
}

Vec classify_probs(const ModelBundle& bundle, const Vec& input) {
    if (bundle.kind == ModelKind::kSpeech2Phone) {
        throw Error("WrongKind", "not a classifier model");
    }
    return nn::softmax(nn::forward(bundle.network, normalize_input(bundle, input)).post.back()).col(0);
}

double pair_same_probability(const ModelBundle& bundle, const Vec& left, const Vec& right) {
    check_kind(bundle, ModelKind::kPairComparator);
    Vec joint(left.size() + right.size());
    joint << left, right;
    return classify_probs(bundle, joint)(0);  // class 0 = same speaker
}

std::vector<std::uint8_t> serialize_model(const ModelBundle& bundle) {
    binio::Writer w;
    w.raw(kMagic, 4);
    w.u32(static_cast<std::uint32_t>(bundle.format_version));
    w.u8(static_cast<std::uint8_t>(bundle.kind));
    w.u32(bundle.network.embedding_layer_index
              ? static_cast<std::uint32_t>(*bundle.network.embedding_layer_index) + 1
              : 0);
    w.u32(static_cast<std::uint32_t>(bundle.network.layers.size()));
    for (const auto& layer : bundle.network.layers) {
        w.u32(static_cast<std::uint32_t>(layer.weights.rows()));
        w.u32(static_cast<std::uint32_t>(layer.weights.cols()));
        w.u8(static_cast<std::uint8_t>(layer.activation));
        for (int r = 0; r < layer.weights.rows(); ++r) {
            for (int c = 0; c < layer.weights.cols(); ++c) {
                w.f32(static_cast<float>(layer.weights(r, c)));
            }
        }
        for (int r = 0; r < layer.biases.size(); ++r) w.f32(static_cast<float>(layer.biases(r)));
    }
    w.u32(static_cast<std::uint32_t>(bundle.input_mean.size()));
    for (int i = 0; i < bundle.input_mean.size(); ++i) w.f32(static_cast<float>(bundle.input_mean(i)));
    for (int i = 0; i < bundle.input_std.size(); ++i) w.f32(static_cast<float>(bundle.input_std(i)));
    return w.bytes();
}

void save_model(const ModelBundle& bundle, const std::string& path) {
    std::vector<std::uint8_t> payload = serialize_model(bundle);
    const std::uint32_t crc = crc32(payload.data(), payload.size());
    binio::Writer tail;
    tail.u32(crc);
    payload.insert(payload.end(), tail.bytes().begin(), tail.bytes().end());
    binio::write_file(path, payload);
}

ModelBundle load_model(const std::string& path) {
    std::vector<std::uint8_t> bytes = binio::read_file(path);
    if (bytes.size() < 13) throw Error("MalformedFile", "file too short: " + path);

    const std::size_t payload_len = bytes.size() - 4;
    std::uint32_t stored_crc = 0;
    for (int i = 0; i < 4; ++i) stored_crc |= static_cast<std::uint32_t>(bytes[payload_len + i]) << (8 * i);
    if (crc32(bytes.data(), payload_len) != stored_crc) {
        throw Error("ChecksumMismatch", "CRC check failed: " + path);
    }
    bytes.resize(payload_len);

    binio::Reader r(std::move(bytes));
    char magic[4];
    for (char& c : magic) c = static_cast<char>(r.u8());
    if (std::memcmp(magic, kMagic, 4) != 0) throw Error("MalformedFile", "bad magic: " + path);
    const auto version = static_cast<int>(r.u32());
    if (version != kModelFormatVersion) {
        throw Error("VersionMismatch", "format version " + std::to_string(version));
    }

    ModelBundle b;
    b.format_version = version;
    b.kind = static_cast<ModelKind>(r.u8());
    const std::uint32_t embed_plus_one = r.u32();
    if (embed_plus_one > 0) b.network.embedding_layer_index = static_cast<int>(embed_plus_one) - 1;

    const std::uint32_t n_layers = r.u32();
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        nn::Layer layer;
        const std::uint32_t out = r.u32();
        const std::uint32_t in = r.u32();
        layer.activation = static_cast<nn::Activation>(r.u8());
        layer.weights.resize(out, in);
        for (std::uint32_t rr = 0; rr < out; ++rr) {
            for (std::uint32_t cc = 0; cc < in; ++cc) layer.weights(rr, cc) = r.f32();
        }
        layer.biases.resize(out);
        for (std::uint32_t rr = 0; rr < out; ++rr) layer.biases(rr) = r.f32();
        b.network.layers.push_back(std::move(layer));
    }

    const std::uint32_t norm_dim = r.u32();
    b.input_mean.resize(norm_dim);
    b.input_std.resize(norm_dim);
    for (std::uint32_t i = 0; i < norm_dim; ++i) b.input_mean(i) = r.f32();
    for (std::uint32_t i = 0; i < norm_dim; ++i) b.input_std(i) = r.f32();
    if (r.pos() != r.size()) throw Error("MalformedFile", "trailing bytes: " + path);
    return b;
}

std::uint32_t model_checksum(const ModelBundle& bundle) {
    const auto payload = serialize_model(bundle);
    return crc32(payload.data(), payload.size());
}

}  // namespace s2p::models
