#pragma once

#include "s2p/features.hpp"
#include "s2p/nn.hpp"

#include <string>
#include <vector>

namespace s2p::models {

inline constexpr int kEmbeddingDim = 80;
inline constexpr int kModelFormatVersion = 1;

enum class ModelKind : std::uint8_t {
    kSpeech2Phone = 0,
    kClosedSet = 1,
    kPairComparator = 2,
};

struct SpeakerEmbedding {
    Vec vector;  // length 80
    std::string speaker_id;
    std::string source;
};

/// A trained (or trainable) network plus the input standardization fitted on
/// its training split. The stats travel with the model so inference applies
/// exactly the normalization training saw.
struct ModelBundle {
    nn::DenseNetwork network;
    ModelKind kind = ModelKind::kSpeech2Phone;
    Vec input_mean;
    Vec input_std;
    int format_version = kModelFormatVersion;
};

/// 2808 -> 80 -> 572 regression net; the hidden layer is the embedding.
ModelBundle build_speech2phone(std::uint64_t seed, int input_dim = features::kInstanceDim,
                               int embedding_dim = kEmbeddingDim,
                               int output_dim = features::kAnchorDim);

/// 2808 -> hidden -> n_speakers classifier.
ModelBundle build_closed_set(int n_speakers, std::uint64_t seed,
                             int input_dim = features::kInstanceDim, int hidden_dim = 256);

/// 160 -> hidden -> 2 classifier over concatenated embedding pairs.
ModelBundle build_pair_comparator(std::uint64_t seed, int embedding_dim = kEmbeddingDim,
                                  int hidden_dim = 64);

/// Fit per-dimension z-score stats from training inputs (std floored at 1e-6).
void fit_input_norm(ModelBundle& bundle, const std::vector<Vec>& inputs);

Vec normalize_input(const ModelBundle& bundle, const Vec& input);

/// Embedding of one instance input: normalized input pushed through the
/// network, read out at the embedding layer's post-activation.
SpeakerEmbedding embed(const ModelBundle& bundle, const Vec& instance_input);

/// Reconstruction output (572 values) of a speech2phone bundle.
Vec reconstruct(const ModelBundle& bundle, const Vec& instance_input);

/// Class probabilities from a classifier bundle.
Vec classify_probs(const ModelBundle& bundle, const Vec& input);

/// Same-speaker probability from a pair-comparator bundle.
double pair_same_probability(const ModelBundle& bundle, const Vec& left, const Vec& right);

std::vector<std::uint8_t> serialize_model(const ModelBundle& bundle);

void save_model(const ModelBundle& bundle, const std::string& path);
ModelBundle load_model(const std::string& path);

/// CRC-32 of the serialized payload; identifies the embedder a database was
/// built with.
std::uint32_t model_checksum(const ModelBundle& bundle);

}  // namespace s2p::models
