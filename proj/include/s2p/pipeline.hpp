#pragma once

#include "s2p/dataset.hpp"
#include "s2p/gmm.hpp"
#include "s2p/models.hpp"

#include <string>
#include <vector>

namespace s2p::pipeline {

/// Training regimens from the published hyperparameter tables.
nn::TrainConfig default_speech2phone_config();   // 1000 epochs, lr 7e-4, batch 128
nn::TrainConfig default_closed_set_config();     // 3000 epochs, lr 5e-5, batch 64
nn::TrainConfig default_pair_config();           // 1000 epochs, lr 1e-4, batch 16

struct TrainedModel {
    models::ModelBundle bundle;
    std::vector<double> loss_history;
    std::vector<std::string> label_order;  // closed-set only: output index -> speaker
};

/// Fit normalization on the instance inputs and train the embedding model
/// against the 572-value anchor targets (MSE).
TrainedModel train_speech2phone(const std::vector<features::Instance>& instances,
                                const nn::TrainConfig& cfg, std::uint64_t init_seed,
                                int embedding_dim = models::kEmbeddingDim);

/// Train the closed-set classifier; label order is the sorted distinct
/// speaker set.
TrainedModel train_closed_set(const std::vector<features::Instance>& instances,
                              const nn::TrainConfig& cfg, std::uint64_t init_seed,
                              int hidden_dim = 256);

/// Train the same/different comparator on concatenated embedding pairs.
TrainedModel train_pair_comparator(const std::vector<dataset::EmbeddingPair>& pairs,
                                   const nn::TrainConfig& cfg, std::uint64_t init_seed,
                                   int hidden_dim = 64);

/// One diagonal GMM per speaker over raw instance inputs.
std::vector<gmm::GmmModel> train_gmm_models(const std::vector<features::Instance>& instances,
                                            const gmm::FitOptions& opts);

}  // namespace s2p::pipeline
