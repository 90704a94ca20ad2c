#pragma once

#include "s2p/models.hpp"

#include <map>
#include <string>
#include <vector>

namespace s2p::identify {

/// Open-set identity store: speaker -> enrolled embeddings. Enrolling never
/// retrains anything.
struct EmbeddingDb {
    std::map<std::string, std::vector<Vec>> entries;
    int dim = models::kEmbeddingDim;
    std::uint32_t created_with = 0;  // embedder checksum

    std::size_t total_embeddings() const;
    bool empty() const { return entries.empty(); }
};

struct Match {
    std::string speaker_id;
    double score = 0.0;  // distance for knn, probability for the comparator
};

void enroll(EmbeddingDb& db, const std::string& speaker_id, const std::vector<Vec>& embeddings);

/// Average a speaker's embeddings into a single centroid before enrolling.
void enroll_centroid(EmbeddingDb& db, const std::string& speaker_id,
                     const std::vector<Vec>& embeddings);

/// Nearest stored embedding by Euclidean distance (exact linear scan).
/// Equidistant candidates break to the lexicographically smaller speaker id,
/// then insertion order.
Match identify_knn(const EmbeddingDb& db, const Vec& query);

/// Highest same-speaker probability under the pair comparator.
Match identify_pair(const EmbeddingDb& db, const models::ModelBundle& comparator, const Vec& query);

void save_db(const EmbeddingDb& db, const std::string& path);
EmbeddingDb load_db(const std::string& path);

/// Load that tolerates an embedder checksum mismatch; sets *mismatch instead
/// of throwing.
EmbeddingDb load_db(const std::string& path, std::uint32_t expected_checksum, bool* mismatch);

}  // namespace s2p::identify
