#pragma once

#include "s2p/features.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace s2p::dataset {

enum class EntryKind { kReading, kAnchor };

struct ManifestEntry {
    std::string path;
    std::string speaker_id;
    EntryKind kind = EntryKind::kReading;
    std::string language;  // optional
};

struct SplitSpec {
    int groups = 4;               // named A, B, C, D, ...
    int holdout_per_speaker = 5;  // goes to the "_2" test partition
    std::uint64_t seed = 0;
};

struct EmbeddingPair {
    Vec left;
    Vec right;
    bool same_speaker = false;
};

/// Parse a tab-separated manifest: path<TAB>speaker<TAB>kind[<TAB>language].
/// '#' lines are comments. Every speaker with a reading must have exactly one
/// anchor entry.
std::vector<ManifestEntry> load_manifest(const std::string& path);

/// Extract 5 s instances from every reading and attach the speaker's anchor
/// target to each. warn, when set, receives messages about skipped short
/// readings.
std::vector<features::Instance> materialize(const std::vector<ManifestEntry>& entries,
                                            const features::MfccConfig& cfg,
                                            const std::function<void(const std::string&)>& warn = {});

/// Deal speakers round-robin into groups (A, B, ...); within each speaker the
/// last holdout instances by source offset form the "_2" partition, the rest
/// "_1". Partition names are "A_1", "A_2", ...
std::map<std::string, std::vector<features::Instance>> split(
    const std::vector<features::Instance>& instances, const SplitSpec& spec);

/// All unordered same-speaker pairs plus ceil(ratio x positives) sampled
/// negatives, shuffled deterministically.
std::vector<EmbeddingPair> build_pair_dataset(
    const std::vector<std::pair<std::string, Vec>>& embeddings, double negative_ratio,
    std::uint64_t seed);

}  // namespace s2p::dataset
