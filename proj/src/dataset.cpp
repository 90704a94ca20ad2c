#include "s2p/dataset.hpp"

#include "s2p/audio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace s2p::dataset {

std::vector<ManifestEntry> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("ParseError", "cannot open manifest " + path);

    std::vector<ManifestEntry> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;

        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t')) fields.push_back(field);
        if (fields.size() < 3 || fields.size() > 4) {
            throw Error("ParseError", "line " + std::to_string(line_no) +
                                          ": expected 3 or 4 tab-separated fields");
        }
        ManifestEntry e;
        e.path = fields[0];
        e.speaker_id = fields[1];
        if (fields[2] == "reading") {
            e.kind = EntryKind::kReading;
        } else if (fields[2] == "anchor") {
            e.kind = EntryKind::kAnchor;
        } else {
            throw Error("ParseError",
                        "line " + std::to_string(line_no) + ": unknown kind '" + fields[2] + "'");
        }
        if (fields.size() == 4) e.language = fields[3];
        if (e.path.empty() || e.speaker_id.empty()) {
            throw Error("ParseError", "line " + std::to_string(line_no) + ": empty path or speaker");
        }
        entries.push_back(std::move(e));
    }

    std::map<std::string, int> anchors;
    std::set<std::string> readers;
    for (const auto& e : entries) {
        if (e.kind == EntryKind::kAnchor) {
            anchors[e.speaker_id] += 1;
        } else {
            readers.insert(e.speaker_id);
        }
    }
    for (const auto& speaker : readers) {
        const auto it = anchors.find(speaker);
        if (it == anchors.end()) {
            throw Error("MissingAnchor", "speaker " + speaker + " has no anchor entry");
        }
        if (it->second > 1) {
            throw Error("DuplicateAnchor", "speaker " + speaker + " has multiple anchor entries");
        }
    }
    return entries;
}

std::vector<features::Instance> materialize(const std::vector<ManifestEntry>& entries,
                                            const features::MfccConfig& cfg,
                                            const std::function<void(const std::string&)>& warn) {
    std::map<std::string, Vec> targets;
    for (const auto& e : entries) {
        if (e.kind != EntryKind::kAnchor) continue;
        try {
            targets[e.speaker_id] = features::extract_anchor_target(audio::load_canonical(e.path), cfg);
        } catch (const Error& err) {
            throw Error(err.code(), std::string(err.what()) + " (while processing " + e.path + ")");
        }
    }

    std::vector<features::Instance> all;
    for (const auto& e : entries) {
        if (e.kind != EntryKind::kReading) continue;
        std::vector<features::Instance> instances;
        try {
            instances = features::extract_instances(audio::load_canonical(e.path), cfg);
        } catch (const Error& err) {
            throw Error(err.code(), std::string(err.what()) + " (while processing " + e.path + ")");
        }
        if (instances.empty() && warn) {
            warn("reading shorter than 5 s, no instances: " + e.path);
        }
        const auto target_it = targets.find(e.speaker_id);
        for (auto& inst : instances) {
            inst.speaker_id = e.speaker_id;
            if (target_it != targets.end()) inst.target = target_it->second;
            all.push_back(std::move(inst));
        }
    }
    return all;
}

std::map<std::string, std::vector<features::Instance>> split(
    const std::vector<features::Instance>& instances, const SplitSpec& spec) {
    if (spec.groups < 1 || spec.holdout_per_speaker < 1) {
        throw Error("BadConfig", "groups >= 1 and holdout_per_speaker >= 1 required");
    }

    std::map<std::string, std::vector<features::Instance>> by_speaker;
    for (const auto& inst : instances) by_speaker[inst.speaker_id].push_back(inst);

    std::vector<std::string> speakers;
    for (const auto& [id, list] : by_speaker) {
        if (static_cast<int>(list.size()) < spec.holdout_per_speaker + 1) {
            throw Error("InsufficientInstances",
                        "speaker " + id + " has only " + std::to_string(list.size()) + " instances");
        }
        speakers.push_back(id);
    }

    Rng rng(spec.seed);
    rng.shuffle(speakers);

    auto group_name = [&](int g) -> std::string {
        if (spec.groups <= 26) return std::string(1, static_cast<char>('A' + g));
        return "G" + std::to_string(g);
    };

    std::map<std::string, std::vector<features::Instance>> partitions;
    for (int g = 0; g < spec.groups; ++g) {
        partitions[group_name(g) + "_1"];
        partitions[group_name(g) + "_2"];
    }
    for (std::size_t i = 0; i < speakers.size(); ++i) {
        const std::string& speaker = speakers[i];
        const std::string group = group_name(static_cast<int>(i) % spec.groups);

        auto list = by_speaker[speaker];
        std::stable_sort(list.begin(), list.end(),
                         [](const features::Instance& a, const features::Instance& b) {
                             return a.source_offset_s < b.source_offset_s;
                         });
        const std::size_t cut = list.size() - static_cast<std::size_t>(spec.holdout_per_speaker);
        auto& train = partitions[group + "_1"];
        auto& test = partitions[group + "_2"];
        train.insert(train.end(), list.begin(), list.begin() + static_cast<long>(cut));
        test.insert(test.end(), list.begin() + static_cast<long>(cut), list.end());
    }
    return partitions;
}

std::vector<EmbeddingPair> build_pair_dataset(
    const std::vector<std::pair<std::string, Vec>>& embeddings, double negative_ratio,
    std::uint64_t seed) {
    std::set<std::string> speakers;
    for (const auto& [id, v] : embeddings) speakers.insert(id);
    if (speakers.size() < 2) throw Error("SingleSpeaker", "pair dataset needs >= 2 speakers");

    std::vector<EmbeddingPair> pairs;
    std::vector<std::pair<std::size_t, std::size_t>> negatives;
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
            if (embeddings[i].first == embeddings[j].first) {
                pairs.push_back({embeddings[i].second, embeddings[j].second, true});
            } else {
                negatives.emplace_back(i, j);
            }
        }
    }

    const auto n_positives = pairs.size();
    const auto wanted = static_cast<std::size_t>(
        std::ceil(negative_ratio * static_cast<double>(n_positives)));
    Rng rng(seed);
    rng.shuffle(negatives);
    const std::size_t take = std::min(wanted, negatives.size());
    for (std::size_t n = 0; n < take; ++n) {
        const auto [i, j] = negatives[n];
        pairs.push_back({embeddings[i].second, embeddings[j].second, false});
    }
    rng.shuffle(pairs);
    return pairs;
}

}  // namespace s2p::dataset
