#include "s2p/identify.hpp"

#include "s2p/binio.hpp"

#include <cmath>
#include <cstring>
#include <limits>

namespace s2p::identify {

namespace {

constexpr char kMagic[4] = {'S', '2', 'D', 'B'};
constexpr std::uint32_t kDbFormatVersion = 1;

void check_embedding(const EmbeddingDb& db, const Vec& v) {
    if (v.size() != db.dim) {
        throw Error("DimensionMismatch", "embedding length " + std::to_string(v.size()) +
                                             " != db dim " + std::to_string(db.dim));
    }
}

}  // namespace

std::size_t EmbeddingDb::total_embeddings() const {
    std::size_t n = 0;
    for (const auto& [id, vecs] : entries) n += vecs.size();
    return n;
}

void enroll(EmbeddingDb& db, const std::string& speaker_id, const std::vector<Vec>& embeddings) {
    if (speaker_id.empty()) throw Error("BadSpeakerId", "speaker id must be non-empty");
    if (embeddings.empty()) throw Error("EmptyEnrollment", "no embeddings for " + speaker_id);
    for (const auto& e : embeddings) check_embedding(db, e);
    auto& list = db.entries[speaker_id];
    list.insert(list.end(), embeddings.begin(), embeddings.end());
}

void enroll_centroid(EmbeddingDb& db, const std::string& speaker_id,
                     const std::vector<Vec>& embeddings) {
    if (embeddings.empty()) throw Error("EmptyEnrollment", "no embeddings for " + speaker_id);
    Vec centroid = Vec::Zero(embeddings.front().size());
    for (const auto& e : embeddings) centroid += e;
    centroid /= static_cast<double>(embeddings.size());
    enroll(db, speaker_id, {centroid});
}

Match identify_knn(const EmbeddingDb& db, const Vec& query) {
    if (db.empty()) throw Error("EmptyDatabase", "no enrolled speakers");
    check_embedding(db, query);

    Match best;
    double best_dist = std::numeric_limits<double>::infinity();
    // std::map iterates speakers in lexicographic order and the stored lists
    // preserve insertion order, so keeping the first strict minimum realizes
    // the (distance, speaker id, insertion order) tie-break.
    for (const auto& [id, vecs] : db.entries) {
        for (const auto& e : vecs) {
            const double dist = (query - e).norm();
            if (dist < best_dist) {
                best_dist = dist;
                best.speaker_id = id;
            }
        }
    }
    best.score = best_dist;
    return best;
}

Match identify_pair(const EmbeddingDb& db, const models::ModelBundle& comparator, const Vec& query) {
    if (db.empty()) throw Error("EmptyDatabase", "no enrolled speakers");
    check_embedding(db, query);

    Match best;
    double best_prob = -1.0;
    for (const auto& [id, vecs] : db.entries) {
        for (const auto& e : vecs) {
            const double p = models::pair_same_probability(comparator, query, e);
            if (p > best_prob) {
                best_prob = p;
                best.speaker_id = id;
            }
        }
    }
    best.score = best_prob;
    return best;
}

void save_db(const EmbeddingDb& db, const std::string& path) {
    binio::Writer w;
    w.raw(kMagic, 4);
    w.u32(kDbFormatVersion);
    w.u32(static_cast<std::uint32_t>(db.dim));
    w.u32(db.created_with);
    w.u32(static_cast<std::uint32_t>(db.entries.size()));
    for (const auto& [id, vecs] : db.entries) {
        w.str(id);
        w.u32(static_cast<std::uint32_t>(vecs.size()));
        for (const auto& e : vecs) {
            for (int i = 0; i < e.size(); ++i) w.f32(static_cast<float>(e(i)));
        }
    }
    std::vector<std::uint8_t> payload = w.bytes();
    const std::uint32_t crc = crc32(payload.data(), payload.size());
    binio::Writer tail;
    tail.u32(crc);
    payload.insert(payload.end(), tail.bytes().begin(), tail.bytes().end());
    binio::write_file(path, payload);
}

EmbeddingDb load_db(const std::string& path) {
    std::vector<std::uint8_t> bytes = binio::read_file(path);
    if (bytes.size() < 24) throw Error("MalformedFile", "file too short: " + path);
    const std::size_t payload_len = bytes.size() - 4;
    std::uint32_t stored_crc = 0;
    for (int i = 0; i < 4; ++i) stored_crc |= static_cast<std::uint32_t>(bytes[payload_len + i]) << (8 * i);
    if (crc32(bytes.data(), payload_len) != stored_crc) {
        throw Error("MalformedFile", "CRC check failed: " + path);
    }
    bytes.resize(payload_len);

    binio::Reader r(std::move(bytes));
    char magic[4];
    for (char& c : magic) c = static_cast<char>(r.u8());
    if (std::memcmp(magic, kMagic, 4) != 0) throw Error("MalformedFile", "bad magic: " + path);
    if (r.u32() != kDbFormatVersion) throw Error("VersionMismatch", "unknown db format version");

    EmbeddingDb db;
    db.dim = static_cast<int>(r.u32());
    db.created_with = r.u32();
    const std::uint32_t n_speakers = r.u32();
    for (std::uint32_t s = 0; s < n_speakers; ++s) {
        const std::string id = r.str();
        const std::uint32_t n_vecs = r.u32();
        auto& list = db.entries[id];
        list.reserve(n_vecs);
        for (std::uint32_t v = 0; v < n_vecs; ++v) {
            Vec e(db.dim);
            for (int i = 0; i < db.dim; ++i) e(i) = r.f32();
            list.push_back(std::move(e));
        }
    }
    if (r.pos() != r.size()) throw Error("MalformedFile", "trailing bytes: " + path);
    return db;
}

EmbeddingDb load_db(const std::string& path, std::uint32_t expected_checksum, bool* mismatch) {
    EmbeddingDb db = load_db(path);
    if (mismatch) *mismatch = db.created_with != expected_checksum;
    return db;
}

}  // namespace s2p::identify
