#include "s2p/gmm.hpp"

#include "s2p/binio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace s2p::gmm {

namespace {

constexpr double kVarianceFloor = 1e-6;
constexpr char kMagic[4] = {'S', '2', 'P', 'H'};
constexpr std::uint8_t kGmmKindTag = 3;
constexpr std::uint32_t kFormatVersion = 1;

/// Log density of one diagonal Gaussian component.
double log_gaussian(const Vec& x, const Eigen::Ref<const Eigen::RowVectorXd>& mean,
                    const Eigen::Ref<const Eigen::RowVectorXd>& var) {
    const auto d = static_cast<double>(x.size());
    const Eigen::RowVectorXd diff = x.transpose() - mean;
    const double quad = (diff.array().square() / var.array()).sum();
    const double logdet = var.array().log().sum();
    return -0.5 * (d * std::log(2.0 * std::numbers::pi) + logdet + quad);
}

double log_sum_exp(const Vec& v) {
    const double m = v.maxCoeff();
    return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

FitResult gmm_fit(const std::vector<Vec>& vectors, const FitOptions& opts) {
    const auto n = vectors.size();
    const int k = opts.components;
    if (k < 1) throw Error("BadConfig", "need at least one component");
    if (static_cast<int>(n) < k) {
        throw Error("TooFewPoints", std::to_string(n) + " points for k = " + std::to_string(k));
    }
    const auto d = vectors.front().size();
    for (const auto& v : vectors) {
        if (v.size() != d) throw Error("DimensionMismatch", "inconsistent vector widths");
    }

    bool all_identical = true;
    for (const auto& v : vectors) {
        if (v != vectors.front()) {
            all_identical = false;
            break;
        }
    }
    if (all_identical && k > 1) {
        throw Error("DegenerateData", "all points identical with k > 1");
    }

    // k-means++ style seeding.
    Rng rng(opts.seed);
    std::vector<std::size_t> centers;
    centers.push_back(rng.index(n));
    std::vector<double> nearest_sq(n);
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t c : centers) {
                best = std::min(best, (vectors[i] - vectors[c]).squaredNorm());
            }
            nearest_sq[i] = best;
            total += best;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            for (; pick + 1 < n; ++pick) {
                target -= nearest_sq[pick];
                if (target <= 0.0) break;
            }
        } else {
            pick = rng.index(n);
        }
        centers.push_back(pick);
    }

    GmmModel model;
    model.weights = Vec::Constant(k, 1.0 / k);
    model.means.resize(k, d);
    for (int j = 0; j < k; ++j) model.means.row(j) = vectors[centers[static_cast<std::size_t>(j)]];

    // Global variance as the starting spread.
    Eigen::RowVectorXd global_mean = Eigen::RowVectorXd::Zero(d);
    for (const auto& v : vectors) global_mean += v.transpose();
    global_mean /= static_cast<double>(n);
    Eigen::RowVectorXd global_var = Eigen::RowVectorXd::Zero(d);
    for (const auto& v : vectors) global_var += (v.transpose() - global_mean).array().square().matrix();
    global_var /= static_cast<double>(n);
    global_var = global_var.array().max(kVarianceFloor);
    model.variances = global_var.replicate(k, 1);

    FitResult result;
    Mat resp(n, k);
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        // E-step.
        double total_ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            Vec logp(k);
            for (int j = 0; j < k; ++j) {
                logp(j) = std::log(model.weights(j)) +
                          log_gaussian(vectors[i], model.means.row(j), model.variances.row(j));
            }
            const double lse = log_sum_exp(logp);
            total_ll += lse;
            resp.row(static_cast<int>(i)) = (logp.array() - lse).exp();
        }
        const double mean_ll = total_ll / static_cast<double>(n);
        result.log_likelihood_history.push_back(mean_ll);
        if (mean_ll - prev_ll < opts.tol && iter > 0) break;
        prev_ll = mean_ll;

        // M-step.
        const Vec counts = resp.colwise().sum();
        model.weights = counts / static_cast<double>(n);
        for (int j = 0; j < k; ++j) {
            Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(d);
            for (std::size_t i = 0; i < n; ++i) mu += resp(static_cast<int>(i), j) * vectors[i].transpose();
            mu /= counts(j);
            Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(d);
            for (std::size_t i = 0; i < n; ++i) {
                var += resp(static_cast<int>(i), j) *
                       (vectors[i].transpose() - mu).array().square().matrix();
            }
            var /= counts(j);
            model.means.row(j) = mu;
            model.variances.row(j) = var.array().max(kVarianceFloor);
        }
    }
    result.model = std::move(model);
    return result;
}

double gmm_log_likelihood(const GmmModel& model, const Vec& x) {
    if (x.size() != model.means.cols()) {
        throw Error("DimensionMismatch", "query dimension does not match model");
    }
    Vec logp(model.weights.size());
    for (int j = 0; j < model.weights.size(); ++j) {
        logp(j) = std::log(model.weights(j)) +
                  log_gaussian(x, model.means.row(j), model.variances.row(j));
    }
    return log_sum_exp(logp);
}

std::string gmm_classify(const std::vector<GmmModel>& models, const Vec& x) {
    if (models.empty()) throw Error("NoModels", "no enrolled speaker models");
    const GmmModel* best = nullptr;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (const auto& m : models) {
        const double ll = gmm_log_likelihood(m, x);
        if (best == nullptr || ll > best_ll || (ll == best_ll && m.speaker_id < best->speaker_id)) {
            best = &m;
            best_ll = ll;
        }
    }
    return best->speaker_id;
}

void save_gmm_set(const std::vector<GmmModel>& models, const std::string& path) {
    binio::Writer w;
    w.raw(kMagic, 4);
    w.u32(kFormatVersion);
    w.u8(kGmmKindTag);
    w.str("gmm0");
    w.u32(static_cast<std::uint32_t>(models.size()));
    for (const auto& m : models) {
        w.str(m.speaker_id);
        w.u32(static_cast<std::uint32_t>(m.weights.size()));
        w.u32(static_cast<std::uint32_t>(m.means.cols()));
        for (int j = 0; j < m.weights.size(); ++j) w.f32(static_cast<float>(m.weights(j)));
        for (int j = 0; j < m.means.rows(); ++j) {
            for (int c = 0; c < m.means.cols(); ++c) w.f32(static_cast<float>(m.means(j, c)));
        }
        for (int j = 0; j < m.variances.rows(); ++j) {
            for (int c = 0; c < m.variances.cols(); ++c) w.f32(static_cast<float>(m.variances(j, c)));
        }
    }
    std::vector<std::uint8_t> payload = w.bytes();
    const std::uint32_t crc = crc32(payload.data(), payload.size());
    binio::Writer tail;
    tail.u32(crc);
    payload.insert(payload.end(), tail.bytes().begin(), tail.bytes().end());
    binio::write_file(path, payload);
}

std::vector<GmmModel> load_gmm_set(const std::string& path) {
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
    if (r.u32() != kFormatVersion) throw Error("VersionMismatch", "unknown format version");
    if (r.u8() != kGmmKindTag || r.str() != "gmm0") {
        throw Error("MalformedFile", "not a GMM model set: " + path);
    }

    std::vector<GmmModel> models(r.u32());
    for (auto& m : models) {
        m.speaker_id = r.str();
        const std::uint32_t k = r.u32();
        const std::uint32_t d = r.u32();
        m.weights.resize(k);
        for (std::uint32_t j = 0; j < k; ++j) m.weights(j) = r.f32();
        m.means.resize(k, d);
        for (std::uint32_t j = 0; j < k; ++j) {
            for (std::uint32_t c = 0; c < d; ++c) m.means(j, c) = r.f32();
        }
        m.variances.resize(k, d);
        for (std::uint32_t j = 0; j < k; ++j) {
            for (std::uint32_t c = 0; c < d; ++c) m.variances(j, c) = r.f32();
        }
    }
    if (r.pos() != r.size()) throw Error("MalformedFile", "trailing bytes: " + path);
    return models;
}

}  // namespace s2p::gmm
