#pragma once

#include "s2p/common.hpp"

#include <string>
#include <vector>

namespace s2p::gmm {

/// Diagonal-covariance Gaussian mixture for one speaker.
struct GmmModel {
    Vec weights;    // k, sums to 1
    Mat means;      // k x d
    Mat variances;  // k x d, floored
    std::string speaker_id;
};

struct FitOptions {
    int components = 8;
    std::uint64_t seed = 0;
    int max_iter = 200;
    double tol = 1e-4;
};

/// EM fit with k-means++ style seeding. Per-iteration mean log-likelihood is
/// non-decreasing. Returns the fitted model and its iteration history.
struct FitResult {
    GmmModel model;
    std::vector<double> log_likelihood_history;  // mean per-point LL per iteration
};

FitResult gmm_fit(const std::vector<Vec>& vectors, const FitOptions& opts);

double gmm_log_likelihood(const GmmModel& model, const Vec& x);

/// Argmax-likelihood classification over per-speaker models. Ties break to
/// the lexicographically smallest speaker id.
std::string gmm_classify(const std::vector<GmmModel>& models, const Vec& x);

/// Persistence in the shared model container, kind tag "gmm0".
void save_gmm_set(const std::vector<GmmModel>& models, const std::string& path);
std::vector<GmmModel> load_gmm_set(const std::string& path);

}  // namespace s2p::gmm
