#pragma once

#include "s2p/identify.hpp"
#include "s2p/models.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace s2p::eval {

struct EvalReport {
    std::string protocol;  // closed | open_loo | open_enroll_k | pair | gmm
    double accuracy_pct = 0.0;
    std::optional<double> r2;
    int n_train = 0;
    int n_test = 0;
    std::uint64_t seed = 0;
    std::map<std::string, double> per_speaker_accuracy;
    std::vector<std::string> warnings;
};

enum class OpenSetMode { kLeaveOneOut, kEnrollK };

struct OpenSetOptions {
    OpenSetMode mode = OpenSetMode::kLeaveOneOut;
    int enroll_k = 1;
    std::uint64_t seed = 0;
    bool per_speaker_majority = false;
};

/// Coefficient of determination over globally flattened predictions.
double r2_score(const Vec& pred, const Vec& target);

/// Accuracy of argmax logits against true labels. label_order maps output
/// index -> speaker id, as fixed at training time.
EvalReport eval_closed_set(const models::ModelBundle& model,
                           const std::vector<features::Instance>& test_instances,
                           const std::vector<std::string>& label_order);

/// Open-set protocol: embed all test instances, query by KNN either
/// leave-one-out or after enrolling the first k instances per speaker. R2 is
/// computed from the embedder's reconstructions against the anchor targets.
EvalReport eval_open_set(const models::ModelBundle& embedder,
                         const std::vector<features::Instance>& test_instances,
                         const OpenSetOptions& opts);

struct SweepRow {
    int n_speakers = 0;
    int trial = 0;  // -1 marks the aggregate row
    double accuracy_pct = 0.0;
    double std_dev = 0.0;  // aggregate rows only
};

/// Leave-one-out accuracy over seeded random speaker subsets of each size.
/// Rows are sorted by size with per-trial rows followed by one aggregate row.
std::vector<SweepRow> scalability_sweep(const models::ModelBundle& embedder,
                                        const std::vector<features::Instance>& speaker_pool,
                                        const std::vector<int>& sizes, int trials,
                                        std::uint64_t seed);

/// "protocol,n_train,n_test,accuracy_pct,r2,seed" with a header row.
std::string report_csv(const EvalReport& report);

/// "n_speakers,trial,accuracy_pct" rows; aggregate rows use trial = "mean"
/// and carry the std in an extra column.
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace s2p::eval
