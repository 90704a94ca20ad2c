#include "s2p/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace s2p::eval {

namespace {

std::string format_pct(double v) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(2);
    ss << v;
    return ss.str();
}

std::string format_r2(const std::optional<double>& r2) {
    if (!r2) return "";
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(4);
    ss << *r2;
    return ss.str();
}

struct LabeledEmbedding {
    Vec vector;
    std::string speaker_id;
    int source_offset_s = 0;
};

/// Nearest neighbor among candidates, skipping index `skip` (pass npos to
/// search all). Tie-break: distance, then speaker id, then position.
std::size_t nearest(const std::vector<LabeledEmbedding>& all, const Vec& query, std::size_t skip) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (i == skip) continue;
        const double dist = (query - all[i].vector).norm();
        if (dist < best_dist ||
            (dist == best_dist && best != std::numeric_limits<std::size_t>::max() &&
             all[i].speaker_id < all[best].speaker_id)) {
            best = i;
            best_dist = dist;
        }
    }
    return best;
}

void finalize_accuracy(EvalReport& report, const std::vector<std::string>& true_ids,
                       const std::vector<std::string>& predicted_ids, bool per_speaker_majority) {
    std::map<std::string, std::pair<int, int>> per_speaker;  // correct, total
    int correct = 0;
    for (std::size_t i = 0; i < true_ids.size(); ++i) {
        auto& [c, t] = per_speaker[true_ids[i]];
        t += 1;
        if (true_ids[i] == predicted_ids[i]) {
            c += 1;
            ++correct;
        }
    }
    for (const auto& [id, ct] : per_speaker) {
        report.per_speaker_accuracy[id] = 100.0 * ct.first / ct.second;
    }
    if (per_speaker_majority) {
        int majority_correct = 0;
        for (const auto& [id, ct] : per_speaker) {
            if (2 * ct.first > ct.second) ++majority_correct;
        }
        report.accuracy_pct = per_speaker.empty()
                                  ? 0.0
                                  : 100.0 * majority_correct / static_cast<double>(per_speaker.size());
    } else {
        report.accuracy_pct =
            true_ids.empty() ? 0.0 : 100.0 * correct / static_cast<double>(true_ids.size());
    }
    report.n_test = static_cast<int>(true_ids.size());
}

}  // namespace

double r2_score(const Vec& pred, const Vec& target) {
    if (pred.size() != target.size()) throw Error("DimensionMismatch", "r2 lengths differ");
    if (pred.size() < 2) throw Error("BadConfig", "r2 needs at least two values");
    const double mean = target.mean();
    const double ss_tot = (target.array() - mean).square().sum();
    if (ss_tot == 0.0) throw Error("ConstantTarget", "target variance is zero");
    const double ss_res = (target - pred).squaredNorm();
    return 1.0 - ss_res / ss_tot;
}

EvalReport eval_closed_set(const models::ModelBundle& model,
                           const std::vector<features::Instance>& test_instances,
                           const std::vector<std::string>& label_order) {
    EvalReport report;
    report.protocol = "closed";

    std::map<std::string, int> label_to_index;
    for (std::size_t i = 0; i < label_order.size(); ++i) {
        label_to_index[label_order[i]] = static_cast<int>(i);
    }

    std::vector<std::string> truth, predicted;
    for (const auto& inst : test_instances) {
        if (!label_to_index.count(inst.speaker_id)) {
            throw Error("UnknownLabel", "speaker " + inst.speaker_id + " not in label order");
        }
        const Vec probs = models::classify_probs(model, inst.input);
        int argmax = 0;
        probs.maxCoeff(&argmax);
        truth.push_back(inst.speaker_id);
        predicted.push_back(label_order[static_cast<std::size_t>(argmax)]);
    }
    finalize_accuracy(report, truth, predicted, false);
    return report;
}

EvalReport eval_open_set(const models::ModelBundle& embedder,
                         const std::vector<features::Instance>& test_instances,
                         const OpenSetOptions& opts) {
    EvalReport report;
    report.protocol = opts.mode == OpenSetMode::kLeaveOneOut ? "open_loo" : "open_enroll_k";
    report.seed = opts.seed;

    std::map<std::string, int> counts;
    for (const auto& inst : test_instances) counts[inst.speaker_id] += 1;
    const int minimum = opts.mode == OpenSetMode::kLeaveOneOut ? 2 : opts.enroll_k + 1;
    for (const auto& [id, n] : counts) {
        if (n < minimum) {
            throw Error("InsufficientInstances",
                        "speaker " + id + " has " + std::to_string(n) + " instances, need >= " +
                            std::to_string(minimum));
        }
    }

    std::vector<LabeledEmbedding> embedded;
    embedded.reserve(test_instances.size());
    for (const auto& inst : test_instances) {
        embedded.push_back(
            {models::embed(embedder, inst.input).vector, inst.speaker_id, inst.source_offset_s});
    }

    bool degenerate = true;
    for (std::size_t i = 1; i < embedded.size() && degenerate; ++i) {
        if (embedded[i].vector != embedded[0].vector) degenerate = false;
    }
    if (degenerate && embedded.size() > 1) report.warnings.push_back("DegenerateEmbedder");

    std::vector<std::string> truth, predicted;
    if (opts.mode == OpenSetMode::kLeaveOneOut) {
        for (std::size_t i = 0; i < embedded.size(); ++i) {
            const std::size_t hit = nearest(embedded, embedded[i].vector, i);
            truth.push_back(embedded[i].speaker_id);
            predicted.push_back(embedded[hit].speaker_id);
        }
    } else {
        // Enroll the first k instances per speaker by source offset.
        std::map<std::string, std::vector<std::size_t>> by_speaker;
        for (std::size_t i = 0; i < embedded.size(); ++i) {
            by_speaker[embedded[i].speaker_id].push_back(i);
        }
        std::vector<LabeledEmbedding> enrolled;
        std::vector<std::size_t> queries;
        for (auto& [id, idxs] : by_speaker) {
            std::stable_sort(idxs.begin(), idxs.end(), [&](std::size_t a, std::size_t b) {
                return embedded[a].source_offset_s < embedded[b].source_offset_s;
            });
            for (std::size_t j = 0; j < idxs.size(); ++j) {
                if (j < static_cast<std::size_t>(opts.enroll_k)) {
                    enrolled.push_back(embedded[idxs[j]]);
                } else {
                    queries.push_back(idxs[j]);
                }
            }
        }
        report.n_train = static_cast<int>(enrolled.size());
        for (std::size_t q : queries) {
            const std::size_t hit =
                nearest(enrolled, embedded[q].vector, std::numeric_limits<std::size_t>::max());
            truth.push_back(embedded[q].speaker_id);
            predicted.push_back(enrolled[hit].speaker_id);
        }
    }
    finalize_accuracy(report, truth, predicted, opts.per_speaker_majority);

    // R2 over globally flattened reconstructions, when targets are present.
    bool have_targets = !test_instances.empty();
    for (const auto& inst : test_instances) {
        if (!inst.target) {
            have_targets = false;
            break;
        }
    }
    if (have_targets) {
        const auto out_dim = test_instances.front().target->size();
        Vec pred(static_cast<long>(test_instances.size()) * out_dim);
        Vec target(pred.size());
        for (std::size_t i = 0; i < test_instances.size(); ++i) {
            pred.segment(static_cast<long>(i) * out_dim, out_dim) =
                models::reconstruct(embedder, test_instances[i].input);
            target.segment(static_cast<long>(i) * out_dim, out_dim) = *test_instances[i].target;
        }
        report.r2 = r2_score(pred, target);
    }
    return report;
}

std::vector<SweepRow> scalability_sweep(const models::ModelBundle& embedder,
                                        const std::vector<features::Instance>& speaker_pool,
                                        const std::vector<int>& sizes, int trials,
                                        std::uint64_t seed) {
    std::map<std::string, std::vector<LabeledEmbedding>> by_speaker;
    for (const auto& inst : speaker_pool) {
        by_speaker[inst.speaker_id].push_back(
            {models::embed(embedder, inst.input).vector, inst.speaker_id, inst.source_offset_s});
    }
    std::vector<std::string> speakers;
    for (const auto& [id, list] : by_speaker) speakers.push_back(id);

    std::vector<int> sorted_sizes = sizes;
    std::sort(sorted_sizes.begin(), sorted_sizes.end());
    if (!sorted_sizes.empty() && sorted_sizes.back() > static_cast<int>(speakers.size())) {
        throw Error("PoolTooSmall", "pool has " + std::to_string(speakers.size()) +
                                        " speakers, need " + std::to_string(sorted_sizes.back()));
    }

    Rng rng(seed);
    std::vector<SweepRow> rows;
    for (int size : sorted_sizes) {
        std::vector<double> accs;
        for (int trial = 0; trial < trials; ++trial) {
            std::vector<std::string> subset = speakers;
            rng.shuffle(subset);
            subset.resize(static_cast<std::size_t>(size));

            std::vector<LabeledEmbedding> embedded;
            for (const auto& id : subset) {
                const auto& list = by_speaker[id];
                embedded.insert(embedded.end(), list.begin(), list.end());
            }
            int correct = 0;
            for (std::size_t i = 0; i < embedded.size(); ++i) {
                const std::size_t hit = nearest(embedded, embedded[i].vector, i);
                if (embedded[hit].speaker_id == embedded[i].speaker_id) ++correct;
            }
            const double acc = embedded.empty()
                                   ? 0.0
                                   : 100.0 * correct / static_cast<double>(embedded.size());
            accs.push_back(acc);
            rows.push_back({size, trial, acc, 0.0});
        }
        const double mean = std::accumulate(accs.begin(), accs.end(), 0.0) / accs.size();
        double var = 0.0;
        for (double a : accs) var += (a - mean) * (a - mean);
        var /= static_cast<double>(accs.size());
        rows.push_back({size, -1, mean, std::sqrt(var)});
    }
    return rows;
}

std::string report_csv(const EvalReport& report) {
    std::ostringstream ss;
    ss << "protocol,n_train,n_test,accuracy_pct,r2,seed\n";
    ss << report.protocol << ',' << report.n_train << ',' << report.n_test << ','
       << format_pct(report.accuracy_pct) << ',' << format_r2(report.r2) << ',' << report.seed
       << '\n';
    return ss.str();
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream ss;
    ss << "n_speakers,trial,accuracy_pct,std\n";
    for (const auto& row : rows) {
        ss << row.n_speakers << ',';
        if (row.trial < 0) {
            ss << "mean," << format_pct(row.accuracy_pct) << ',' << format_pct(row.std_dev);
        } else {
            ss << row.trial << ',' << format_pct(row.accuracy_pct) << ',';
        }
        ss << '\n';
    }
    return ss.str();
}

}  // namespace s2p::eval
