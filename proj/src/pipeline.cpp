#include "s2p/pipeline.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace s2p::pipeline {

nn::TrainConfig default_speech2phone_config() {
    nn::TrainConfig cfg;
    cfg.epochs = 1000;
    cfg.lr = 0.0007;
    cfg.batch_size = 128;
    return cfg;
}

nn::TrainConfig default_closed_set_config() {
    nn::TrainConfig cfg;
    cfg.epochs = 3000;
    cfg.lr = 0.00005;
    cfg.batch_size = 64;
    return cfg;
}

nn::TrainConfig default_pair_config() {
    nn::TrainConfig cfg;
    cfg.epochs = 1000;
    cfg.lr = 0.0001;
    cfg.batch_size = 16;
    return cfg;
}

TrainedModel train_speech2phone(const std::vector<features::Instance>& instances,
                                const nn::TrainConfig& cfg, std::uint64_t init_seed,
                                int embedding_dim) {
    if (instances.empty()) throw Error("EmptyDataset", "no training instances");
    for (const auto& inst : instances) {
        if (!inst.target) {
            throw Error("MissingTarget", "instance for " + inst.speaker_id + " has no anchor target");
        }
    }
    const auto input_dim = static_cast<int>(instances.front().input.size());
    const auto output_dim = static_cast<int>(instances.front().target->size());

    TrainedModel result;
    result.bundle = models::build_speech2phone(init_seed, input_dim, embedding_dim, output_dim);

    std::vector<Vec> inputs;
    inputs.reserve(instances.size());
    for (const auto& inst : instances) inputs.push_back(inst.input);
    models::fit_input_norm(result.bundle, inputs);

    std::vector<nn::TrainSample> samples;
    samples.reserve(instances.size());
    for (const auto& inst : instances) {
        nn::TrainSample s;
        s.input = models::normalize_input(result.bundle, inst.input);
        s.target = *inst.target;
        samples.push_back(std::move(s));
    }
    result.loss_history = nn::train(result.bundle.network, samples, nn::LossKind::kMse, cfg);
    return result;
}

TrainedModel train_closed_set(const std::vector<features::Instance>& instances,
                              const nn::TrainConfig& cfg, std::uint64_t init_seed, int hidden_dim) {
    if (instances.empty()) throw Error("EmptyDataset", "no training instances");
    std::set<std::string> speaker_set;
    for (const auto& inst : instances) speaker_set.insert(inst.speaker_id);

    TrainedModel result;
    result.label_order.assign(speaker_set.begin(), speaker_set.end());
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < result.label_order.size(); ++i) {
        index[result.label_order[i]] = static_cast<int>(i);
    }

    const auto input_dim = static_cast<int>(instances.front().input.size());
    result.bundle = models::build_closed_set(static_cast<int>(result.label_order.size()), init_seed,
                                             input_dim, hidden_dim);

    std::vector<Vec> inputs;
    inputs.reserve(instances.size());
    for (const auto& inst : instances) inputs.push_back(inst.input);
    models::fit_input_norm(result.bundle, inputs);

    std::vector<nn::TrainSample> samples;
    samples.reserve(instances.size());
    for (const auto& inst : instances) {
        nn::TrainSample s;
        s.input = models::normalize_input(result.bundle, inst.input);
        s.target_class = index[inst.speaker_id];
        samples.push_back(std::move(s));
    }
    result.loss_history =
        nn::train(result.bundle.network, samples, nn::LossKind::kSoftmaxCrossEntropy, cfg);
    return result;
}

TrainedModel train_pair_comparator(const std::vector<dataset::EmbeddingPair>& pairs,
                                   const nn::TrainConfig& cfg, std::uint64_t init_seed,
                                   int hidden_dim) {
    if (pairs.empty()) throw Error("EmptyDataset", "no training pairs");
    const auto embedding_dim = static_cast<int>(pairs.front().left.size());

    TrainedModel result;
    result.bundle = models::build_pair_comparator(init_seed, embedding_dim, hidden_dim);

    std::vector<Vec> inputs;
    inputs.reserve(pairs.size());
    for (const auto& p : pairs) {
        Vec joint(2 * embedding_dim);
        joint << p.left, p.right;
        inputs.push_back(std::move(joint));
    }
    models::fit_input_norm(result.bundle, inputs);

    std::vector<nn::TrainSample> samples;
    samples.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        nn::TrainSample s;
        s.input = models::normalize_input(result.bundle, inputs[i]);
        s.target_class = pairs[i].same_speaker ? 0 : 1;
        samples.push_back(std::move(s));
    }
    result.loss_history =
        nn::train(result.bundle.network, samples, nn::LossKind::kSoftmaxCrossEntropy, cfg);
    return result;
}

std::vector<gmm::GmmModel> train_gmm_models(const std::vector<features::Instance>& instances,
                                            const gmm::FitOptions& opts) {
    std::map<std::string, std::vector<Vec>> by_speaker;
    for (const auto& inst : instances) by_speaker[inst.speaker_id].push_back(inst.input);

    std::vector<gmm::GmmModel> models;
    for (const auto& [id, vecs] : by_speaker) {
        gmm::FitOptions speaker_opts = opts;
        // Small enrollments cannot support the default component count.
        speaker_opts.components = std::min<int>(opts.components, static_cast<int>(vecs.size()));
        gmm::GmmModel model = gmm::gmm_fit(vecs, speaker_opts).model;
        model.speaker_id = id;
        models.push_back(std::move(model));
    }
    return models;
}

}  // namespace s2p::pipeline
