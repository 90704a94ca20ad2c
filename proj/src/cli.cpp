#include "s2p/cli.hpp"

#include "s2p/audio.hpp"
#include "s2p/dataset.hpp"
#include "s2p/eval.hpp"
#include "s2p/identify.hpp"
#include "s2p/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace s2p::cli {

namespace {

struct GlobalFlags {
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = auto; all operations are order-independent anyway
    bool verbose = false;
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("IoError", "cannot write " + path);
    out << text;
}

std::string format_values(const Vec& v) {
    std::ostringstream ss;
    ss.precision(17);
    for (int i = 0; i < v.size(); ++i) {
        ss << ',' << v(i);
    }
    return ss.str();
}

std::vector<features::Instance> instances_from_manifest(const std::string& manifest_path,
                                                        bool verbose) {
    const auto entries = dataset::load_manifest(manifest_path);
    return dataset::materialize(entries, features::MfccConfig{}, [&](const std::string& msg) {
        if (verbose) std::cerr << "warning: " << msg << '\n';
    });
}

std::vector<std::string> load_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot open label file " + path);
    std::vector<std::string> labels;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) labels.push_back(line);
    }
    return labels;
}

void cmd_features(const std::string& audio_path, const std::string& out_path) {
    const auto buf = audio::load_canonical(audio_path);
    const auto instances = features::extract_instances(buf, features::MfccConfig{});
    std::ostringstream ss;
    for (const auto& inst : instances) {
        ss << inst.source_offset_s << format_values(inst.input) << '\n';
    }
    write_text(out_path, ss.str());
    std::cout << instances.size() << " instances -> " << out_path << '\n';
}

void cmd_split(const std::string& manifest_path, const dataset::SplitSpec& spec,
               const std::string& out_path, bool verbose) {
    const auto instances = instances_from_manifest(manifest_path, verbose);
    const auto partitions = dataset::split(instances, spec);
    std::ostringstream ss;
    for (const auto& [name, list] : partitions) {
        for (const auto& inst : list) {
            ss << inst.speaker_id << '\t' << inst.source_offset_s << '\t' << name << '\n';
        }
    }
    write_text(out_path, ss.str());
    for (const auto& [name, list] : partitions) {
        std::cout << name << ": " << list.size() << " instances\n";
    }
}

void cmd_train(const std::string& manifest_path, const std::string& kind,
               const std::string& out_path, const std::string& embedder_path,
               double negative_ratio, nn::TrainConfig cfg, bool cfg_given, int gmm_components,
               const GlobalFlags& flags) {
    const auto instances = instances_from_manifest(manifest_path, flags.verbose);
    cfg.seed = flags.seed;

    if (kind == "speech2phone") {
        if (!cfg_given) {
            auto d = pipeline::default_speech2phone_config();
            d.seed = cfg.seed;
            cfg = d;
        }
        auto trained = pipeline::train_speech2phone(instances, cfg, flags.seed);
        models::save_model(trained.bundle, out_path);
        std::cout << "final loss " << trained.loss_history.back() << " -> " << out_path << '\n';
    } else if (kind == "closed-set") {
        if (!cfg_given) {
            auto d = pipeline::default_closed_set_config();
            d.seed = cfg.seed;
            cfg = d;
        }
        auto trained = pipeline::train_closed_set(instances, cfg, flags.seed);
        models::save_model(trained.bundle, out_path);
        std::ostringstream labels;
        for (const auto& id : trained.label_order) labels << id << '\n';
        write_text(out_path + ".labels", labels.str());
        std::cout << "final loss " << trained.loss_history.back() << " -> " << out_path << '\n';
    } else if (kind == "pair") {
        if (embedder_path.empty()) {
            throw Error("BadConfig", "pair training needs --embedder (a speech2phone model)");
        }
        if (!cfg_given) {
            auto d = pipeline::default_pair_config();
            d.seed = cfg.seed;
            cfg = d;
        }
        const auto embedder = models::load_model(embedder_path);
        std::vector<std::pair<std::string, Vec>> embeddings;
        for (const auto& inst : instances) {
            embeddings.emplace_back(inst.speaker_id, models::embed(embedder, inst.input).vector);
        }
        const auto pairs = dataset::build_pair_dataset(embeddings, negative_ratio, flags.seed);
        auto trained = pipeline::train_pair_comparator(pairs, cfg, flags.seed);
        models::save_model(trained.bundle, out_path);
        std::cout << pairs.size() << " pairs, final loss " << trained.loss_history.back() << " -> "
                  << out_path << '\n';
    } else if (kind == "gmm") {
        gmm::FitOptions opts;
        opts.components = gmm_components;
        opts.seed = flags.seed;
        const auto models = pipeline::train_gmm_models(instances, opts);
        gmm::save_gmm_set(models, out_path);
        std::cout << models.size() << " speaker models -> " << out_path << '\n';
    } else {
        throw Error("BadConfig", "unknown model kind " + kind);
    }
}

void cmd_embed(const std::string& model_path, const std::string& audio_path,
               const std::string& out_path) {
    const auto bundle = models::load_model(model_path);
    const auto buf = audio::load_canonical(audio_path);
    const auto instances = features::extract_instances(buf, features::MfccConfig{});
    std::ostringstream ss;
    for (const auto& inst : instances) {
        ss << inst.source_offset_s << format_values(models::embed(bundle, inst.input).vector)
           << '\n';
    }
    write_text(out_path, ss.str());
    std::cout << instances.size() << " embeddings -> " << out_path << '\n';
}

void cmd_enroll(const std::string& model_path, const std::string& db_path,
                const std::string& audio_path, const std::string& speaker, bool centroid) {
    const auto bundle = models::load_model(model_path);
    identify::EmbeddingDb db;
    if (std::filesystem::exists(db_path)) {
        bool mismatch = false;
        db = identify::load_db(db_path, models::model_checksum(bundle), &mismatch);
        if (mismatch) {
            std::cerr << "warning: database was built with a different embedder\n";
        }
    } else {
        db.dim = bundle.network.layers[0].weights.rows();
        db.created_with = models::model_checksum(bundle);
    }

    const auto buf = audio::load_canonical(audio_path);
    const auto instances = features::extract_instances(buf, features::MfccConfig{});
    if (instances.empty()) {
        throw Error("TooShort", "enrollment audio must be at least 5 s long");
    }
    std::vector<Vec> embeddings;
    for (const auto& inst : instances) {
        embeddings.push_back(models::embed(bundle, inst.input).vector);
    }
    if (centroid) {
        identify::enroll_centroid(db, speaker, embeddings);
    } else {
        identify::enroll(db, speaker, embeddings);
    }
    identify::save_db(db, db_path);
    if (centroid) {
        std::cout << "enrolled centroid of " << embeddings.size() << " embedding(s) for "
                  << speaker << '\n';
    } else {
        std::cout << "enrolled " << embeddings.size() << " embedding(s) for " << speaker << '\n';
    }
}

void cmd_identify(const std::string& model_path, const std::string& db_path,
                  const std::string& audio_path, const std::string& pair_model_path) {
    const auto bundle = models::load_model(model_path);
    bool mismatch = false;
    const auto db = identify::load_db(db_path, models::model_checksum(bundle), &mismatch);
    if (mismatch) std::cerr << "warning: database was built with a different embedder\n";

    const auto buf = audio::load_canonical(audio_path);
    const auto instances = features::extract_instances(buf, features::MfccConfig{});
    if (instances.empty()) {
        throw Error("TooShort",
                    "audio shorter than 5 s cannot be identified; record at least 5 seconds");
    }

    std::optional<models::ModelBundle> comparator;
    if (!pair_model_path.empty()) comparator = models::load_model(pair_model_path);

    std::map<std::string, int> votes;
    std::string best_window_id;
    double best_window_score = comparator ? -1.0 : std::numeric_limits<double>::infinity();
    for (const auto& inst : instances) {
        const Vec query = models::embed(bundle, inst.input).vector;
        const identify::Match match = comparator ? identify::identify_pair(db, *comparator, query)
                                                 : identify::identify_knn(db, query);
        std::cout << "window " << inst.source_offset_s << "s: " << match.speaker_id << " ("
                  << (comparator ? "p=" : "d=") << match.score << ")\n";
        votes[match.speaker_id] += 1;
        const bool better = comparator ? match.score > best_window_score
                                       : match.score < best_window_score;
        if (better) {
            best_window_score = match.score;
            best_window_id = match.speaker_id;
        }
    }

    // Majority verdict; ties go to the window with the best score.
    int top_votes = 0;
    bool tie = false;
    std::string verdict;
    for (const auto& [id, n] : votes) {
        if (n > top_votes) {
            top_votes = n;
            verdict = id;
            tie = false;
        } else if (n == top_votes) {
            tie = true;
        }
    }
    if (tie) verdict = best_window_id;
    std::cout << "verdict: " << verdict << '\n';
}

void cmd_eval_closed(const std::string& model_path, const std::string& labels_path,
                     const std::string& manifest_path, const std::string& out_path,
                     const GlobalFlags& flags) {
    const auto bundle = models::load_model(model_path);
    const auto labels =
        load_labels(labels_path.empty() ? model_path + ".labels" : labels_path);
    const auto instances = instances_from_manifest(manifest_path, flags.verbose);
    auto report = eval::eval_closed_set(bundle, instances, labels);
    report.seed = flags.seed;
    const std::string csv = eval::report_csv(report);
    if (!out_path.empty()) write_text(out_path, csv);
    std::cout << csv;
}

void cmd_eval_open(const std::string& model_path, const std::string& manifest_path,
                   const std::string& mode, int enroll_k, bool majority,
                   const std::string& out_path, const GlobalFlags& flags) {
    const auto bundle = models::load_model(model_path);
    const auto instances = instances_from_manifest(manifest_path, flags.verbose);
    eval::OpenSetOptions opts;
    opts.mode = mode == "enroll-k" ? eval::OpenSetMode::kEnrollK : eval::OpenSetMode::kLeaveOneOut;
    opts.enroll_k = enroll_k;
    opts.seed = flags.seed;
    opts.per_speaker_majority = majority;
    const auto report = eval::eval_open_set(bundle, instances, opts);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    const std::string csv = eval::report_csv(report);
    if (!out_path.empty()) write_text(out_path, csv);
    std::cout << csv;
}

void cmd_sweep(const std::string& model_path, const std::string& manifest_path,
               const std::vector<int>& sizes, int trials, const std::string& out_path,
               const GlobalFlags& flags) {
    const auto bundle = models::load_model(model_path);
    const auto instances = instances_from_manifest(manifest_path, flags.verbose);
    const auto rows = eval::scalability_sweep(bundle, instances, sizes, trials, flags.seed);
    const std::string csv = eval::sweep_csv(rows);
    if (!out_path.empty()) write_text(out_path, csv);
    std::cout << csv;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Speech2Phone speaker-embedding toolkit"};
    app.require_subcommand(1);

    GlobalFlags flags;
    if (const char* env = std::getenv("S2P_THREADS")) flags.threads = std::atoi(env);
    app.add_option("--seed", flags.seed, "Global RNG seed")->capture_default_str();
    app.add_option("--threads", flags.threads, "Worker threads (0 = auto)");
    app.add_flag("--verbose", flags.verbose, "Verbose diagnostics");

    // features
    auto* features_cmd = app.add_subcommand("features", "Extract 5 s instance vectors from a WAV");
    std::string feat_audio, feat_out;
    features_cmd->add_option("--audio", feat_audio, "Input WAV")->required();
    features_cmd->add_option("--out", feat_out, "Output CSV")->required();

    // split
    auto* split_cmd = app.add_subcommand("split", "Partition a corpus into speaker groups");
    std::string split_manifest, split_out;
    dataset::SplitSpec split_spec;
    split_cmd->add_option("--manifest", split_manifest, "Corpus manifest (TSV)")->required();
    split_cmd->add_option("--groups", split_spec.groups, "Speaker groups")->capture_default_str();
    split_cmd->add_option("--holdout", split_spec.holdout_per_speaker,
                          "Instances per speaker reserved for the test partition")
        ->capture_default_str();
    split_cmd->add_option("--out", split_out, "Output assignment TSV")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a model from a manifest");
    std::string train_manifest, train_kind = "speech2phone", train_out, train_embedder;
    nn::TrainConfig train_cfg;
    double negative_ratio = 1.0;
    int gmm_components = 8;
    train_cmd->add_option("--manifest", train_manifest, "Corpus manifest (TSV)")->required();
    train_cmd->add_option("--model", train_kind, "speech2phone | closed-set | pair | gmm")
        ->capture_default_str();
    train_cmd->add_option("--out", train_out, "Output model file")->required();
    train_cmd->add_option("--embedder", train_embedder, "Embedding model (pair training)");
    train_cmd->add_option("--negative-ratio", negative_ratio, "Negative pairs per positive")
        ->capture_default_str();
    auto* epochs_opt = train_cmd->add_option("--epochs", train_cfg.epochs, "Training epochs");
    auto* lr_opt = train_cmd->add_option("--lr", train_cfg.lr, "Learning rate");
    auto* batch_opt = train_cmd->add_option("--batch", train_cfg.batch_size, "Batch size");
    train_cmd->add_option("--gmm-components", gmm_components, "Mixture components per speaker")
        ->capture_default_str();

    // embed
    auto* embed_cmd = app.add_subcommand("embed", "Extract speaker embeddings from a WAV");
    std::string embed_model, embed_audio, embed_out;
    embed_cmd->add_option("--model", embed_model, "Embedding model")->required();
    embed_cmd->add_option("--audio", embed_audio, "Input WAV")->required();
    embed_cmd->add_option("--out", embed_out, "Output CSV")->required();

    // enroll
    auto* enroll_cmd = app.add_subcommand("enroll", "Add a speaker to an embedding database");
    std::string enroll_model, enroll_db, enroll_audio, enroll_speaker;
    bool enroll_use_centroid = false;
    enroll_cmd->add_option("--model", enroll_model, "Embedding model")->required();
    enroll_cmd->add_option("--db", enroll_db, "Database file (created if missing)")->required();
    enroll_cmd->add_option("--audio", enroll_audio, "Enrollment WAV (>= 5 s)")->required();
    enroll_cmd->add_option("--speaker", enroll_speaker, "Speaker id")->required();
    enroll_cmd->add_flag("--centroid", enroll_use_centroid, "Store one averaged embedding");

    // identify
    auto* identify_cmd = app.add_subcommand("identify", "Identify the speaker of a WAV");
    std::string id_model, id_db, id_audio, id_pair_model;
    identify_cmd->add_option("--model", id_model, "Embedding model")->required();
    identify_cmd->add_option("--db", id_db, "Embedding database")->required();
    identify_cmd->add_option("--audio", id_audio, "Query WAV (>= 5 s)")->required();
    identify_cmd->add_option("--pair-model", id_pair_model,
                             "Use the pair comparator instead of KNN");

    // eval-closed
    auto* eval_closed_cmd = app.add_subcommand("eval-closed", "Closed-set accuracy report");
    std::string ec_model, ec_labels, ec_manifest, ec_out;
    eval_closed_cmd->add_option("--model", ec_model, "Closed-set model")->required();
    eval_closed_cmd->add_option("--labels", ec_labels, "Label file (default: <model>.labels)");
    eval_closed_cmd->add_option("--manifest", ec_manifest, "Test manifest")->required();
    eval_closed_cmd->add_option("--out", ec_out, "Report CSV path");

    // eval-open
    auto* eval_open_cmd = app.add_subcommand("eval-open", "Open-set accuracy + R2 report");
    std::string eo_model, eo_manifest, eo_mode = "loo", eo_out;
    int eo_k = 1;
    bool eo_majority = false;
    eval_open_cmd->add_option("--model", eo_model, "Embedding model")->required();
    eval_open_cmd->add_option("--manifest", eo_manifest, "Test manifest")->required();
    eval_open_cmd->add_option("--mode", eo_mode, "loo | enroll-k")->capture_default_str();
    eval_open_cmd->add_option("--k", eo_k, "Enrollment instances per speaker")
        ->capture_default_str();
    eval_open_cmd->add_flag("--majority", eo_majority, "Score per-speaker majority verdicts");
    eval_open_cmd->add_option("--out", eo_out, "Report CSV path");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Scalability sweep over database sizes");
    std::string sw_model, sw_manifest, sw_out;
    std::vector<int> sw_sizes;
    int sw_trials = 10;
    sweep_cmd->add_option("--model", sw_model, "Embedding model")->required();
    sweep_cmd->add_option("--manifest", sw_manifest, "Speaker pool manifest")->required();
    sweep_cmd->add_option("--sizes", sw_sizes, "Database sizes to test")->required();
    sweep_cmd->add_option("--trials", sw_trials, "Trials per size")->capture_default_str();
    sweep_cmd->add_option("--out", sw_out, "Sweep CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        dataset::SplitSpec spec = split_spec;
        spec.seed = flags.seed;
        if (features_cmd->parsed()) {
            cmd_features(feat_audio, feat_out);
        } else if (split_cmd->parsed()) {
            cmd_split(split_manifest, spec, split_out, flags.verbose);
        } else if (train_cmd->parsed()) {
            const bool cfg_given = epochs_opt->count() || lr_opt->count() || batch_opt->count();
            if (cfg_given) {
                if (!epochs_opt->count() || !lr_opt->count() || !batch_opt->count()) {
                    std::cerr << "error: --epochs, --lr and --batch must be given together\n";
                    return 2;
                }
            }
            cmd_train(train_manifest, train_kind, train_out, train_embedder, negative_ratio,
                      train_cfg, cfg_given, gmm_components, flags);
        } else if (embed_cmd->parsed()) {
            cmd_embed(embed_model, embed_audio, embed_out);
        } else if (enroll_cmd->parsed()) {
            cmd_enroll(enroll_model, enroll_db, enroll_audio, enroll_speaker, enroll_use_centroid);
        } else if (identify_cmd->parsed()) {
            cmd_identify(id_model, id_db, id_audio, id_pair_model);
        } else if (eval_closed_cmd->parsed()) {
            cmd_eval_closed(ec_model, ec_labels, ec_manifest, ec_out, flags);
        } else if (eval_open_cmd->parsed()) {
            cmd_eval_open(eo_model, eo_manifest, eo_mode, eo_k, eo_majority, eo_out, flags);
        } else if (sweep_cmd->parsed()) {
            cmd_sweep(sw_model, sw_manifest, sw_sizes, sw_trials, sw_out, flags);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace s2p::cli
