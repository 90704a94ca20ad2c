#include "s2p/eval.hpp"

#include "helpers.hpp"

#include <doctest.h>

using namespace s2p;
using namespace s2p::eval;

namespace {

features::Instance point_instance(const std::string& speaker, double x, double y, int offset,
                                  bool with_target = true) {
    features::Instance inst;
    inst.input = Vec(2);
    inst.input << x, y;
    if (with_target) {
        Vec t(2);
        t << x + 0.5, y - 0.5;
        inst.target = t;
    }
    inst.speaker_id = speaker;
    inst.source_offset_s = offset;
    return inst;
}

/// 2 -> 2 -> 2 embedder whose first layer is the identity, so embeddings of
/// non-negative inputs equal the inputs.
models::ModelBundle identity_embedder() {
    models::ModelBundle b = models::build_speech2phone(1, 2, 2, 2);
    b.network.layers[0].weights = Mat::Identity(2, 2);
    b.network.layers[0].biases = Vec::Zero(2);
    b.input_mean = Vec::Zero(2);
    b.input_std = Vec::Ones(2);
    return b;
}

}  // namespace

TEST_CASE("r2_score reference values") {
    Vec target(4);
    target << 1.0, 2.0, 3.0, 4.0;
    CHECK(r2_score(target, target) == doctest::Approx(1.0));

    const Vec mean_pred = Vec::Constant(4, 2.5);
    CHECK(r2_score(mean_pred, target) == doctest::Approx(0.0));

    Vec off(4);
    off << 2.0, 3.0, 4.0, 5.0;
    // ss_res = 4, ss_tot = 5.
    CHECK(r2_score(off, target) == doctest::Approx(1.0 - 4.0 / 5.0));

    CHECK_THROWS_WITH_AS(r2_score(Vec::Zero(3), Vec::Zero(4)), doctest::Contains("DimensionMismatch"),
                         Error);
    CHECK_THROWS_WITH_AS(r2_score(Vec::Zero(3), Vec::Ones(3)), doctest::Contains("ConstantTarget"),
                         Error);
}

TEST_CASE("closed-set eval with a constant classifier") {
    models::ModelBundle cls = models::build_closed_set(2, 1, 2, 3);
    for (auto& layer : cls.network.layers) {
        layer.weights.setZero();
        layer.biases.setZero();
    }
    // Uniform logits: argmax is index 0, so everything is predicted as the
    // first label in the order.
    std::vector<features::Instance> test = {
        point_instance("a", 0.0, 0.0, 0),
        point_instance("a", 1.0, 0.0, 1),
        point_instance("b", 0.0, 1.0, 0),
        point_instance("b", 1.0, 1.0, 1),
    };
    const EvalReport r = eval_closed_set(cls, test, {"a", "b"});
    CHECK(r.protocol == "closed");
    CHECK(r.n_test == 4);
    CHECK(r.accuracy_pct == doctest::Approx(50.0));
    CHECK(r.per_speaker_accuracy.at("a") == doctest::Approx(100.0));
    CHECK(r.per_speaker_accuracy.at("b") == doctest::Approx(0.0));

    CHECK_THROWS_WITH_AS(eval_closed_set(cls, test, {"a"}), doctest::Contains("UnknownLabel"),
                         Error);
}

TEST_CASE("open-set LOO separates well-separated clusters perfectly") {
    const models::ModelBundle emb = identity_embedder();
    std::vector<features::Instance> test;
    for (int i = 0; i < 3; ++i) test.push_back(point_instance("a", 0.1 * i, 0.0, i));
    for (int i = 0; i < 3; ++i) test.push_back(point_instance("b", 10.0 + 0.1 * i, 10.0, i));

    OpenSetOptions opts;
    const EvalReport r = eval_open_set(emb, test, opts);
    CHECK(r.protocol == "open_loo");
    CHECK(r.accuracy_pct == doctest::Approx(100.0));
    CHECK(r.n_test == 6);
    CHECK(r.warnings.empty());
    CHECK(r.r2.has_value());
}

TEST_CASE("open-set omits r2 when any target is missing") {
    const models::ModelBundle emb = identity_embedder();
    std::vector<features::Instance> test;
    for (int i = 0; i < 2; ++i) test.push_back(point_instance("a", 0.1 * i, 0.0, i));
    for (int i = 0; i < 2; ++i) test.push_back(point_instance("b", 5.0, 5.0 + 0.1 * i, i, false));
    const EvalReport r = eval_open_set(emb, test, OpenSetOptions{});
    CHECK_FALSE(r.r2.has_value());
}

TEST_CASE("degenerate embedder triggers a warning, not a crash") {
    models::ModelBundle emb = identity_embedder();
    emb.network.layers[0].weights.setZero();
    std::vector<features::Instance> test;
    for (int i = 0; i < 2; ++i) test.push_back(point_instance("a", 1.0 * i, 0.0, i));
    for (int i = 0; i < 2; ++i) test.push_back(point_instance("b", 5.0, 1.0 * i, i));
    const EvalReport r = eval_open_set(emb, test, OpenSetOptions{});
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0] == "DegenerateEmbedder");
}

TEST_CASE("open-set enroll-k uses the first k instances per speaker") {
    const models::ModelBundle emb = identity_embedder();
    std::vector<features::Instance> test;
    for (int i = 0; i < 4; ++i) test.push_back(point_instance("a", 0.1 * i, 0.0, i));
    for (int i = 0; i < 4; ++i) test.push_back(point_instance("b", 10.0, 0.1 * i, i));

    OpenSetOptions opts;
    opts.mode = OpenSetMode::kEnrollK;
    opts.enroll_k = 2;
    const EvalReport r = eval_open_set(emb, test, opts);
    CHECK(r.protocol == "open_enroll_k");
    CHECK(r.n_train == 4);
    CHECK(r.n_test == 4);
    CHECK(r.accuracy_pct == doctest::Approx(100.0));
}

TEST_CASE("open-set rejects speakers with too few instances") {
    const models::ModelBundle emb = identity_embedder();
    std::vector<features::Instance> test = {
        point_instance("a", 0.0, 0.0, 0),
        point_instance("a", 0.1, 0.0, 1),
        point_instance("lonely", 5.0, 5.0, 0),
    };
    CHECK_THROWS_WITH_AS(eval_open_set(emb, test, OpenSetOptions{}),
                         doctest::Contains("InsufficientInstances"), Error);
}

TEST_CASE("per-speaker majority aggregation") {
    const models::ModelBundle emb = identity_embedder();
    // Speaker a: tight cluster (all correct). Speaker b: one point sits in
    // a's cluster, two sit together far away: majority still correct.
    std::vector<features::Instance> test = {
        point_instance("a", 0.0, 0.0, 0),   point_instance("a", 0.1, 0.0, 1),
        point_instance("a", 0.2, 0.0, 2),   point_instance("b", 0.5, 0.0, 0),
        point_instance("b", 10.0, 0.0, 1),  point_instance("b", 10.1, 0.0, 2),
    };
    OpenSetOptions opts;
    opts.per_speaker_majority = true;
    const EvalReport r = eval_open_set(emb, test, opts);
    CHECK(r.accuracy_pct == doctest::Approx(100.0));
    CHECK(r.per_speaker_accuracy.at("b") < 100.0);
}

TEST_CASE("scalability sweep rows and aggregates") {
    const models::ModelBundle emb = identity_embedder();
    std::vector<features::Instance> pool;
    for (int s = 0; s < 3; ++s) {
        for (int i = 0; i < 3; ++i) {
            pool.push_back(point_instance("spk" + std::to_string(s), 10.0 * s + 0.1 * i, 0.0, i));
        }
    }
    const auto rows = scalability_sweep(emb, pool, {3, 2}, 2, 9);
    REQUIRE(rows.size() == 6);
    // Sorted by size, trials then aggregate.
    CHECK(rows[0].n_speakers == 2);
    CHECK(rows[0].trial == 0);
    CHECK(rows[2].trial == -1);
    CHECK(rows[3].n_speakers == 3);
    CHECK(rows[5].trial == -1);
    for (const auto& row : rows) {
        CHECK(row.accuracy_pct == doctest::Approx(100.0));
    }
    CHECK(rows[2].std_dev == doctest::Approx(0.0));

    CHECK_THROWS_WITH_AS(scalability_sweep(emb, pool, {4}, 1, 0),
                         doctest::Contains("PoolTooSmall"), Error);
}

TEST_CASE("sweep is deterministic in the seed") {
    const models::ModelBundle emb = identity_embedder();
    std::vector<features::Instance> pool;
    for (int s = 0; s < 4; ++s) {
        for (int i = 0; i < 2; ++i) {
            pool.push_back(point_instance("s" + std::to_string(s), 3.0 * s, 0.1 * i, i));
        }
    }
    const auto a = scalability_sweep(emb, pool, {2, 3}, 3, 77);
    const auto b = scalability_sweep(emb, pool, {2, 3}, 3, 77);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].n_speakers == b[i].n_speakers);
        CHECK(a[i].trial == b[i].trial);
        CHECK(a[i].accuracy_pct == b[i].accuracy_pct);
    }
}

TEST_CASE("report csv format") {
    EvalReport r;
    r.protocol = "open_loo";
    r.n_train = 0;
    r.n_test = 12;
    r.accuracy_pct = 91.666666;
    r.r2 = 0.54321;
    r.seed = 7;
    CHECK(report_csv(r) ==
          "protocol,n_train,n_test,accuracy_pct,r2,seed\n"
          "open_loo,0,12,91.67,0.5432,7\n");

    r.r2.reset();
    r.protocol = "closed";
    r.accuracy_pct = 100.0;
    CHECK(report_csv(r) ==
          "protocol,n_train,n_test,accuracy_pct,r2,seed\n"
          "closed,0,12,100.00,,7\n");
}

TEST_CASE("sweep csv format") {
    std::vector<SweepRow> rows = {
        {5, 0, 80.0, 0.0},
        {5, 1, 90.0, 0.0},
        {5, -1, 85.0, 5.0},
    };
    CHECK(sweep_csv(rows) ==
          "n_speakers,trial,accuracy_pct,std\n"
          "5,0,80.00,\n"
          "5,1,90.00,\n"
          "5,mean,85.00,5.00\n");
}
