#include "s2p/features.hpp"

#include "helpers.hpp"
#include "mfcc_reference.hpp"

#include <doctest.h>

#include <cmath>

using namespace s2p;
using namespace s2p::features;

namespace {
const MfccConfig kCfg;
}

TEST_CASE("stft_power of silence is all zeros") {
    const std::vector<double> zeros(22050, 0.0);
    const Mat power = stft_power(zeros, kCfg);
    CHECK(power.maxCoeff() == 0.0);
    CHECK(power.minCoeff() == 0.0);
}

TEST_CASE("stft_power interior DC bin of a constant signal is (sum of window)^2") {
    const std::vector<double> ones(22050, 1.0);
    const Mat power = stft_power(ones, kCfg);
    // Periodic Hann of length 2048 sums to 1024.
    const int mid = static_cast<int>(power.rows() / 2);
    CHECK(power(mid, 0) == doctest::Approx(1024.0 * 1024.0).epsilon(1e-9));
}

TEST_CASE("stft_power frame count: 5 s -> 216 frames") {
    const std::vector<double> samples(110250, 0.1);
    CHECK(stft_power(samples, kCfg).rows() == 216);
}

TEST_CASE("stft_power rejects empty input") {
    CHECK_THROWS_WITH_AS(stft_power({}, kCfg), doctest::Contains("EmptySignal"), Error);
}

TEST_CASE("mel filterbank shape and positivity") {
    const Mat bank = mel_filterbank(kCfg);
    CHECK(bank.rows() == 128);
    CHECK(bank.cols() == 1025);
    CHECK(bank.minCoeff() >= 0.0);
    for (int m = 0; m < bank.rows(); ++m) {
        CHECK(bank.row(m).maxCoeff() > 0.0);
    }
}

TEST_CASE("mel filter centers strictly increase") {
    const auto centers = mel_center_frequencies(kCfg);
    for (std::size_t i = 1; i < centers.size(); ++i) {
        CHECK(centers[i] > centers[i - 1]);
    }
}

TEST_CASE("power_to_db reference points") {
    Mat s(1, 3);
    s << 1.0, 0.5, 0.25;
    const Mat db = power_to_db(s);
    CHECK(db(0, 0) == doctest::Approx(0.0));

    Mat decade(1, 2);
    decade << 10.0, 1.0;
    CHECK(power_to_db(decade)(0, 0) == doctest::Approx(10.0));

    // Zero power floors at (max - 80) when the max maps to 0 dB.
    Mat floored(1, 2);
    floored << 1.0, 0.0;
    CHECK(power_to_db(floored)(0, 1) == doctest::Approx(-80.0));
}

TEST_CASE("mfcc of silence concentrates in coefficient 0") {
    audio::AudioBuffer silence;
    silence.samples.assign(22050, 0.0);
    const MfccMatrix m = mfcc(silence, kCfg);
    for (int t = 0; t < m.values.rows(); ++t) {
        for (int c = 1; c < m.values.cols(); ++c) {
            CHECK(std::abs(m.values(t, c)) < 1e-9);
        }
    }
}

TEST_CASE("mfcc of 1 s at 22050 Hz has 44 frames") {
    const auto buf = testing::sine(440.0, 1.0, 0.5);
    const MfccMatrix m = mfcc(buf, kCfg);
    CHECK(m.values.rows() == 44);
    CHECK(m.values.cols() == 13);
}

TEST_CASE("mfcc matches the independent stage-by-stage reference") {
    const auto buf = testing::sine(440.0, 1.0, 0.5);
    const MfccMatrix m = mfcc(buf, kCfg);
    const Mat ref = testing::reference::ref_mfcc(buf, kCfg);
    REQUIRE(m.values.rows() == ref.rows());
    CHECK((m.values - ref).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("mfcc is deterministic") {
    const auto buf = testing::white_noise(1.0, 3);
    const MfccMatrix a = mfcc(buf, kCfg);
    const MfccMatrix b = mfcc(buf, kCfg);
    CHECK(a.values == b.values);
}

TEST_CASE("shape law: frames = 1 + floor(n / hop)") {
    Rng rng(11);
    for (int i = 0; i < 6; ++i) {
        const auto n = 1000 + rng.index(40000);
        std::vector<double> samples(n);
        for (auto& s : samples) s = rng.uniform(-0.5, 0.5);
        audio::AudioBuffer buf;
        buf.samples = samples;
        CHECK(mfcc(buf, kCfg).values.rows() ==
              static_cast<long>(1 + n / static_cast<std::size_t>(kCfg.hop)));
    }
}

TEST_CASE("amplitude scaling shifts only coefficient 0") {
    auto buf = testing::sine(700.0, 1.0, 0.8);
    const MfccMatrix full = mfcc(buf, kCfg);
    for (auto& s : buf.samples) s *= 0.5;
    const MfccMatrix half = mfcc(buf, kCfg);

    for (int t = 0; t < full.values.rows(); ++t) {
        for (int c = 1; c < full.values.cols(); ++c) {
            CHECK(std::abs(full.values(t, c) - half.values(t, c)) < 1e-6);
        }
        CHECK(std::abs(full.values(t, 0) - half.values(t, 0)) > 1.0);
    }
}

TEST_CASE("extract_instances window arithmetic") {
    const MfccConfig cfg;
    CHECK(extract_instances(testing::sine(300.0, 7.0, 0.5), cfg).size() == 3);
    CHECK(extract_instances(testing::sine(300.0, 5.0, 0.5), cfg).size() == 1);
    CHECK(extract_instances(testing::sine(300.0, 4.9, 0.5), cfg).empty());

    const auto inst7 = extract_instances(testing::sine(300.0, 7.0, 0.5), cfg);
    CHECK(inst7[0].source_offset_s == 0);
    CHECK(inst7[1].source_offset_s == 1);
    CHECK(inst7[2].source_offset_s == 2);
    CHECK(inst7[0].input.size() == kInstanceDim);
}

TEST_CASE("extract_instances over a 42 s reading gives 38 instances") {
    CHECK(extract_instances(testing::white_noise(42.0, 5), kCfg).size() == 38);
}

TEST_CASE("consecutive instances overlap by exactly 4 s of source audio") {
    const auto instances = extract_instances(testing::white_noise(8.0, 9), kCfg);
    REQUIRE(instances.size() == 4);
    for (std::size_t i = 1; i < instances.size(); ++i) {
        CHECK(instances[i].source_offset_s - instances[i - 1].source_offset_s == 1);
    }
}

TEST_CASE("extract_anchor_target centers and sizes correctly") {
    const auto three_s = testing::sine(200.0, 3.0, 0.5);
    const Vec target = extract_anchor_target(three_s, kCfg);
    CHECK(target.size() == kAnchorDim);

    // The centered second of a 3 s capture is samples [22050, 44100).
    audio::AudioBuffer middle;
    middle.sample_rate = 22050;
    middle.samples.assign(three_s.samples.begin() + 22050, three_s.samples.begin() + 44100);
    const MfccMatrix m = mfcc(middle, kCfg);
    Vec flattened(m.values.rows() * m.values.cols());
    for (int t = 0; t < m.values.rows(); ++t) {
        flattened.segment(t * 13, 13) = m.values.row(t);
    }
    CHECK((target - flattened).cwiseAbs().maxCoeff() == 0.0);

    const auto one_s = testing::sine(200.0, 1.0, 0.5);
    CHECK(extract_anchor_target(one_s, kCfg).size() == kAnchorDim);

    audio::AudioBuffer short_buf;
    short_buf.samples.assign(1000, 0.1);
    CHECK_THROWS_WITH_AS(extract_anchor_target(short_buf, kCfg), doctest::Contains("TooShort"),
                         Error);
}
