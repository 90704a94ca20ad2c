#pragma once

#include "s2p/audio.hpp"
#include "s2p/common.hpp"
#include "s2p/features.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace s2p::testing {

inline audio::AudioBuffer sine(double freq_hz, double seconds, double amplitude = 1.0,
                               int rate = audio::kCanonicalRate) {
    audio::AudioBuffer buf;
    buf.sample_rate = rate;
    const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
    buf.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        buf.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * i / rate);
    }
    return buf;
}

inline audio::AudioBuffer white_noise(double seconds, std::uint64_t seed, double amplitude = 0.5,
                                      int rate = audio::kCanonicalRate) {
    audio::AudioBuffer buf;
    buf.sample_rate = rate;
    Rng rng(seed);
    const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
    buf.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) buf.samples[i] = amplitude * rng.uniform(-1.0, 1.0);
    return buf;
}

inline audio::AudioBuffer chirp(double f0, double f1, double seconds, double amplitude = 0.5,
                                int rate = audio::kCanonicalRate) {
    audio::AudioBuffer buf;
    buf.sample_rate = rate;
    const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
    buf.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate;
        const double phase = 2.0 * std::numbers::pi * (f0 * t + 0.5 * (f1 - f0) / seconds * t * t);
        buf.samples[i] = amplitude * std::sin(phase);
    }
    return buf;
}

/// Synthetic "speaker": a harmonic stack whose fundamental and resonance
/// profile are speaker-specific. Readings add slow vibrato and a little
/// noise so instances differ; anchors are steady.
struct SyntheticSpeaker {
    std::string id;
    double fundamental_hz;
    double resonance_hz;
    double resonance_width_hz;
};

inline SyntheticSpeaker make_speaker(int index) {
    SyntheticSpeaker s;
    s.id = "spk" + std::string(index < 10 ? "0" : "") + std::to_string(index);
    s.fundamental_hz = 95.0 + 17.0 * index;
    s.resonance_hz = 500.0 + 230.0 * (index % 7);
    s.resonance_width_hz = 250.0 + 40.0 * (index % 3);
    return s;
}

inline audio::AudioBuffer speaker_audio(const SyntheticSpeaker& s, double seconds,
                                        std::uint64_t seed, bool steady) {
    audio::AudioBuffer buf;
    buf.sample_rate = audio::kCanonicalRate;
    const auto n = static_cast<std::size_t>(std::llround(seconds * buf.sample_rate));
    buf.samples.assign(n, 0.0);

    Rng rng(seed);
    const int n_harmonics = 20;
    std::vector<double> phases(n_harmonics);
    for (auto& p : phases) p = rng.uniform(0.0, 2.0 * std::numbers::pi);

    double peak = 0.0;
    for (int h = 1; h <= n_harmonics; ++h) {
        const double freq = h * s.fundamental_hz;
        if (freq > buf.sample_rate / 2.0 * 0.9) break;
        const double rel = (freq - s.resonance_hz) / s.resonance_width_hz;
        const double amp = std::exp(-0.5 * rel * rel) + 0.15 / h;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / buf.sample_rate;
            const double vibrato = steady ? 0.0 : 0.008 * std::sin(2.0 * std::numbers::pi * 0.7 * t + phases[0]);
            buf.samples[i] +=
                amp * std::sin(2.0 * std::numbers::pi * freq * (1.0 + vibrato) * t + phases[h - 1]);
        }
        peak += amp;
    }
    const double noise = steady ? 0.0 : 0.01;
    for (std::size_t i = 0; i < n; ++i) {
        buf.samples[i] = buf.samples[i] / (peak * 1.2);
        if (noise > 0.0) buf.samples[i] += noise * rng.uniform(-1.0, 1.0);
    }
    return buf;
}

/// Instances + anchor targets for one synthetic speaker, without touching
/// the filesystem.
inline std::vector<features::Instance> synthetic_instances(const SyntheticSpeaker& s,
                                                           double reading_seconds,
                                                           std::uint64_t seed) {
    const features::MfccConfig cfg;
    auto instances = features::extract_instances(speaker_audio(s, reading_seconds, seed, false), cfg);
    const Vec target =
        features::extract_anchor_target(speaker_audio(s, 3.0, seed + 1, true), cfg);
    for (auto& inst : instances) {
        inst.speaker_id = s.id;
        inst.target = target;
    }
    return instances;
}

}  // namespace s2p::testing
