#pragma once

#include "s2p/common.hpp"

#include <string>
#include <vector>

namespace s2p::audio {

/// Working sample rate of the whole pipeline. All feature extraction assumes
/// buffers at this rate.
inline constexpr int kCanonicalRate = 22050;

/// Mono (or interleaved multichannel, straight from load_wav) sample buffer.
/// Samples are amplitudes in [-1, 1].
struct AudioBuffer {
    std::vector<double> samples;
    int sample_rate = kCanonicalRate;

    double duration_s() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }
};

/// Result of reading a WAV file: samples are interleaved when channels > 1.
struct LoadedWav {
    AudioBuffer buffer;
    int channels = 1;
};

/// Read a RIFF/WAVE file. Accepts PCM-16/24/32 and IEEE float-32; integer
/// samples are scaled by their full-scale magnitude. Unknown chunks are
/// skipped.
/// Throws Error codes: MalformedContainer, UnsupportedEncoding, EmptyAudio.
LoadedWav load_wav(const std::string& path);

/// Write a mono buffer as PCM-16 WAV. Mainly used by tests and corpus tools.
void write_wav(const std::string& path, const AudioBuffer& buf);

/// Average interleaved channels into one. Throws ChannelMismatch when the
/// sample count is not divisible by the channel count.
AudioBuffer to_mono(const AudioBuffer& buf, int channels);

/// Band-limited rate conversion (windowed-sinc, Kaiser window, 64 taps,
/// cutoff 0.95 x Nyquist of the lower rate). Equal rates return the input
/// unchanged.
AudioBuffer resample(const AudioBuffer& buf, int target_rate);

/// load_wav + to_mono + resample to the canonical rate.
AudioBuffer load_canonical(const std::string& path);

}  // namespace s2p::audio
