#pragma once

#include "s2p/audio.hpp"
#include "s2p/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace s2p::features {

/// STFT/mel/cepstrum parameters. Defaults give 13 coefficients at ~43 frames
/// per second from 22,050 Hz audio.
struct MfccConfig {
    int n_fft = 2048;
    int hop = 512;
    int n_mels = 128;
    int n_mfcc = 13;
    int sample_rate = audio::kCanonicalRate;
    double fmin = 0.0;
    double fmax = audio::kCanonicalRate / 2.0;

    void validate() const;
};

/// Frames x n_mfcc coefficient matrix.
struct MfccMatrix {
    Mat values;  // rows = frames, cols = coefficients
    double frame_rate = 0.0;
};

/// One 5-second training/query window: 216 frames x 13 coefficients
/// flattened frame-major, optionally paired with the speaker's 572-value
/// anchor reconstruction target.
struct Instance {
    Vec input;                   // length 2808 under the default config
    std::optional<Vec> target;   // length 572 when present
    std::string speaker_id;
    int source_offset_s = 0;
};

inline constexpr int kInstanceFrames = 216;
inline constexpr int kAnchorFrames = 44;
inline constexpr int kInstanceDim = kInstanceFrames * 13;  // 2808
inline constexpr int kAnchorDim = kAnchorFrames * 13;      // 572
inline constexpr int kWindowSeconds = 5;

/// Power spectrogram: reflect-padded, periodic-Hann-windowed frames,
/// |DFT bin|^2. Rows = 1 + floor(n/hop) frames, cols = n_fft/2 + 1 bins.
Mat stft_power(const std::vector<double>& samples, const MfccConfig& cfg);

/// Triangular filters on the Slaney mel scale with area normalization.
/// Shape n_mels x (n_fft/2 + 1).
Mat mel_filterbank(const MfccConfig& cfg);

/// Center frequencies (Hz) of the mel filters, one per row of the bank.
std::vector<double> mel_center_frequencies(const MfccConfig& cfg);

/// 10*log10(max(S, 1e-10)), floored at (global max - 80) dB.
Mat power_to_db(const Mat& power);

/// Full pipeline: stft_power -> mel projection -> power_to_db ->
/// orthonormal DCT-II over the mel axis -> first n_mfcc coefficients.
MfccMatrix mfcc(const audio::AudioBuffer& buf, const MfccConfig& cfg);

/// Slide a 5 s window one second at a time and run mfcc on each slice
/// independently. Buffers shorter than 5 s yield an empty list.
std::vector<Instance> extract_instances(const audio::AudioBuffer& buf, const MfccConfig& cfg);

/// MFCCs of the centered one-second slice, flattened to 572 values.
/// Throws TooShort below 1 s.
Vec extract_anchor_target(const audio::AudioBuffer& buf, const MfccConfig& cfg);

}  // namespace s2p::features
