#include "s2p/features.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace s2p::features {

namespace {

constexpr double kAmin = 1e-10;
constexpr double kTopDb = 80.0;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 FFT.
void fft(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

/// Slaney mel scale: linear below 1 kHz, logarithmic above.
double hz_to_mel(double hz) {
    constexpr double kBreak = 1000.0;
    constexpr double kLinStep = 200.0 / 3.0;
    if (hz < kBreak) return hz / kLinStep;
    const double log_step = std::log(6.4) / 27.0;
    return kBreak / kLinStep + std::log(hz / kBreak) / log_step;
}

double mel_to_hz(double mel) {
    constexpr double kBreak = 1000.0;
    constexpr double kLinStep = 200.0 / 3.0;
    const double break_mel = kBreak / kLinStep;
    if (mel < break_mel) return mel * kLinStep;
    const double log_step = std::log(6.4) / 27.0;
    return kBreak * std::exp(log_step * (mel - break_mel));
}

/// Mel break frequencies: n_mels + 2 points from fmin to fmax.
std::vector<double> mel_break_points(const MfccConfig& cfg) {
    const double mel_lo = hz_to_mel(cfg.fmin);
    const double mel_hi = hz_to_mel(cfg.fmax);
    std::vector<double> hz(cfg.n_mels + 2);
    for (int i = 0; i < cfg.n_mels + 2; ++i) {
        hz[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg.n_mels + 1));
    }
    return hz;
}

/// Reflect-padded sample lookup: pad width n_fft/2 on each side.
double padded_sample(const std::vector<double>& s, long long idx) {
    const auto n = static_cast<long long>(s.size());
    if (n == 1) return s[0];
    if (idx < 0) idx = -idx;
    if (idx >= n) idx = 2 * (n - 1) - idx;
    // Short signals can reflect more than once.
    while (idx < 0 || idx >= n) {
        if (idx < 0) idx = -idx;
        if (idx >= n) idx = 2 * (n - 1) - idx;
    }
    return s[static_cast<std::size_t>(idx)];
}

}  // namespace

void MfccConfig::validate() const {
    if (!is_power_of_two(n_fft)) throw Error("BadConfig", "n_fft must be a power of two");
    if (hop <= 0 || hop > n_fft) throw Error("BadConfig", "hop must be in (0, n_fft]");
    if (n_mfcc <= 0 || n_mfcc > n_mels) throw Error("BadConfig", "n_mfcc must be in (0, n_mels]");
    if (sample_rate <= 0) throw Error("BadConfig", "sample_rate must be positive");
    if (!(fmin < fmax) || fmax > sample_rate / 2.0) {
        throw Error("BadConfig", "need fmin < fmax <= sample_rate/2");
    }
}

Mat stft_power(const std::vector<double>& samples, const MfccConfig& cfg) {
    cfg.validate();
    if (samples.empty()) throw Error("EmptySignal", "cannot transform an empty signal");

    const int n_fft = cfg.n_fft;
    const int n_bins = n_fft / 2 + 1;
    const auto n_frames = static_cast<int>(1 + samples.size() / static_cast<std::size_t>(cfg.hop));

    // Periodic Hann.
    std::vector<double> window(n_fft);
    for (int i = 0; i < n_fft; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / n_fft));
    }

    Mat out(n_frames, n_bins);
    std::vector<std::complex<double>> frame(n_fft);
    for (int t = 0; t < n_frames; ++t) {
        const long long start = static_cast<long long>(t) * cfg.hop - n_fft / 2;
        for (int i = 0; i < n_fft; ++i) {
            frame[i] = padded_sample(samples, start + i) * window[i];
        }
        fft(frame);
        for (int k = 0; k < n_bins; ++k) out(t, k) = std::norm(frame[k]);
    }
    return out;
}

std::vector<double> mel_center_frequencies(const MfccConfig& cfg) {
    const auto hz = mel_break_points(cfg);
    return {hz.begin() + 1, hz.end() - 1};
}

Mat mel_filterbank(const MfccConfig& cfg) {
    cfg.validate();
    const int n_bins = cfg.n_fft / 2 + 1;
    const auto hz = mel_break_points(cfg);

    Mat bank = Mat::Zero(cfg.n_mels, n_bins);
    for (int m = 0; m < cfg.n_mels; ++m) {
        const double lo = hz[m], center = hz[m + 1], hi = hz[m + 2];
        const double norm = 2.0 / (hi - lo);  // Slaney area normalization
        for (int k = 0; k < n_bins; ++k) {
            const double f = static_cast<double>(k) * cfg.sample_rate / cfg.n_fft;
            const double up = (f - lo) / (center - lo);
            const double down = (hi - f) / (hi - center);
            bank(m, k) = std::max(0.0, std::min(up, down)) * norm;
        }
    }
    return bank;
}

Mat power_to_db(const Mat& power) {
    if ((power.array() < 0.0).any()) throw Error("NegativePower", "power entries must be >= 0");
    Mat db = 10.0 * power.array().max(kAmin).log10();
    const double floor = db.maxCoeff() - kTopDb;
    return db.array().max(floor);
}

MfccMatrix mfcc(const audio::AudioBuffer& buf, const MfccConfig& cfg) {
    const Mat power = stft_power(buf.samples, cfg);
    const Mat bank = mel_filterbank(cfg);
    const Mat mel_db = power_to_db(power * bank.transpose());  // frames x n_mels

    // Orthonormal DCT-II over the mel axis, first n_mfcc rows.
    const int n = cfg.n_mels;
    Mat dct(cfg.n_mfcc, n);
    for (int i = 0; i < cfg.n_mfcc; ++i) {
        const double scale = std::sqrt((i == 0 ? 1.0 : 2.0) / n);
        for (int k = 0; k < n; ++k) {
            dct(i, k) = scale * std::cos(std::numbers::pi * (k + 0.5) * i / n);
        }
    }

    MfccMatrix out;
    out.values = mel_db * dct.transpose();  // frames x n_mfcc
    out.frame_rate = static_cast<double>(cfg.sample_rate) / cfg.hop;
    return out;
}

std::vector<Instance> extract_instances(const audio::AudioBuffer& buf, const MfccConfig& cfg) {
    std::vector<Instance> out;
    const auto whole_seconds = static_cast<int>(buf.samples.size() / static_cast<std::size_t>(cfg.sample_rate));
    if (whole_seconds < kWindowSeconds) return out;

    const auto sr = static_cast<std::size_t>(cfg.sample_rate);
    for (int k = 0; k + kWindowSeconds <= whole_seconds; ++k) {
        audio::AudioBuffer slice;
        slice.sample_rate = cfg.sample_rate;
        slice.samples.assign(buf.samples.begin() + static_cast<long>(k * sr),
                             buf.samples.begin() + static_cast<long>((k + kWindowSeconds) * sr));
        const MfccMatrix m = mfcc(slice, cfg);

        Instance inst;
        inst.source_offset_s = k;
        inst.input.resize(m.values.rows() * m.values.cols());
        for (int t = 0; t < m.values.rows(); ++t) {
            inst.input.segment(t * m.values.cols(), m.values.cols()) = m.values.row(t);
        }
        out.push_back(std::move(inst));
    }
    return out;
}

Vec extract_anchor_target(const audio::AudioBuffer& buf, const MfccConfig& cfg) {
    const auto sr = static_cast<std::size_t>(cfg.sample_rate);
    if (buf.samples.size() < sr) {
        throw Error("TooShort", "anchor capture shorter than one second");
    }
    const std::size_t start = (buf.samples.size() - sr) / 2;
    audio::AudioBuffer slice;
    slice.sample_rate = cfg.sample_rate;
    slice.samples.assign(buf.samples.begin() + static_cast<long>(start),
                         buf.samples.begin() + static_cast<long>(start + sr));
    const MfccMatrix m = mfcc(slice, cfg);

    Vec target(m.values.rows() * m.values.cols());
    for (int t = 0; t < m.values.rows(); ++t) {
        target.segment(t * m.values.cols(), m.values.cols()) = m.values.row(t);
    }
    return target;
}

}  // namespace s2p::features
