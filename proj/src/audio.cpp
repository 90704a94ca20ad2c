#include "s2p/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace s2p::audio {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

/// Zeroth-order modified Bessel function, power series.
double bessel_i0(double x) {
    double sum = 1.0;
    double term = 1.0;
    const double half_x = x / 2.0;
    for (int k = 1; k < 64; ++k) {
        term *= (half_x / k) * (half_x / k);
        sum += term;
        if (term < 1e-16 * sum) break;
    }
    return sum;
}

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

}  // namespace

LoadedWav load_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("MalformedContainer", "cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw Error("MalformedContainer", "not a RIFF/WAVE file: " + path);
    }

    int format = 0, channels = 0, bits = 0, rate = 0;
    const unsigned char* data = nullptr;
    std::size_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t size = read_u32(bytes.data() + pos + 4);
        if (pos + 8 + size > bytes.size()) {
            throw Error("MalformedContainer", "chunk overruns file: " + path);
        }
        const unsigned char* body = bytes.data() + pos + 8;
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (size < 16) throw Error("MalformedContainer", "short fmt chunk");
            format = read_u16(body);
            channels = read_u16(body + 2);
            rate = static_cast<int>(read_u32(body + 4));
            bits = read_u16(body + 14);
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = body;
            data_len = size;
        }
        pos += 8 + size + (size & 1);  // chunks are word-aligned
    }

    if (format == 0 || data == nullptr) {
        throw Error("MalformedContainer", "missing fmt or data chunk: " + path);
    }
    if (channels <= 0 || rate <= 0) {
        throw Error("MalformedContainer", "bad fmt fields: " + path);
    }
    const bool pcm = format == 1 && (bits == 16 || bits == 24 || bits == 32);
    const bool ieee = format == 3 && bits == 32;
    if (!pcm && !ieee) {
        throw Error("UnsupportedEncoding",
                    "format tag " + std::to_string(format) + ", " + std::to_string(bits) + " bits");
    }

    const std::size_t bytes_per_sample = static_cast<std::size_t>(bits) / 8;
    const std::size_t n = data_len / bytes_per_sample;
    if (n == 0) throw Error("EmptyAudio", "no samples in " + path);

    LoadedWav out;
    out.channels = channels;
    out.buffer.sample_rate = rate;
    out.buffer.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char* s = data + i * bytes_per_sample;
        double v = 0.0;
        if (ieee) {
            float f;
            std::memcpy(&f, s, 4);
            v = f;
        } else if (bits == 16) {
            v = static_cast<std::int16_t>(read_u16(s)) / 32768.0;
        } else if (bits == 24) {
            std::int32_t raw = s[0] | (s[1] << 8) | (s[2] << 16);
            if (raw & 0x800000) raw |= ~0xFFFFFF;
            v = raw / 8388608.0;
        } else {
            v = static_cast<std::int32_t>(read_u32(s)) / 2147483648.0;
        }
        out.buffer.samples[i] = std::clamp(v, -1.0, 1.0);
    }
    return out;
}

void write_wav(const std::string& path, const AudioBuffer& buf) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("IoError", "cannot write " + path);

    const std::uint32_t data_size = static_cast<std::uint32_t>(buf.samples.size() * 2);
    auto put_u32 = [&](std::uint32_t v) {
        char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 24)};
        out.write(b, 4);
    };
    auto put_u16 = [&](std::uint16_t v) {
        char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
        out.write(b, 2);
    };

    out.write("RIFF", 4);
    put_u32(36 + data_size);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(16);
    put_u16(1);  // PCM
    put_u16(1);  // mono
    put_u32(static_cast<std::uint32_t>(buf.sample_rate));
    put_u32(static_cast<std::uint32_t>(buf.sample_rate * 2));
    put_u16(2);
    put_u16(16);
    out.write("data", 4);
    put_u32(data_size);
    for (double v : buf.samples) {
        const double clamped = std::clamp(v, -1.0, 1.0);
        // Same 1/32768 full scale as the reader so round trips stay within
        // half an LSB.
        const auto q = static_cast<std::int32_t>(
            std::clamp(std::lrint(clamped * 32768.0), -32768L, 32767L));
        put_u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
}

AudioBuffer to_mono(const AudioBuffer& buf, int channels) {
    if (channels <= 0 || buf.samples.size() % static_cast<std::size_t>(channels) != 0) {
        throw Error("ChannelMismatch", "sample count " + std::to_string(buf.samples.size()) +
                                           " not divisible by " + std::to_string(channels));
    }
    if (channels == 1) return buf;
    AudioBuffer out;
    out.sample_rate = buf.sample_rate;
    const std::size_t frames = buf.samples.size() / channels;
    out.samples.resize(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        double sum = 0.0;
        for (int c = 0; c < channels; ++c) sum += buf.samples[f * channels + c];
        out.samples[f] = sum / channels;
    }
    return out;
}

AudioBuffer resample(const AudioBuffer& buf, int target_rate) {
    if (target_rate <= 0) throw Error("BadRate", "target rate must be positive");
    if (target_rate == buf.sample_rate) return buf;

    const double ratio = static_cast<double>(target_rate) / buf.sample_rate;
    // Cutoff at 0.95 x Nyquist of the lower rate, in cycles per input sample.
    const double cutoff = 0.475 * std::min(1.0, ratio);
    constexpr int kHalfTaps = 32;
    constexpr double kBeta = 8.0;
    const double i0_beta = bessel_i0(kBeta);

    const auto n_in = static_cast<long long>(buf.samples.size());
    const auto n_out = static_cast<long long>(std::llround(n_in * ratio));

    AudioBuffer out;
    out.sample_rate = target_rate;
    out.samples.resize(static_cast<std::size_t>(n_out));
    for (long long n = 0; n < n_out; ++n) {
        const double t = n / ratio;
        const auto center = static_cast<long long>(std::floor(t));
        double acc = 0.0;
        for (long long k = center - kHalfTaps + 1; k <= center + kHalfTaps; ++k) {
            if (k < 0 || k >= n_in) continue;
            const double x = t - static_cast<double>(k);
            const double w_arg = x / kHalfTaps;
            if (std::abs(w_arg) >= 1.0) continue;
            const double window = bessel_i0(kBeta * std::sqrt(1.0 - w_arg * w_arg)) / i0_beta;
            acc += buf.samples[static_cast<std::size_t>(k)] * 2.0 * cutoff *
                   sinc(2.0 * cutoff * x) * window;
        }
        out.samples[static_cast<std::size_t>(n)] = acc;
    }
    return out;
}

AudioBuffer load_canonical(const std::string& path) {
    LoadedWav wav = load_wav(path);
    AudioBuffer mono = to_mono(wav.buffer, wav.channels);
    return resample(mono, kCanonicalRate);
}

}  // namespace s2p::audio
