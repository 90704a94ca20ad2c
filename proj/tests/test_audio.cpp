#include "s2p/audio.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

using namespace s2p;
using namespace s2p::audio;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

// Raw WAV writer with exact control over the sample codes.
void write_pcm16_raw(const std::string& path, const std::vector<std::int16_t>& samples,
                     int rate = 22050, int channels = 1) {
    std::ofstream out(path, std::ios::binary);
    auto u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
    const auto data_size = static_cast<std::uint32_t>(samples.size() * 2);
    out.write("RIFF", 4);
    u32(36 + data_size);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    u32(16);
    u16(1);
    u16(static_cast<std::uint16_t>(channels));
    u32(static_cast<std::uint32_t>(rate));
    u32(static_cast<std::uint32_t>(rate * channels * 2));
    u16(static_cast<std::uint16_t>(channels * 2));
    u16(16);
    out.write("data", 4);
    u32(data_size);
    for (std::int16_t s : samples) out.write(reinterpret_cast<const char*>(&s), 2);
}

}  // namespace

TEST_CASE("load_wav scales PCM-16 by full-scale magnitude") {
    const auto path = temp_path("s2p_pcm16_scale.wav");
    write_pcm16_raw(path, {16384});
    const auto wav = load_wav(path);
    REQUIRE(wav.buffer.samples.size() == 1);
    CHECK(wav.buffer.samples[0] == doctest::Approx(0.5));

    write_pcm16_raw(path, {-32768});
    CHECK(load_wav(path).buffer.samples[0] == doctest::Approx(-1.0));
    std::remove(path.c_str());
}

TEST_CASE("load_wav sample count matches duration x rate") {
    const auto path = temp_path("s2p_3s.wav");
    write_wav(path, testing::sine(440.0, 3.0, 0.5));
    const auto wav = load_wav(path);
    CHECK(wav.buffer.samples.size() == 66150);
    CHECK(wav.buffer.sample_rate == 22050);
    CHECK(wav.channels == 1);
    std::remove(path.c_str());
}

TEST_CASE("load_wav rejects bad containers and encodings") {
    const auto path = temp_path("s2p_bad.wav");
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOTARIFFFILE";
    }
    CHECK_THROWS_WITH_AS(load_wav(path), doctest::Contains("MalformedContainer"), Error);

    {
        std::ofstream out(path, std::ios::binary);
        auto u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
        auto u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
        out.write("RIFF", 4);
        u32(36);
        out.write("WAVE", 4);
        out.write("fmt ", 4);
        u32(16);
        u16(2);  // ADPCM
        u16(1);
        u32(22050);
        u32(22050);
        u16(1);
        u16(4);
        out.write("data", 4);
        u32(4);
        u32(0);
    }
    CHECK_THROWS_WITH_AS(load_wav(path), doctest::Contains("UnsupportedEncoding"), Error);

    write_pcm16_raw(path, {});
    CHECK_THROWS_WITH_AS(load_wav(path), doctest::Contains("EmptyAudio"), Error);
    std::remove(path.c_str());
}

TEST_CASE("load_wav skips unknown chunks") {
    const auto path = temp_path("s2p_chunks.wav");
    {
        std::ofstream out(path, std::ios::binary);
        auto u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
        auto u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
        out.write("RIFF", 4);
        u32(52);
        out.write("WAVE", 4);
        out.write("LIST", 4);  // unknown chunk before fmt
        u32(4);
        out.write("info", 4);
        out.write("fmt ", 4);
        u32(16);
        u16(1);
        u16(1);
        u32(22050);
        u32(44100);
        u16(2);
        u16(16);
        out.write("data", 4);
        u32(2);
        u16(static_cast<std::uint16_t>(std::int16_t{16384}));
    }
    CHECK(load_wav(path).buffer.samples[0] == doctest::Approx(0.5));
    std::remove(path.c_str());
}

TEST_CASE("to_mono averages channels") {
    AudioBuffer stereo;
    stereo.samples = {0.2, 0.4};
    CHECK(to_mono(stereo, 2).samples[0] == doctest::Approx(0.3));

    AudioBuffer cancel;
    cancel.samples = {1.0, -1.0};
    CHECK(to_mono(cancel, 2).samples[0] == doctest::Approx(0.0));

    AudioBuffer mono;
    mono.samples = {0.1, 0.2, 0.3};
    CHECK(to_mono(mono, 1).samples == mono.samples);
    // idempotent on mono input
    CHECK(to_mono(to_mono(mono, 1), 1).samples == mono.samples);

    AudioBuffer odd;
    odd.samples = {0.1, 0.2, 0.3};
    CHECK_THROWS_WITH_AS(to_mono(odd, 2), doctest::Contains("ChannelMismatch"), Error);
}

TEST_CASE("resample halves sample count from 44100 to 22050") {
    auto buf = testing::sine(1000.0, 1.0, 0.5, 44100);
    REQUIRE(buf.samples.size() == 44100);
    const auto out = resample(buf, 22050);
    CHECK(std::abs(static_cast<long>(out.samples.size()) - 22050) <= 1);
    CHECK(out.sample_rate == 22050);
}

TEST_CASE("resample at equal rates is the identity") {
    const auto buf = testing::sine(440.0, 0.5, 0.7);
    const auto out = resample(buf, buf.sample_rate);
    CHECK(out.samples == buf.samples);
}

TEST_CASE("resampled 1 kHz sine correlates with the analytic sine") {
    const auto in = testing::sine(1000.0, 1.0, 0.8, 44100);
    const auto out = resample(in, 22050);
    const auto ideal = testing::sine(1000.0, 1.0, 0.8, 22050);

    // Interior samples only: skip the filter's edge transients.
    const std::size_t lo = 100;
    const std::size_t hi = std::min(out.samples.size(), ideal.samples.size()) - 100;
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
        dot += out.samples[i] * ideal.samples[i];
        na += out.samples[i] * out.samples[i];
        nb += ideal.samples[i] * ideal.samples[i];
    }
    CHECK(dot / std::sqrt(na * nb) >= 0.999);
}

TEST_CASE("resample preserves band-limited tone energy within 1%") {
    const auto in = testing::sine(2000.0, 1.0, 0.5, 44100);
    const auto out = resample(in, 22050);

    auto interior_energy = [](const AudioBuffer& b) {
        double e = 0.0;
        for (std::size_t i = 100; i + 100 < b.samples.size(); ++i) e += b.samples[i] * b.samples[i];
        return e / static_cast<double>(b.samples.size() - 200);
    };
    const double ratio = interior_energy(out) / interior_energy(in);
    CHECK(ratio == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("PCM-16 write/read round trip is exact to one LSB") {
    const auto path = temp_path("s2p_roundtrip.wav");
    const auto buf = testing::white_noise(0.2, 7, 0.9);
    write_wav(path, buf);
    const auto back = load_wav(path);
    REQUIRE(back.buffer.samples.size() == buf.samples.size());
    double max_err = 0.0;
    for (std::size_t i = 0; i < buf.samples.size(); ++i) {
        max_err = std::max(max_err, std::abs(back.buffer.samples[i] - buf.samples[i]));
    }
    CHECK(max_err <= std::pow(2.0, -15.0));
    std::remove(path.c_str());
}
