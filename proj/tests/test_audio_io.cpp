#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "roadsound/audio_io.hpp"
#include "roadsound/errors.hpp"
#include "roadsound/rng.hpp"

using namespace roadsound;

namespace {

std::filesystem::path scratch_dir() {
    const auto dir = std::filesystem::path("scratch_audio_io");
    std::filesystem::create_directories(dir);
    return dir;
}

void append_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    for (int i = 0; i < 4; ++i) v.push_back(static_cast<std::uint8_t>((x >> (8 * i)) & 0xFF));
}

void append_u16(std::vector<std::uint8_t>& v, std::uint16_t x) {
    v.push_back(static_cast<std::uint8_t>(x & 0xFF));
    v.push_back(static_cast<std::uint8_t>(x >> 8));
}

void append_tag(std::vector<std::uint8_t>& v, const char* tag) {
    v.insert(v.end(), tag, tag + 4);
}

// Minimal RIFF/WAVE writer used to craft inputs independently of write_wav.
std::vector<std::uint8_t> build_wav(std::uint16_t format, std::uint16_t channels, std::uint32_t rate,
                                    std::uint16_t bits, const std::vector<std::uint8_t>& payload) {
    std::vector<std::uint8_t> v;
    append_tag(v, "RIFF");
    append_u32(v, 4 + 8 + 16 + 8 + static_cast<std::uint32_t>(payload.size()));
    append_tag(v, "WAVE");
    append_tag(v, "fmt ");
    append_u32(v, 16);
    append_u16(v, format);
    append_u16(v, channels);
    append_u32(v, rate);
    append_u32(v, rate * channels * bits / 8);
    append_u16(v, static_cast<std::uint16_t>(channels * bits / 8));
    append_u16(v, bits);
    append_tag(v, "data");
    append_u32(v, static_cast<std::uint32_t>(payload.size()));
    v.insert(v.end(), payload.begin(), payload.end());
    return v;
}

std::string write_bytes(const std::string& name, const std::vector<std::uint8_t>& bytes) {
    const auto path = scratch_dir() / name;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    return path.string();
}

std::vector<std::uint8_t> pcm16_payload(const std::vector<std::int16_t>& samples) {
    std::vector<std::uint8_t> payload;
    for (std::int16_t s : samples) {
        payload.push_back(static_cast<std::uint8_t>(static_cast<std::uint16_t>(s) & 0xFF));
        payload.push_back(static_cast<std::uint8_t>(static_cast<std::uint16_t>(s) >> 8));
    }
    return payload;
}

std::vector<std::uint8_t> float32_payload(const std::vector<float>& samples) {
    std::vector<std::uint8_t> payload(samples.size() * 4);
    std::memcpy(payload.data(), samples.data(), payload.size());
    return payload;
}

std::size_t dominant_bin(const std::vector<float>& samples) {
    std::vector<std::complex<double>> x(samples.begin(), samples.end());
    const auto spectrum = oracle::dft(x);
    std::size_t best = 1;
    for (std::size_t k = 1; k <= samples.size() / 2; ++k) {
        if (std::abs(spectrum[k]) > std::abs(spectrum[best])) best = k;
    }
    return best;
}

}  // namespace

TEST_SUITE("audio_io") {

TEST_CASE("pcm16 samples scale to [-1, 1) by 1/32768") {
    const auto path = write_bytes(
        "pcm_scale.wav", build_wav(1, 1, 44100, 16, pcm16_payload({0, 16384, -32768})));
    const audio::Waveform w = audio::read_wav(path);
    REQUIRE(w.sample_rate == 44100);
    REQUIRE(w.samples.size() == 3);
    CHECK(w.samples[0] == 0.0f);
    CHECK(w.samples[1] == 0.5f);
    CHECK(w.samples[2] == -1.0f);
}

TEST_CASE("stereo channels average to mono") {
    SUBCASE("float32 frames are exact") {
        const auto path = write_bytes(
            "stereo_f32.wav", build_wav(3, 2, 8000, 32, float32_payload({1.0f, 0.0f})));
        const audio::Waveform w = audio::read_wav(path);
        REQUIRE(w.samples.size() == 1);
        CHECK(w.samples[0] == 0.5f);
    }
    SUBCASE("pcm16 frames average within quantization") {
        const auto path = write_bytes(
            "stereo_i16.wav",
            build_wav(1, 2, 8000, 16, pcm16_payload({16384, 0, -16384, -16384})));
        const audio::Waveform w = audio::read_wav(path);
        REQUIRE(w.samples.size() == 2);
        CHECK(w.samples[0] == doctest::Approx(0.25));
        CHECK(w.samples[1] == doctest::Approx(-0.5));
    }
}

TEST_CASE("write then read round-trips within one quantization step") {
    std::mt19937_64 g(7);
    audio::Waveform w;
    w.sample_rate = 22050;
    for (int i = 0; i < 500; ++i) {
        w.samples.push_back(static_cast<float>(rng::uniform_in(g, -1.0, 1.0)));
    }
    const auto path = (scratch_dir() / "roundtrip.wav").string();
    audio::write_wav(path, w);
    const audio::Waveform back = audio::read_wav(path);
    REQUIRE(back.sample_rate == w.sample_rate);
    REQUIRE(back.samples.size() == w.samples.size());
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        CHECK(std::abs(back.samples[i] - w.samples[i]) <= 1.0f / 32768.0f);
    }
}

TEST_CASE("malformed and unsupported files are rejected") {
    SUBCASE("not a RIFF container") {
        std::vector<std::uint8_t> junk(64, 0x41);
        CHECK_THROWS_AS(audio::read_wav(write_bytes("junk.wav", junk)), DecodeError);
    }
    SUBCASE("data chunk truncated") {
        auto bytes = build_wav(1, 1, 8000, 16, pcm16_payload({1, 2, 3, 4}));
        bytes.resize(bytes.size() - 5);
        CHECK_THROWS_AS(audio::read_wav(write_bytes("trunc.wav", bytes)), DecodeError);
    }
    SUBCASE("three channels") {
        const auto bytes = build_wav(1, 3, 8000, 16, pcm16_payload({0, 0, 0}));
        CHECK_THROWS_AS(audio::read_wav(write_bytes("3ch.wav", bytes)), UnsupportedFormatError);
    }
    SUBCASE("compressed format tag") {
        const auto bytes = build_wav(2, 1, 8000, 16, pcm16_payload({0, 0}));
        CHECK_THROWS_AS(audio::read_wav(write_bytes("adpcm.wav", bytes)),
                        UnsupportedFormatError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(audio::read_wav("scratch_audio_io/does_not_exist.wav"), IoError);
    }
}

TEST_CASE("float32 wav reads back exactly") {
    const std::vector<float> samples = {0.25f, -0.5f, 0.875f, -1.0f};
    const auto path =
        write_bytes("f32.wav", build_wav(3, 1, 16000, 32, float32_payload(samples)));
    const audio::Waveform w = audio::read_wav(path);
    REQUIRE(w.samples.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) CHECK(w.samples[i] == samples[i]);
}

TEST_CASE("peak_normalize scales by the absolute peak") {
    audio::Waveform w;
    w.sample_rate = 8000;

    w.samples = {0.5f, -0.25f};
    audio::Waveform n = audio::peak_normalize(w);
    CHECK(n.samples[0] == doctest::Approx(1.0));
    CHECK(n.samples[1] == doctest::Approx(-0.5));

    w.samples = {-2.0f, 1.0f};
    n = audio::peak_normalize(w);
    CHECK(n.samples[0] == doctest::Approx(-1.0));
    CHECK(n.samples[1] == doctest::Approx(0.5));

    w.samples = {0.0f, 0.0f};
    n = audio::peak_normalize(w);
    CHECK(n.samples[0] == 0.0f);
    CHECK(n.samples[1] == 0.0f);
}

TEST_CASE("pad_or_trim reaches the exact target length") {
    audio::Waveform w;
    w.sample_rate = 1000;
    w.samples.assign(3000, 1.0f);

    SUBCASE("padding appends exact zeros") {
        const audio::Waveform out = audio::pad_or_trim(w, 5.0);
        REQUIRE(out.samples.size() == 5000);
        for (std::size_t i = 0; i < 3000; ++i) REQUIRE(out.samples[i] == 1.0f);
        for (std::size_t i = 3000; i < 5000; ++i) REQUIRE(out.samples[i] == 0.0f);
    }
    SUBCASE("trimming keeps the head") {
        const audio::Waveform out = audio::pad_or_trim(w, 2.0);
        REQUIRE(out.samples.size() == 2000);
        for (float s : out.samples) REQUIRE(s == 1.0f);
    }
}

TEST_CASE("resample sample counts and identity") {
    audio::Waveform w;
    w.sample_rate = 44100;
    w.samples.assign(44100, 0.25f);

    SUBCASE("one second at 44100 becomes 5490 samples at 5490") {
        const audio::Waveform out = audio::resample(w, 5490);
        CHECK(out.sample_rate == 5490);
        CHECK(out.samples.size() == 5490);
    }
    SUBCASE("same rate returns the signal unchanged") {
        const audio::Waveform out = audio::resample(w, 44100);
        CHECK(out.samples == w.samples);
    }
    SUBCASE("empty input stays empty") {
        audio::Waveform e;
        e.sample_rate = 8000;
        const audio::Waveform out = audio::resample(e, 4000);
        CHECK(out.samples.empty());
        CHECK(out.sample_rate == 4000);
    }
}

TEST_CASE("resampling a 100 Hz tone keeps the peak within one bin") {
    audio::Waveform w;
    w.sample_rate = 8000;
    w.samples.resize(8000);
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        w.samples[i] =
            static_cast<float>(std::sin(2.0 * M_PI * 100.0 * static_cast<double>(i) / 8000.0));
    }
    const audio::Waveform down = audio::resample(w, 2000);
    REQUIRE(down.samples.size() == 2000);
    // 2000 samples over 1 s puts the k-th bin at k Hz.
    const std::size_t peak = dominant_bin(down.samples);
    CHECK(peak >= 99);
    CHECK(peak <= 101);
}

}  // TEST_SUITE
