#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "roadsound/dsp.hpp"
#include "roadsound/fft.hpp"
#include "roadsound/rng.hpp"

using namespace roadsound;

namespace {

audio::Waveform random_wave(std::size_t n, int rate, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    audio::Waveform w;
    w.sample_rate = rate;
    w.samples.resize(n);
    for (auto& s : w.samples) s = static_cast<float>(rng::uniform_in(g, -1.0, 1.0));
    return w;
}

audio::Waveform sine_wave(double hz, int rate, std::size_t n) {
    audio::Waveform w;
    w.sample_rate = rate;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        w.samples[i] =
            static_cast<float>(std::sin(2.0 * M_PI * hz * static_cast<double>(i) / rate));
    }
    return w;
}

}  // namespace

TEST_SUITE("dsp") {

TEST_CASE("window shapes at length three") {
    const dsp::Window hann = dsp::make_window(dsp::WindowKind::kHann, 3);
    CHECK(hann.coeffs[0] == 0.0);
    CHECK(hann.coeffs[1] == 1.0);
    CHECK(hann.coeffs[2] == 0.0);

    const dsp::Window hamming = dsp::make_window(dsp::WindowKind::kHamming, 3);
    CHECK(hamming.coeffs[0] == doctest::Approx(0.08).epsilon(1e-12));
    CHECK(hamming.coeffs[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hamming.coeffs[2] == doctest::Approx(0.08).epsilon(1e-12));

    const dsp::Window rect = dsp::make_window(dsp::WindowKind::kRectangular, 3);
    for (double c : rect.coeffs) CHECK(c == 1.0);

    const dsp::Window single = dsp::make_window(dsp::WindowKind::kHann, 1);
    REQUIRE(single.coeffs.size() == 1);
    CHECK(single.coeffs[0] == 1.0);
}

TEST_CASE("window kinds parse and print") {
    CHECK(dsp::window_kind_from_string("hann") == dsp::WindowKind::kHann);
    CHECK(dsp::window_kind_from_string("hamming") == dsp::WindowKind::kHamming);
    CHECK(dsp::window_kind_from_string("rectangular") == dsp::WindowKind::kRectangular);
    CHECK(dsp::to_string(dsp::WindowKind::kHamming) == "hamming");
    CHECK_THROWS_AS(dsp::window_kind_from_string("kaiser"), std::invalid_argument);
}

TEST_CASE("mel scale values and inverse") {
    CHECK(dsp::hz_to_mel(700.0) == doctest::Approx(779.79).epsilon(1e-4));
    CHECK(dsp::hz_to_mel(8000.0) == doctest::Approx(2834.99).epsilon(1e-4));
    CHECK(dsp::hz_to_mel(0.0) == 0.0);

    for (double hz : {1.0, 55.0, 700.0, 3141.5, 8000.0, 22050.0}) {
        const double back = dsp::mel_to_hz(dsp::hz_to_mel(hz));
        CHECK(std::abs(back - hz) / hz < 1e-9);
    }
    CHECK_THROWS_AS(dsp::hz_to_mel(-1.0), std::invalid_argument);
}

TEST_CASE("fft matches the direct DFT") {
    std::mt19937_64 g(11);
    std::vector<std::complex<double>> x(1024);
    for (auto& v : x) v = {rng::uniform_in(g, -1.0, 1.0), rng::uniform_in(g, -1.0, 1.0)};

    std::vector<std::complex<double>> fast = x;
    dsp::Fft fft(x.size());
    fft.forward(fast);
    const auto slow = oracle::dft(x);
    for (std::size_t k = 0; k < x.size(); ++k) {
        CHECK(std::abs(fast[k] - slow[k]) < 1e-9);
    }
}

TEST_CASE("fft satisfies Parseval's identity") {
    std::mt19937_64 g(12);
    std::vector<std::complex<double>> x(512);
    double time_energy = 0.0;
    for (auto& v : x) {
        v = {rng::uniform_in(g, -1.0, 1.0), 0.0};
        time_energy += std::norm(v);
    }
    dsp::Fft fft(x.size());
    fft.forward(x);
    double freq_energy = 0.0;
    for (const auto& v : x) freq_energy += std::norm(v);
    CHECK(freq_energy == doctest::Approx(512.0 * time_energy).epsilon(1e-12));
}

TEST_CASE("stft matches a naive DFT of each windowed frame") {
    const audio::Waveform w = random_wave(1024, 8000, 21);
    const dsp::Window window = dsp::make_window(dsp::WindowKind::kHann, 256);
    const std::size_t hop = 128, fft_size = 256;
    const dsp::Spectrogram spec = dsp::stft(w, window, hop, fft_size);
    REQUIRE(spec.frames() == (1024 - 256) / 128 + 1);
    REQUIRE(spec.bins() == 129);

    for (std::size_t t = 0; t < spec.frames(); ++t) {
        std::vector<std::complex<double>> frame(fft_size, {0.0, 0.0});
        for (std::size_t i = 0; i < window.length(); ++i) {
            frame[i] = static_cast<double>(w.samples[t * hop + i]) * window.coeffs[i];
        }
        const auto slow = oracle::dft(frame);
        for (std::size_t k = 0; k < spec.bins(); ++k) {
            REQUIRE(std::abs(spec.magnitudes.at(t, k) - std::abs(slow[k])) < 1e-6);
        }
    }
}

TEST_CASE("stft per-frame Parseval identity on the half spectrum") {
    const audio::Waveform w = random_wave(2000, 8000, 22);
    const dsp::Window window = dsp::make_window(dsp::WindowKind::kHamming, 512);
    const std::size_t hop = 256, fft_size = 512;
    const dsp::Spectrogram spec = dsp::stft(w, window, hop, fft_size);

    for (std::size_t t = 0; t < spec.frames(); ++t) {
        double windowed_energy = 0.0;
        for (std::size_t i = 0; i < window.length(); ++i) {
            const double v = static_cast<double>(w.samples[t * hop + i]) * window.coeffs[i];
            windowed_energy += v * v;
        }
        // Real signal: interior bins carry their conjugate twins' energy too.
        double freq_energy = 0.0;
        for (std::size_t k = 0; k < spec.bins(); ++k) {
            const double m2 = spec.magnitudes.at(t, k) * spec.magnitudes.at(t, k);
            const bool shared = k == 0 || k == fft_size / 2;
            freq_energy += shared ? m2 : 2.0 * m2;
        }
        REQUIRE(freq_energy ==
                doctest::Approx(static_cast<double>(fft_size) * windowed_energy).epsilon(1e-6));
    }
}

TEST_CASE("stft input validation") {
    const audio::Waveform w = random_wave(100, 8000, 23);
    const dsp::Window window = dsp::make_window(dsp::WindowKind::kHann, 256);
    CHECK_THROWS_AS(dsp::stft(w, window, 128, 256), std::invalid_argument);  // clip too short
    const audio::Waveform w2 = random_wave(1024, 8000, 24);
    CHECK_THROWS_AS(dsp::stft(w2, window, 128, 300), std::invalid_argument);  // fft not 2^k
    CHECK_THROWS_AS(dsp::stft(w2, window, 128, 128), std::invalid_argument);  // fft < window
}

TEST_CASE("a 100 Hz tone peaks within one spectrogram bin of 100 Hz") {
    // 6400 Hz / 1024-point FFT puts bins every 6.25 Hz; 100 Hz sits at 16.
    const audio::Waveform w = sine_wave(100.0, 6400, 6400);
    const dsp::Window window = dsp::make_window(dsp::WindowKind::kHann, 1024);
    const dsp::Spectrogram spec = dsp::stft(w, window, 512, 1024);
    for (std::size_t t = 0; t < spec.frames(); ++t) {
        std::size_t peak = 0;
        for (std::size_t k = 1; k < spec.bins(); ++k) {
            if (spec.magnitudes.at(t, k) > spec.magnitudes.at(t, peak)) peak = k;
        }
        CHECK(peak >= 15);
        CHECK(peak <= 17);
    }
}

TEST_CASE("orthonormal DCT-II matches direct summation") {
    std::mt19937_64 g(31);
    for (std::size_t m : {4u, 13u, 64u}) {
        std::vector<double> x(m);
        for (auto& v : x) v = rng::uniform_in(g, -1.0, 1.0);
        const auto fast = dsp::dct2_orthonormal(x, m);
        const auto slow = oracle::dct2(x);
        REQUIRE(fast.size() == m);
        for (std::size_t k = 0; k < m; ++k) REQUIRE(std::abs(fast[k] - slow[k]) < 1e-9);
    }
}

TEST_CASE("DCT-II basis is orthonormal") {
    const std::size_t m = 16;
    // Transform each unit vector; the resulting matrix must have orthonormal columns.
    std::vector<std::vector<double>> basis;
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<double> e(m, 0.0);
        e[i] = 1.0;
        basis.push_back(dsp::dct2_orthonormal(e, m));
    }
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < m; ++k) dot += basis[i][k] * basis[j][k];
            CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-12);
        }
    }
}

TEST_CASE("DCT-II keeps only the requested coefficients") {
    std::vector<double> x = {1.0, 2.0, 3.0, 4.0, 5.0};
    const auto kept = dsp::dct2_orthonormal(x, 3);
    const auto full = dsp::dct2_orthonormal(x, 5);
    REQUIRE(kept.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) CHECK(kept[k] == full[k]);
}

TEST_CASE("mel filterbank geometry") {
    const std::size_t n_filters = 26, fft_size = 512;
    const int rate = 22050;
    const dsp::MelFilterbank fb =
        dsp::build_mel_filterbank(n_filters, fft_size, rate, 0.0, rate / 2.0);
    REQUIRE(fb.n_filters == n_filters);
    REQUIRE(fb.n_bins == fft_size / 2 + 1);
    REQUIRE(fb.points_hz.size() == n_filters + 2);
    REQUIRE(fb.point_bins.size() == n_filters + 2);

    SUBCASE("each filter peaks at exactly one with zero ends") {
        for (std::size_t m = 0; m < n_filters; ++m) {
            const double* f = fb.filter(m);
            CHECK(f[fb.point_bins[m]] == 0.0);
            CHECK(f[fb.point_bins[m + 1]] == 1.0);
            CHECK(f[fb.point_bins[m + 2]] == 0.0);
        }
    }
    SUBCASE("breakpoint spacing in Hz grows strictly") {
        for (std::size_t m = 0; m + 1 < n_filters; ++m) {
            const double width = fb.points_hz[m + 2] - fb.points_hz[m];
            const double next = fb.points_hz[m + 3] - fb.points_hz[m + 1];
            CHECK(next > width);
        }
        // Bin-snapping can jitter individual widths by a bin, but the trend
        // must survive: the first filter is no wider than the last.
        const std::size_t first = fb.point_bins[2] - fb.point_bins[0];
        const std::size_t last = fb.point_bins[n_filters + 1] - fb.point_bins[n_filters - 1];
        CHECK(first <= last);
    }
    SUBCASE("every interior bin is covered by some filter") {
        for (std::size_t b = fb.point_bins.front() + 1; b < fb.point_bins.back(); ++b) {
            double total = 0.0;
            for (std::size_t m = 0; m < n_filters; ++m) total += fb.filter(m)[b];
            CHECK(total > 0.0);
        }
    }
    SUBCASE("too many filters for the FFT resolution is an error") {
        CHECK_THROWS_AS(dsp::build_mel_filterbank(128, 256, 8000, 0.0, 4000.0),
                        std::invalid_argument);
    }
}

TEST_CASE("log mel energies floor at the regularizer") {
    audio::Waveform silence;
    silence.sample_rate = 8000;
    silence.samples.assign(2048, 0.0f);
    const dsp::Window window = dsp::make_window(dsp::WindowKind::kHann, 512);
    const dsp::Spectrogram spec = dsp::stft(silence, window, 256, 512);
    const dsp::MelFilterbank fb = dsp::build_mel_filterbank(20, 512, 8000, 0.0, 4000.0);
    const dsp::Grid energies = dsp::log_mel_energies(spec, fb);
    REQUIRE(energies.rows == spec.frames());
    REQUIRE(energies.cols == 20);
    const double floor_value = std::log(1e-10);
    for (double v : energies.data) CHECK(v == doctest::Approx(floor_value).epsilon(1e-12));
}

TEST_CASE("mfcc of silence concentrates in the zeroth coefficient") {
    audio::Waveform silence;
    silence.sample_rate = 8000;
    silence.samples.assign(4096, 0.0f);
    dsp::MfccConfig mc;
    mc.frame_length = 512;
    mc.hop = 256;
    mc.n_filters = 20;
    mc.n_coeffs = 12;
    const dsp::Grid coeffs = dsp::mfcc(silence, mc);
    REQUIRE(coeffs.cols == 12);
    const double expected0 = std::sqrt(20.0) * std::log(1e-10);
    for (std::size_t t = 0; t < coeffs.rows; ++t) {
        CHECK(coeffs.at(t, 0) == doctest::Approx(expected0).epsilon(1e-9));
        for (std::size_t k = 1; k < coeffs.cols; ++k) {
            CHECK(std::abs(coeffs.at(t, k)) < 1e-9);
        }
    }
}

TEST_CASE("hop_for_frames lands near the target and never underflows") {
    CHECK(dsp::hop_for_frames(110250, 15660, 430) == 220);
    CHECK(dsp::hop_for_frames(1024, 256, 7) == 128);
    CHECK(dsp::hop_for_frames(300, 256, 430) == 1);  // clamped
    const std::size_t hop = dsp::hop_for_frames(27450, 860, 430);
    const std::size_t frames = (27450 - 860) / hop + 1;
    CHECK(frames >= 430);
    CHECK(frames <= 440);
}

TEST_CASE("bilinear resize") {
    SUBCASE("identity when the shape already matches") {
        dsp::Grid g(3, 4);
        for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = static_cast<double>(i);
        const dsp::Grid out = dsp::bilinear_resize(g, 3, 4);
        CHECK(out.data == g.data);
    }
    SUBCASE("corners are preserved and the center interpolates") {
        dsp::Grid g(2, 2);
        g.at(0, 0) = 1.0;
        g.at(0, 1) = 3.0;
        g.at(1, 0) = 5.0;
        g.at(1, 1) = 7.0;
        const dsp::Grid out = dsp::bilinear_resize(g, 3, 3);
        CHECK(out.at(0, 0) == doctest::Approx(1.0));
        CHECK(out.at(0, 2) == doctest::Approx(3.0));
        CHECK(out.at(2, 0) == doctest::Approx(5.0));
        CHECK(out.at(2, 2) == doctest::Approx(7.0));
        CHECK(out.at(1, 1) == doctest::Approx(4.0));
    }
    SUBCASE("downscale averages along the collapsed axis") {
        dsp::Grid g(1, 5);
        for (std::size_t c = 0; c < 5; ++c) g.at(0, c) = static_cast<double>(c);
        const dsp::Grid out = dsp::bilinear_resize(g, 1, 3);
        CHECK(out.at(0, 0) == doctest::Approx(0.0));
        CHECK(out.at(0, 1) == doctest::Approx(2.0));
        CHECK(out.at(0, 2) == doctest::Approx(4.0));
    }
}

TEST_CASE("feature config hash reacts to every field") {
    dsp::FeatureConfig base;
    const std::uint64_t h0 = base.hash();
    CHECK(h0 == dsp::FeatureConfig{}.hash());

    dsp::FeatureConfig c = base;
    c.out_frames = 108;
    CHECK(c.hash() != h0);
    c = base;
    c.out_bands = 64;
    CHECK(c.hash() != h0);
    c = base;
    c.window = dsp::WindowKind::kHamming;
    CHECK(c.hash() != h0);
    c = base;
    c.mel_window_seconds = 0.5;
    CHECK(c.hash() != h0);
    c = base;
    c.mfcc_coeffs = 40;
    CHECK(c.hash() != h0);
    c = base;
    c.canonical_duration = 4.0;
    CHECK(c.hash() != h0);
}

TEST_CASE("feature volumes have the configured shape and are deterministic") {
    dsp::FeatureConfig config;
    config.canonical_duration = 1.0;
    config.out_frames = 54;
    config.out_bands = 32;
    config.spec_rate = 4000;
    config.spec_window = 256;
    config.mfcc_rate = 8000;
    config.mfcc_window = 512;
    config.mfcc_coeffs = 20;
    config.mel_rate = 8000;
    config.mel_window_seconds = 0.06;

    const audio::Waveform w = random_wave(8000, 8000, 77);
    const dsp::FeatureVolume a = dsp::extract_feature_volume(w, config);
    const dsp::FeatureVolume b = dsp::extract_feature_volume(w, config);
    REQUIRE(a.rows == 54);
    REQUIRE(a.cols == 32);
    for (std::size_t ch = 0; ch < 3; ++ch) {
        REQUIRE(a.channels[ch].size() == 54u * 32u);
        CHECK(a.channels[ch] == b.channels[ch]);
        double energy = 0.0;
        for (float v : a.channels[ch]) energy += std::abs(v);
        CHECK(energy > 0.0);  // every channel carries signal
    }
}

}  // TEST_SUITE
