#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "roadsound/audio_io.hpp"

namespace roadsound::dsp {

enum class WindowKind { kHann, kHamming, kRectangular };

WindowKind window_kind_from_string(const std::string& name);
std::string to_string(WindowKind kind);

struct Window {
    WindowKind kind = WindowKind::kHann;
    std::vector<double> coeffs;

    std::size_t length() const { return coeffs.size(); }
};

Window make_window(WindowKind kind, std::size_t length);

// Dense row-major T x B grid of doubles.
struct Grid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Grid() = default;
    Grid(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    double* row(std::size_t r) { return data.data() + r * cols; }
};

// Magnitude STFT. rows = frames, cols = fft_size/2 + 1 bins.
struct Spectrogram {
    Grid magnitudes;
    std::size_t frame_hop = 0;
    std::size_t fft_size = 0;

    std::size_t frames() const { return magnitudes.rows; }
    std::size_t bins() const { return magnitudes.cols; }
};

// Frame t covers samples [t*hop, t*hop + window.length); each frame is
// windowed, zero-padded to fft_size and transformed. Only complete frames
// are produced: T = floor((len - window_len)/hop) + 1.
Spectrogram stft(const audio::Waveform& w, const Window& window, std::size_t hop,
                 std::size_t fft_size);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filters with peaks equally spaced on the mel scale and snapped
// to FFT bins. weights is n_filters x (fft_size/2 + 1), row-major.
struct MelFilterbank {
    std::size_t n_filters = 0;
    std::size_t n_bins = 0;
    std::vector<double> weights;
    double low_hz = 0.0;
    double high_hz = 0.0;
    std::vector<double> points_hz;       // n_filters + 2 breakpoints before snapping
    std::vector<std::size_t> point_bins; // the same breakpoints snapped to bins

    const double* filter(std::size_t i) const { return weights.data() + i * n_bins; }
};

MelFilterbank build_mel_filterbank(std::size_t n_filters, std::size_t fft_size, int sample_rate,
                                   double low_hz, double high_hz);

// Per frame: power projected through the filterbank, then ln(e + 1e-10).
Grid log_mel_energies(const Spectrogram& spec, const MelFilterbank& fb);

// Orthonormal DCT-II of a length-m vector, keeping the first n_out coefficients.
std::vector<double> dct2_orthonormal(const std::vector<double>& input, std::size_t n_out);

struct MfccConfig {
    std::size_t frame_length = 2048;
    std::size_t hop = 512;
    std::size_t n_filters = 128;
    std::size_t n_coeffs = 120;
    WindowKind window = WindowKind::kHann;
    double low_hz = 0.0;
    double high_hz = 0.0;  // 0 means Nyquist
};

// frame -> window -> magnitude spectrum -> mel projection -> log -> DCT-II.
Grid mfcc(const audio::Waveform& w, const MfccConfig& config);

struct FeatureConfig {
    double canonical_duration = 5.0;
    std::size_t out_frames = 430;
    std::size_t out_bands = 128;
    WindowKind window = WindowKind::kHann;

    int spec_rate = 5490;
    std::size_t spec_window = 860;

    int mfcc_rate = 44100;
    std::size_t mfcc_window = 2048;
    std::size_t mfcc_coeffs = 120;

    int mel_rate = 22100;
    double mel_window_seconds = 0.71;

    // Stable content hash; any change invalidates cached features.
    std::uint64_t hash() const;
};

// Three out_frames x out_bands channels in fixed order:
// [mel-compressed spectrogram, mfcc, log-mel energy].
struct FeatureVolume {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::array<std::vector<float>, 3> channels;

    float at(std::size_t ch, std::size_t r, std::size_t c) const {
        return channels[ch][r * cols + c];
    }
};

FeatureVolume extract_feature_volume(const audio::Waveform& clip, const FeatureConfig& config);

// Hop that yields ~target_frames complete frames; the grid is later resized
// to the exact target, so the count only needs to land near it.
std::size_t hop_for_frames(std::size_t len, std::size_t window_len, std::size_t target_frames);

Grid bilinear_resize(const Grid& src, std::size_t rows, std::size_t cols);

}  // namespace roadsound::dsp
