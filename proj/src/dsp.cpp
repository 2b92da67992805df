#include "roadsound/dsp.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <sstream>
#include <stdexcept>

#include "roadsound/fft.hpp"

namespace roadsound::dsp {

namespace {

constexpr double kLogFloor = 1e-10;

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

WindowKind window_kind_from_string(const std::string& name) {
    if (name == "hann") return WindowKind::kHann;
    if (name == "hamming") return WindowKind::kHamming;
    if (name == "rectangular") return WindowKind::kRectangular;
    throw std::invalid_argument("unknown window kind: " + name);
}

std::string to_string(WindowKind kind) {
    switch (kind) {
        case WindowKind::kHann: return "hann";
        case WindowKind::kHamming: return "hamming";
        case WindowKind::kRectangular: return "rectangular";
    }
    return "hann";
}

Window make_window(WindowKind kind, std::size_t length) {
    if (length == 0) throw std::invalid_argument("make_window: length must be >= 1");
    Window w;
    w.kind = kind;
    w.coeffs.resize(length);
    if (length == 1) {
        w.coeffs[0] = 1.0;
        return w;
    }
    const double denom = static_cast<double>(length - 1);
    for (std::size_t n = 0; n < length; ++n) {
        const double phase = 2.0 * M_PI * static_cast<double>(n) / denom;
        switch (kind) {
            case WindowKind::kHann: w.coeffs[n] = 0.5 - 0.5 * std::cos(phase); break;
            case WindowKind::kHamming: w.coeffs[n] = 0.54 - 0.46 * std::cos(phase); break;
            case WindowKind::kRectangular: w.coeffs[n] = 1.0; break;
        }
    }
    return w;
}

Spectrogram stft(const audio::Waveform& w, const Window& window, std::size_t hop,
                 std::size_t fft_size) {
    const std::size_t win_len = window.length();
    if (hop < 1) throw std::invalid_argument("stft: hop must be >= 1");
    if (fft_size < win_len) throw std::invalid_argument("stft: fft_size must be >= window length");
    if (!is_power_of_two(fft_size)) throw std::invalid_argument("stft: fft_size must be a power of two");
    if (w.samples.size() < win_len) throw std::invalid_argument("stft: clip shorter than one window");

    const std::size_t n_frames = (w.samples.size() - win_len) / hop + 1;
    const std::size_t n_bins = fft_size / 2 + 1;

    Spectrogram spec;
    spec.frame_hop = hop;
    spec.fft_size = fft_size;
    spec.magnitudes = Grid(n_frames, n_bins);

    Fft fft(fft_size);
    std::vector<std::complex<double>> buf(fft_size);
    for (std::size_t t = 0; t < n_frames; ++t) {
        const float* frame = w.samples.data() + t * hop;
        for (std::size_t n = 0; n < win_len; ++n) {
            buf[n] = {static_cast<double>(frame[n]) * window.coeffs[n], 0.0};
        }
        for (std::size_t n = win_len; n < fft_size; ++n) buf[n] = {0.0, 0.0};
        fft.forward(buf);
        double* out = spec.magnitudes.row(t);
        for (std::size_t b = 0; b < n_bins; ++b) out[b] = std::abs(buf[b]);
    }
    return spec;
}

double hz_to_mel(double hz) {
    if (hz < 0.0) throw std::invalid_argument("hz_to_mel: frequency must be >= 0");
    return 1125.0 * std::log1p(hz / 700.0);
}

double mel_to_hz(double mel) {
    if (mel < 0.0) throw std::invalid_argument("mel_to_hz: mel must be >= 0");
    return 700.0 * std::expm1(mel / 1125.0);
}

MelFilterbank build_mel_filterbank(std::size_t n_filters, std::size_t fft_size, int sample_rate,
                                   double low_hz, double high_hz) {
    if (n_filters < 1) throw std::invalid_argument("build_mel_filterbank: need >= 1 filter");
    if (sample_rate <= 0) throw std::invalid_argument("build_mel_filterbank: bad sample rate");
    const double nyquist = sample_rate / 2.0;
    if (!(low_hz >= 0.0 && low_hz < high_hz && high_hz <= nyquist)) {
        throw std::invalid_argument("build_mel_filterbank: need 0 <= low < high <= nyquist");
    }

    MelFilterbank fb;
    fb.n_filters = n_filters;
    fb.n_bins = fft_size / 2 + 1;
    fb.low_hz = low_hz;
    fb.high_hz = high_hz;
    fb.weights.assign(n_filters * fb.n_bins, 0.0);

    const double mel_low = hz_to_mel(low_hz);
    const double mel_high = hz_to_mel(high_hz);
    const std::size_t n_points = n_filters + 2;
    fb.points_hz.resize(n_points);
    fb.point_bins.resize(n_points);
    const double bin_width = static_cast<double>(sample_rate) / static_cast<double>(fft_size);
    for (std::size_t i = 0; i < n_points; ++i) {
        const double mel = mel_low + (mel_high - mel_low) * static_cast<double>(i) /
                                         static_cast<double>(n_points - 1);
        fb.points_hz[i] = mel_to_hz(mel);
        const auto bin = static_cast<std::size_t>(std::llround(fb.points_hz[i] / bin_width));
        fb.point_bins[i] = std::min(bin, fb.n_bins - 1);
    }
    for (std::size_t i = 0; i + 1 < n_points; ++i) {
        if (fb.point_bins[i + 1] <= fb.point_bins[i]) {
            throw std::invalid_argument(
                "build_mel_filterbank: adjacent mel points collapse to the same FFT bin; "
                "reduce n_filters or increase fft_size");
        }
    }

    for (std::size_t i = 0; i < n_filters; ++i) {
        const std::size_t left = fb.point_bins[i];
        const std::size_t center = fb.point_bins[i + 1];
        const std::size_t right = fb.point_bins[i + 2];
        double* row = fb.weights.data() + i * fb.n_bins;
        for (std::size_t b = left; b <= center; ++b) {
            row[b] = static_cast<double>(b - left) / static_cast<double>(center - left);
        }
        for (std::size_t b = center; b <= right; ++b) {
            row[b] = static_cast<double>(right - b) / static_cast<double>(right - center);
        }
        row[center] = 1.0;
    }
    return fb;
}

Grid log_mel_energies(const Spectrogram& spec, const MelFilterbank& fb) {
    if (spec.bins() != fb.n_bins) {
        throw std::invalid_argument("log_mel_energies: spectrogram bins do not match filterbank");
    }
    Grid out(spec.frames(), fb.n_filters);
    std::vector<double> power(spec.bins());
    for (std::size_t t = 0; t < spec.frames(); ++t) {
        const double* mag = spec.magnitudes.row(t);
        for (std::size_t b = 0; b < spec.bins(); ++b) power[b] = mag[b] * mag[b];
        double* row = out.row(t);
        for (std::size_t m = 0; m < fb.n_filters; ++m) {
            const double* filt = fb.filter(m);
            const std::size_t lo = fb.point_bins[m];
            const std::size_t hi = fb.point_bins[m + 2];
            double e = 0.0;
            for (std::size_t b = lo; b <= hi; ++b) e += filt[b] * power[b];
            row[m] = std::log(e + kLogFloor);
        }
    }
    return out;
}

std::vector<double> dct2_orthonormal(const std::vector<double>& input, std::size_t n_out) {
    const std::size_t m = input.size();
    if (m == 0) throw std::invalid_argument("dct2_orthonormal: empty input");
    if (n_out > m) throw std::invalid_argument("dct2_orthonormal: n_out exceeds input length");
    std::vector<double> out(n_out, 0.0);
    const double scale0 = std::sqrt(1.0 / static_cast<double>(m));
    const double scale = std::sqrt(2.0 / static_cast<double>(m));
    for (std::size_t k = 0; k < n_out; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            acc += input[i] *
                   std::cos(M_PI * static_cast<double>(k) * (static_cast<double>(i) + 0.5) /
                            static_cast<double>(m));
        }
        out[k] = acc * (k == 0 ? scale0 : scale);
    }
    return out;
}

Grid mfcc(const audio::Waveform& w, const MfccConfig& config) {
    if (config.n_coeffs > config.n_filters) {
        throw std::invalid_argument("mfcc: n_coeffs must not exceed n_filters");
    }
    const std::size_t fft_size = next_power_of_two(config.frame_length);
    const Window window = make_window(config.window, config.frame_length);
    const Spectrogram spec = stft(w, window, config.hop, fft_size);

    const double high = config.high_hz > 0.0 ? config.high_hz : w.sample_rate / 2.0;
    const MelFilterbank fb =
        build_mel_filterbank(config.n_filters, fft_size, w.sample_rate, config.low_hz, high);

    // DCT-II basis, n_coeffs x n_filters
    const std::size_t m = config.n_filters;
    std::vector<double> basis(config.n_coeffs * m);
    const double scale0 = std::sqrt(1.0 / static_cast<double>(m));
    const double scale = std::sqrt(2.0 / static_cast<double>(m));
    for (std::size_t k = 0; k < config.n_coeffs; ++k) {
        for (std::size_t i = 0; i < m; ++i) {
            basis[k * m + i] = (k == 0 ? scale0 : scale) *
                               std::cos(M_PI * static_cast<double>(k) *
                                        (static_cast<double>(i) + 0.5) / static_cast<double>(m));
        }
    }

    Grid out(spec.frames(), config.n_coeffs);
    std::vector<double> log_bands(m);
    for (std::size_t t = 0; t < spec.frames(); ++t) {
        const double* mag = spec.magnitudes.row(t);
        for (std::size_t f = 0; f < m; ++f) {
            const double* filt = fb.filter(f);
            const std::size_t lo = fb.point_bins[f];
            const std::size_t hi = fb.point_bins[f + 2];
            double e = 0.0;
            for (std::size_t b = lo; b <= hi; ++b) e += filt[b] * mag[b];
            log_bands[f] = std::log(e + kLogFloor);
        }
        double* row = out.row(t);
        for (std::size_t k = 0; k < config.n_coeffs; ++k) {
            const double* bk = basis.data() + k * m;
            double acc = 0.0;
            for (std::size_t f = 0; f < m; ++f) acc += bk[f] * log_bands[f];
            row[k] = acc;
        }
    }
    return out;
}

std::size_t hop_for_frames(std::size_t len, std::size_t window_len, std::size_t target_frames) {
    if (target_frames < 2 || len <= window_len) return 1;
    const std::size_t hop = (len - window_len) / (target_frames - 1);
    return hop > 0 ? hop : 1;
}

Grid bilinear_resize(const Grid& src, std::size_t rows, std::size_t cols) {
    if (src.rows == 0 || src.cols == 0) throw std::invalid_argument("bilinear_resize: empty grid");
    if (rows == 0 || cols == 0) throw std::invalid_argument("bilinear_resize: empty target");
    if (src.rows == rows && src.cols == cols) return src;

    Grid out(rows, cols);
    const double r_step = rows > 1 ? static_cast<double>(src.rows - 1) / (rows - 1) : 0.0;
    const double c_step = cols > 1 ? static_cast<double>(src.cols - 1) / (cols - 1) : 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        const double r = i * r_step;
        const std::size_t r0 = static_cast<std::size_t>(r);
        const std::size_t r1 = std::min(r0 + 1, src.rows - 1);
        const double fr = r - static_cast<double>(r0);
        for (std::size_t j = 0; j < cols; ++j) {
            const double c = j * c_step;
            const std::size_t c0 = static_cast<std::size_t>(c);
            const std::size_t c1 = std::min(c0 + 1, src.cols - 1);
            const double fc = c - static_cast<double>(c0);
            const double top = src.at(r0, c0) * (1.0 - fc) + src.at(r0, c1) * fc;
            const double bot = src.at(r1, c0) * (1.0 - fc) + src.at(r1, c1) * fc;
            out.at(i, j) = top * (1.0 - fr) + bot * fr;
        }
    }
    return out;
}

std::uint64_t FeatureConfig::hash() const {
    std::ostringstream ss;
    ss << "duration=" << canonical_duration << ";frames=" << out_frames << ";bands=" << out_bands
       << ";window=" << to_string(window) << ";spec=" << spec_rate << "/" << spec_window
       << ";mfcc=" << mfcc_rate << "/" << mfcc_window << "/" << mfcc_coeffs << ";mel=" << mel_rate
       << "/" << mel_window_seconds;
    return fnv1a64(ss.str());
}

namespace {

void grid_to_channel(const Grid& g, std::vector<float>& out) {
    out.resize(g.data.size());
    for (std::size_t i = 0; i < g.data.size(); ++i) out[i] = static_cast<float>(g.data[i]);
}

}  // namespace

FeatureVolume extract_feature_volume(const audio::Waveform& clip, const FeatureConfig& config) {
    FeatureVolume vol;
    vol.rows = config.out_frames;
    vol.cols = config.out_bands;

    // Channel 0: magnitude spectrogram compressed to out_bands mel columns.
    {
        const audio::Waveform w = audio::resample(clip, config.spec_rate);
        const Window window = make_window(config.window, config.spec_window);
        const std::size_t hop = hop_for_frames(w.size(), config.spec_window, config.out_frames);
        const std::size_t fft_size = next_power_of_two(config.spec_window);
        const Spectrogram spec = stft(w, window, hop, fft_size);
        const MelFilterbank fb = build_mel_filterbank(config.out_bands, fft_size, config.spec_rate,
                                                      0.0, config.spec_rate / 2.0);
        Grid grid(spec.frames(), fb.n_filters);
        for (std::size_t t = 0; t < spec.frames(); ++t) {
            const double* mag = spec.magnitudes.row(t);
            double* row = grid.row(t);
            for (std::size_t m = 0; m < fb.n_filters; ++m) {
                const double* filt = fb.filter(m);
                const std::size_t lo = fb.point_bins[m];
                const std::size_t hi = fb.point_bins[m + 2];
                double acc = 0.0;
                for (std::size_t b = lo; b <= hi; ++b) acc += filt[b] * mag[b];
                row[m] = acc;
            }
        }
        grid_to_channel(bilinear_resize(grid, config.out_frames, config.out_bands),
                        vol.channels[0]);
    }

    // Channel 1: MFCC, kept coefficients zero-padded up to out_bands columns.
    {
        const audio::Waveform w = audio::resample(clip, config.mfcc_rate);
        MfccConfig mc;
        mc.frame_length = config.mfcc_window;
        mc.hop = hop_for_frames(w.size(), config.mfcc_window, config.out_frames);
        mc.n_filters = config.out_bands;
        mc.n_coeffs = std::min(config.mfcc_coeffs, config.out_bands);
        mc.window = config.window;
        const Grid coeffs = mfcc(w, mc);
        const Grid sized = bilinear_resize(coeffs, config.out_frames, mc.n_coeffs);
        Grid padded(config.out_frames, config.out_bands);
        for (std::size_t t = 0; t < sized.rows; ++t) {
            for (std::size_t k = 0; k < sized.cols; ++k) padded.at(t, k) = sized.at(t, k);
        }
        grid_to_channel(padded, vol.channels[1]);
    }

    // Channel 2: log mel-filterbank energies.
    {
        const audio::Waveform w = audio::resample(clip, config.mel_rate);
        const std::size_t win_len = static_cast<std::size_t>(
            std::llround(config.mel_window_seconds * config.mel_rate));
        const Window window = make_window(config.window, win_len);
        const std::size_t hop = hop_for_frames(w.size(), win_len, config.out_frames);
        const std::size_t fft_size = next_power_of_two(win_len);
        const Spectrogram spec = stft(w, window, hop, fft_size);
        const MelFilterbank fb = build_mel_filterbank(config.out_bands, fft_size, config.mel_rate,
                                                      0.0, config.mel_rate / 2.0);
        const Grid energies = log_mel_energies(spec, fb);
        grid_to_channel(bilinear_resize(energies, config.out_frames, config.out_bands),
                        vol.channels[2]);
    }

    return vol;
}

}  // namespace roadsound::dsp
