#include "roadsound/augment.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

#include "roadsound/dsp.hpp"
#include "roadsound/fft.hpp"
#include "roadsound/rng.hpp"

namespace roadsound::augment {

namespace {

constexpr std::size_t kPvFrame = 2048;
constexpr std::size_t kPvHop = 512;

using rng::uniform_in;

double princarg(double phase) {
    return phase - 2.0 * M_PI * std::round(phase / (2.0 * M_PI));
}

}  // namespace

audio::Waveform mix_background_noise(const audio::Waveform& w, const audio::Waveform& noise,
                                     double amp) {
    if (amp < 0.0 || amp > 1.0) throw std::invalid_argument("mix_background_noise: amp in [0,1]");
    if (noise.samples.empty()) throw std::invalid_argument("mix_background_noise: empty noise");
    if (noise.sample_rate != w.sample_rate) {
        throw std::invalid_argument("mix_background_noise: noise rate must match clip rate");
    }
    audio::Waveform out;
    out.sample_rate = w.sample_rate;
    out.samples.resize(w.samples.size());
    const std::size_t n = noise.samples.size();
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const double v = static_cast<double>(w.samples[i]) +
                         amp * static_cast<double>(noise.samples[i % n]);
        out.samples[i] = static_cast<float>(std::clamp(v, -1.0, 1.0));
    }
    return out;
}

audio::Waveform time_stretch(const audio::Waveform& w, double rate) {
    if (rate <= 0.0) throw std::invalid_argument("time_stretch: rate must be positive");
    audio::Waveform out;
    out.sample_rate = w.sample_rate;
    const std::size_t target_len =
        static_cast<std::size_t>(std::llround(static_cast<double>(w.samples.size()) / rate));
    if (w.samples.empty() || target_len == 0) return out;

    // Analysis STFT, complex, with the tail padded to complete frames.
    std::vector<float> padded = w.samples;
    if (padded.size() < kPvFrame) padded.resize(kPvFrame, 0.0f);
    const std::size_t rem = (padded.size() - kPvFrame) % kPvHop;
    if (rem != 0) padded.resize(padded.size() + (kPvHop - rem), 0.0f);
    const std::size_t n_frames = (padded.size() - kPvFrame) / kPvHop + 1;
    const std::size_t n_bins = kPvFrame / 2 + 1;

    const dsp::Window window = dsp::make_window(dsp::WindowKind::kHann, kPvFrame);
    dsp::Fft fft(kPvFrame);

    std::vector<double> mags(n_frames * n_bins);
    std::vector<double> phases(n_frames * n_bins);
    {
        std::vector<std::complex<double>> buf(kPvFrame);
        for (std::size_t t = 0; t < n_frames; ++t) {
            for (std::size_t i = 0; i < kPvFrame; ++i) {
                buf[i] = {static_cast<double>(padded[t * kPvHop + i]) * window.coeffs[i], 0.0};
            }
            fft.forward(buf);
            for (std::size_t b = 0; b < n_bins; ++b) {
                mags[t * n_bins + b] = std::abs(buf[b]);
                phases[t * n_bins + b] = std::arg(buf[b]);
            }
        }
    }

    // Expected per-hop phase advance for each bin.
    std::vector<double> advance(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        advance[b] = 2.0 * M_PI * static_cast<double>(kPvHop) * static_cast<double>(b) /
                     static_cast<double>(kPvFrame);
    }

    const std::size_t n_out_frames =
        static_cast<std::size_t>(std::floor(static_cast<double>(n_frames - 1) / rate)) + 1;
    std::vector<double> phase_acc(phases.begin(), phases.begin() + n_bins);

    const std::size_t out_len = (n_out_frames - 1) * kPvHop + kPvFrame;
    std::vector<double> acc(out_len, 0.0);
    std::vector<double> norm(out_len, 0.0);
    std::vector<std::complex<double>> buf(kPvFrame);

    for (std::size_t ot = 0; ot < n_out_frames; ++ot) {
        const double s = static_cast<double>(ot) * rate;
        const std::size_t t0 = std::min(static_cast<std::size_t>(s), n_frames - 1);
        const std::size_t t1 = std::min(t0 + 1, n_frames - 1);
        const double frac = s - static_cast<double>(t0);

        const double* m0 = mags.data() + t0 * n_bins;
        const double* m1 = mags.data() + t1 * n_bins;
        for (std::size_t b = 0; b < n_bins; ++b) {
            const double mag = m0[b] * (1.0 - frac) + m1[b] * frac;
            buf[b] = std::polar(mag, phase_acc[b]);
        }
        for (std::size_t b = n_bins; b < kPvFrame; ++b) buf[b] = std::conj(buf[kPvFrame - b]);

        // Inverse transform via conjugation.
        for (auto& c : buf) c = std::conj(c);
        fft.forward(buf);
        const double inv_n = 1.0 / static_cast<double>(kPvFrame);
        const std::size_t base = ot * kPvHop;
        for (std::size_t i = 0; i < kPvFrame; ++i) {
            const double sample = std::real(std::conj(buf[i])) * inv_n;
            acc[base + i] += sample * window.coeffs[i];
            norm[base + i] += window.coeffs[i] * window.coeffs[i];
        }

        // Accumulate phase towards the next synthesis frame.
        if (ot + 1 < n_out_frames) {
            const double* p0 = phases.data() + t0 * n_bins;
            const double* p1 = phases.data() + t1 * n_bins;
            for (std::size_t b = 0; b < n_bins; ++b) {
                const double dphi = princarg(p1[b] - p0[b] - advance[b]);
                phase_acc[b] += advance[b] + dphi;
            }
        }
    }

    out.samples.resize(target_len, 0.0f);
    const std::size_t n_copy = std::min(target_len, out_len);
    for (std::size_t i = 0; i < n_copy; ++i) {
        out.samples[i] = norm[i] > 1e-9 ? static_cast<float>(acc[i] / norm[i]) : 0.0f;
    }
    return out;
}

audio::Waveform pitch_shift(const audio::Waveform& w, double semitones) {
    if (w.samples.empty()) return w;
    const double rate = std::pow(2.0, -semitones / 12.0);
    audio::Waveform stretched = time_stretch(w, rate);
    if (stretched.samples.empty()) return stretched;

    // Play the stretched signal back at the original length; frequencies
    // scale by 2^(semitones/12).
    audio::Waveform relabeled;
    relabeled.samples = std::move(stretched.samples);
    relabeled.sample_rate = static_cast<int>(relabeled.samples.size());
    audio::Waveform shrunk = audio::resample(relabeled, static_cast<int>(w.samples.size()));
    shrunk.sample_rate = w.sample_rate;
    return shrunk;
}

audio::Waveform time_shift(const audio::Waveform& w, double fraction) {
    audio::Waveform out;
    out.sample_rate = w.sample_rate;
    const std::size_t len = w.samples.size();
    if (len == 0) return out;
    const long long raw = std::llround(fraction * static_cast<double>(len));
    const long long n = static_cast<long long>(len);
    const long long shift = ((raw % n) + n) % n;
    out.samples.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
        const long long src = (static_cast<long long>(i) - shift % n + n) % n;
        out.samples[i] = w.samples[static_cast<std::size_t>(src)];
    }
    return out;
}

std::vector<AugmentedClip> augment_clip(const audio::Waveform& w, const AugmentSpec& spec,
                                        const std::vector<audio::Waveform>& noise_pool) {
    if (noise_pool.empty()) throw std::invalid_argument("augment_clip: empty noise pool");
    const double duration = w.duration_seconds();

    std::mt19937_64 rng(spec.seed);
    std::vector<AugmentedClip> out;
    out.reserve(6);

    auto canonical = [&](audio::Waveform v) { return audio::pad_or_trim(v, duration); };

    {
        const std::size_t donor = static_cast<std::size_t>(rng() % noise_pool.size());
        const double amp = uniform_in(rng, spec.noise_amp_min, spec.noise_amp_max);
        audio::Waveform noise = noise_pool[donor];
        if (noise.sample_rate != w.sample_rate) noise = audio::resample(noise, w.sample_rate);
        AugmentedClip c;
        c.wave = canonical(mix_background_noise(w, noise, amp));
        c.aug_type = "noise_mix";
        c.param = amp;
        c.noise_donor = static_cast<int>(donor);
        out.push_back(std::move(c));
    }
    {
        const double rate = uniform_in(rng, spec.stretch_min, spec.stretch_max);
        out.push_back({canonical(time_stretch(w, rate)), "time_stretch", rate, -1});
    }
    for (int k = 0; k < 3; ++k) {
        const double semitones = uniform_in(rng, spec.pitch_min, spec.pitch_max);
        out.push_back({canonical(pitch_shift(w, semitones)), "pitch_shift", semitones, -1});
    }
    {
        const double fraction = uniform_in(rng, spec.shift_min, spec.shift_max);
        out.push_back({canonical(time_shift(w, fraction)), "time_shift", fraction, -1});
    }
    return out;
}

std::uint64_t derive_seed(std::uint64_t master_seed, const std::string& clip_id) {
    std::uint64_t h = 1469598103934665603ull ^ master_seed;
    for (unsigned char c : clip_id) {
        h ^= c;
        h *= 1099511628211ull;
    }
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdull;
    h ^= h >> 33;
    return h;
}

}  // namespace roadsound::augment
