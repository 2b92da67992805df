#include "roadsound/pipeline/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <stdexcept>

#include "roadsound/augment.hpp"
#include "roadsound/rng.hpp"

namespace roadsound::pipeline {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

using rng::uniform_in;

struct Clip {
    std::vector<double> s;
    int rate;

    explicit Clip(int sample_rate, double duration)
        : s(static_cast<std::size_t>(std::llround(duration * sample_rate)), 0.0),
          rate(sample_rate) {}

    double t(std::size_t i) const { return static_cast<double>(i) / rate; }
};

void add_noise(Clip& clip, std::mt19937_64& g, double amp) {
    for (auto& v : clip.s) v += amp * uniform_in(g, -1.0, 1.0);
}

// crash: quiet until a broadband burst with instant attack and exponential
// decay, plus a short low-frequency rumble under it.
void synth_crash(Clip& clip, std::mt19937_64& g) {
    const double onset = uniform_in(g, 0.4, clip.t(clip.s.size() - 1) - 1.2);
    const double tau = uniform_in(g, 0.12, 0.35);
    const double rumble_hz = uniform_in(g, 40.0, 90.0);
    const double amp = uniform_in(g, 0.75, 0.95);
    for (std::size_t i = 0; i < clip.s.size(); ++i) {
        const double dt = clip.t(i) - onset;
        if (dt < 0.0) continue;
        const double env = std::exp(-dt / tau);
        clip.s[i] += amp * env * uniform_in(g, -1.0, 1.0);
        clip.s[i] += 0.3 * amp * std::exp(-dt / (2.5 * tau)) * std::sin(kTwoPi * rumble_hz * dt);
    }
}

// horn: three-harmonic stack switched on and off in honks.
void synth_horn(Clip& clip, std::mt19937_64& g) {
    const double f0 = uniform_in(g, 340.0, 480.0);
    double t_on = uniform_in(g, 0.1, 0.6);
    std::vector<std::pair<double, double>> honks;
    const double total = clip.t(clip.s.size() - 1);
    while (t_on < total) {
        const double len = uniform_in(g, 0.35, 0.9);
        honks.emplace_back(t_on, std::min(t_on + len, total));
        t_on += len + uniform_in(g, 0.25, 0.7);
    }
    for (std::size_t i = 0; i < clip.s.size(); ++i) {
        const double t = clip.t(i);
        bool on = false;
        for (const auto& [a, b] : honks) {
            if (t >= a && t < b) {
                on = true;
                break;
            }
        }
        if (!on) continue;
        clip.s[i] += 0.45 * std::sin(kTwoPi * f0 * t) + 0.28 * std::sin(kTwoPi * 2.0 * f0 * t) +
                     0.16 * std::sin(kTwoPi * 3.0 * f0 * t);
    }
}

// siren: narrowband tone whose frequency follows a slow triangle wave.
void synth_siren(Clip& clip, std::mt19937_64& g) {
    const double f_lo = uniform_in(g, 550.0, 700.0);
    const double f_hi = uniform_in(g, 1100.0, 1400.0);
    const double period = uniform_in(g, 1.4, 2.8);
    double phase = 0.0;
    for (std::size_t i = 0; i < clip.s.size(); ++i) {
        const double t = clip.t(i);
        const double saw = std::fmod(t / period, 1.0);
        const double tri = saw < 0.5 ? 2.0 * saw : 2.0 - 2.0 * saw;
        const double f = f_lo + (f_hi - f_lo) * tri;
        phase += kTwoPi * f / clip.rate;
        clip.s[i] += 0.55 * std::sin(phase) + 0.12 * std::sin(2.0 * phase);
    }
}

// skid: high-band noise (ring-modulated) whose resonance drifts downward
// while the level ramps up and holds.
void synth_skid(Clip& clip, std::mt19937_64& g) {
    const double fc0 = uniform_in(g, 2800.0, 3600.0);
    const double drop = uniform_in(g, 0.7, 0.85);
    const double ramp = uniform_in(g, 0.3, 0.8);
    const double total = clip.t(clip.s.size() - 1);
    double phase = 0.0;
    for (std::size_t i = 0; i < clip.s.size(); ++i) {
        const double t = clip.t(i);
        const double frac = t / total;
        const double fc = fc0 * (1.0 - (1.0 - drop) * frac);
        phase += kTwoPi * fc / clip.rate;
        const double env = std::min(1.0, t / ramp);
        clip.s[i] += 0.5 * env * std::sin(phase) * uniform_in(g, 0.2, 1.0);
    }
}

// urban: unstructured ambience, wideband noise with slow amplitude drift and
// a faint mains hum.
void synth_urban(Clip& clip, std::mt19937_64& g) {
    const double am_hz = uniform_in(g, 0.25, 0.9);
    const double am_phase = uniform_in(g, 0.0, kTwoPi);
    const double hum_hz = uniform_in(g, 0.0, 1.0) < 0.5 ? 50.0 : 60.0;
    double smooth = 0.0;
    for (std::size_t i = 0; i < clip.s.size(); ++i) {
        const double t = clip.t(i);
        const double am = 1.0 + 0.4 * std::sin(kTwoPi * am_hz * t + am_phase);
        // one-pole lowpass on white noise tilts the spectrum toward low bands
        smooth = 0.85 * smooth + 0.15 * uniform_in(g, -1.0, 1.0);
        clip.s[i] += 0.35 * am * smooth + 0.04 * std::sin(kTwoPi * hum_hz * t);
    }
}

}  // namespace

const std::vector<std::string>& synth_labels() {
    static const std::vector<std::string> labels = {"crash", "horn", "siren", "skid", "urban"};
    return labels;
}

audio::Waveform synth_clip(const std::string& label, int sample_rate, double duration_seconds,
                           std::uint64_t seed) {
    if (sample_rate <= 0 || duration_seconds <= 0.0) {
        throw std::invalid_argument("synth_clip: bad rate or duration");
    }
    Clip clip(sample_rate, duration_seconds);
    std::mt19937_64 g(seed);
    add_noise(clip, g, 0.01);
    if (label == "crash") {
        synth_crash(clip, g);
    } else if (label == "horn") {
        synth_horn(clip, g);
    } else if (label == "siren") {
        synth_siren(clip, g);
    } else if (label == "skid") {
        synth_skid(clip, g);
    } else if (label == "urban") {
        synth_urban(clip, g);
    } else {
        throw std::invalid_argument("synth_clip: unknown label '" + label + "'");
    }

    double peak = 0.0;
    for (double v : clip.s) peak = std::max(peak, std::abs(v));
    const double scale = peak > 1.0 ? 0.99 / peak : 1.0;

    audio::Waveform w;
    w.sample_rate = sample_rate;
    w.samples.resize(clip.s.size());
    for (std::size_t i = 0; i < clip.s.size(); ++i) {
        w.samples[i] = static_cast<float>(scale * clip.s[i]);
    }
    return w;
}

Manifest generate_corpus(const std::string& dir, const SynthConfig& config) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    fs::create_directories(root / "clips");

    Manifest manifest;
    for (const std::string& label : synth_labels()) {
        for (std::size_t i = 0; i < config.clips_per_class; ++i) {
            char id[64];
            std::snprintf(id, sizeof(id), "%s_%03zu", label.c_str(), i);
            const audio::Waveform w =
                synth_clip(label, config.sample_rate, config.duration_seconds,
                           augment::derive_seed(config.seed, id));
            const fs::path rel = fs::path("clips") / (std::string(id) + ".wav");
            audio::write_wav((root / rel).string(), w);
            ManifestRow row;
            row.clip_id = id;
            row.path = (root / rel).string();
            row.label = label;
            manifest.push_back(std::move(row));
        }
    }
    save_manifest((root / "manifest.csv").string(), manifest);
    return manifest;
}

}  // namespace roadsound::pipeline
