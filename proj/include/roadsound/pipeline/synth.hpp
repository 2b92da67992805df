#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roadsound/audio_io.hpp"
#include "roadsound/pipeline/manifest.hpp"

namespace roadsound::pipeline {

// Five acoustic families with distinct spectro-temporal signatures:
//   crash  - single broadband burst with a sharp attack and fast decay
//   horn   - steady harmonic stack gated into honks
//   siren  - narrowband tone sweeping slowly up and down
//   skid   - sustained high-band noise with a falling resonance
//   urban  - low-level wideband ambience with slow amplitude drift
const std::vector<std::string>& synth_labels();

struct SynthConfig {
    std::size_t clips_per_class = 8;
    int sample_rate = 16000;
    double duration_seconds = 5.0;
    std::uint64_t seed = 0;
};

// One deterministic clip; the seed alone decides every random choice.
audio::Waveform synth_clip(const std::string& label, int sample_rate, double duration_seconds,
                           std::uint64_t seed);

// Writes <dir>/clips/*.wav and <dir>/manifest.csv, and returns the manifest
// (paths resolved). Rerunning with the same config reproduces identical files.
Manifest generate_corpus(const std::string& dir, const SynthConfig& config);

}  // namespace roadsound::pipeline
