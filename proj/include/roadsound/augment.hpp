#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roadsound/audio_io.hpp"

namespace roadsound::augment {

// Parameter ranges for the six augmented variants. The seed fully
// determines every random draw.
struct AugmentSpec {
    double noise_amp_min = 0.001;
    double noise_amp_max = 0.015;
    double stretch_min = 0.8;
    double stretch_max = 1.25;
    double pitch_min = -4.0;
    double pitch_max = 4.0;
    double shift_min = -0.5;
    double shift_max = 0.5;
    std::uint64_t seed = 0;
};

// out[i] = clamp(w[i] + amp * noise[i], -1, 1). The noise is looped when
// shorter than the clip; rates must match.
audio::Waveform mix_background_noise(const audio::Waveform& w, const audio::Waveform& noise,
                                     double amp);

// Phase-vocoder time-scale modification: output duration = input/rate within
// one frame, pitch preserved. Frame 2048, hop 512 at the clip's native rate.
audio::Waveform time_stretch(const audio::Waveform& w, double rate);

// Time-stretch by 2^(-semitones/12) followed by resampling back to the
// original length, so a tone at f moves to f * 2^(semitones/12).
audio::Waveform pitch_shift(const audio::Waveform& w, double semitones);

// Circular rotation by round(fraction * len) samples.
audio::Waveform time_shift(const audio::Waveform& w, double fraction);

struct AugmentedClip {
    audio::Waveform wave;
    std::string aug_type;   // noise_mix | time_stretch | pitch_shift | time_shift
    double param = 0.0;     // amp, rate, semitones, or fraction
    int noise_donor = -1;   // index into the noise pool, noise_mix only
};

// The six variants in fixed order: noise-mix, time-stretch, three pitch
// shifts, time-shift. Every output is padded/trimmed to the input's length.
std::vector<AugmentedClip> augment_clip(const audio::Waveform& w, const AugmentSpec& spec,
                                        const std::vector<audio::Waveform>& noise_pool);

// Stable per-clip seed so parallel order never changes results.
std::uint64_t derive_seed(std::uint64_t master_seed, const std::string& clip_id);

}  // namespace roadsound::augment
