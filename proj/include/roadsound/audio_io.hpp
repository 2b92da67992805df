#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace roadsound::audio {

// Mono sample sequence with its rate. Amplitudes are nominally in [-1, 1];
// intermediate processing may exceed that until peak_normalize is applied.
struct Waveform {
    std::vector<float> samples;
    int sample_rate = 0;

    std::size_t size() const { return samples.size(); }
    double duration_seconds() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

// Decodes RIFF/WAVE, PCM 16-bit or IEEE-float 32-bit, 1 or 2 channels.
// Stereo is downmixed by channel averaging; PCM is scaled by 1/32768.
Waveform read_wav(const std::string& path);

// Writes PCM 16-bit mono.
void write_wav(const std::string& path, const Waveform& w);

// Band-limited rate conversion (windowed-sinc, 32 zero-crossings per side,
// Hann-windowed, cutoff at the lower Nyquist). Output length is
// round(len * target / source). Identity when rates already match.
Waveform resample(const Waveform& w, int target_rate);

// Zero-pads at the end or truncates at the end to exactly duration*rate samples.
Waveform pad_or_trim(const Waveform& w, double duration_seconds);

// Scales so max |sample| = 1. All-zero input is returned unchanged.
Waveform peak_normalize(const Waveform& w);

}  // namespace roadsound::audio
