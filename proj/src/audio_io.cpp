#include "roadsound/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "roadsound/errors.hpp"

namespace roadsound::audio {

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatIeeeFloat = 3;

uint32_t read_u32(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const unsigned char* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void put_u16(std::vector<unsigned char>& out, uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

}  // namespace

Waveform read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());

    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw DecodeError(path + ": not a RIFF/WAVE file");
    }

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    bool have_fmt = false;
    const unsigned char* data = nullptr;
    std::size_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* hdr = bytes.data() + pos;
        uint32_t chunk_size = read_u32(hdr + 4);
        pos += 8;
        if (pos + chunk_size > bytes.size()) throw DecodeError(path + ": truncated chunk");
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (chunk_size < 16) throw DecodeError(path + ": fmt chunk too small");
            format = read_u16(bytes.data() + pos);
            channels = read_u16(bytes.data() + pos + 2);
            rate = read_u32(bytes.data() + pos + 4);
            bits = read_u16(bytes.data() + pos + 14);
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            data = bytes.data() + pos;
            data_size = chunk_size;
        }
        pos += chunk_size + (chunk_size & 1);  // chunks are word-aligned
    }

    if (!have_fmt || data == nullptr) throw DecodeError(path + ": missing fmt or data chunk");
    if (rate == 0) throw DecodeError(path + ": zero sample rate");
    if (channels != 1 && channels != 2) {
        throw UnsupportedFormatError(path + ": " + std::to_string(channels) + " channels");
    }

    const bool pcm16 = format == kFormatPcm && bits == 16;
    const bool f32 = format == kFormatIeeeFloat && bits == 32;
    if (!pcm16 && !f32) {
        throw UnsupportedFormatError(path + ": format " + std::to_string(format) + "/" +
                                     std::to_string(bits) + "-bit");
    }

    const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
    const std::size_t frame_bytes = bytes_per_sample * channels;
    const std::size_t n_frames = data_size / frame_bytes;

    Waveform w;
    w.sample_rate = static_cast<int>(rate);
    w.samples.resize(n_frames);
    for (std::size_t i = 0; i < n_frames; ++i) {
        float acc = 0.0f;
        for (unsigned c = 0; c < channels; ++c) {
            const unsigned char* p = data + i * frame_bytes + c * bytes_per_sample;
            if (pcm16) {
                int16_t v = static_cast<int16_t>(p[0] | (p[1] << 8));
                acc += static_cast<float>(v) / 32768.0f;
            } else {
                float v;
                std::memcpy(&v, p, 4);
                acc += v;
            }
        }
        w.samples[i] = acc / static_cast<float>(channels);
    }
    return w;
}

void write_wav(const std::string& path, const Waveform& w) {
    if (w.sample_rate <= 0) throw std::invalid_argument("write_wav: sample_rate must be positive");
    const uint32_t data_size = static_cast<uint32_t>(w.samples.size() * 2);

    std::vector<unsigned char> out;
    out.reserve(44 + data_size);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, 36 + data_size);
    out.insert(out.end(), {'W', 'A', 'V', 'E'});
    out.insert(out.end(), {'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, kFormatPcm);
    put_u16(out, 1);  // mono
    put_u32(out, static_cast<uint32_t>(w.sample_rate));
    put_u32(out, static_cast<uint32_t>(w.sample_rate) * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, data_size);
    for (float s : w.samples) {
        double v = std::lrint(static_cast<double>(s) * 32768.0);
        v = std::clamp(v, -32768.0, 32767.0);
        put_u16(out, static_cast<uint16_t>(static_cast<int16_t>(v)));
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("short write to " + path);
}

Waveform resample(const Waveform& w, int target_rate) {
    if (target_rate <= 0) throw std::invalid_argument("resample: target_rate must be positive");
    if (w.sample_rate <= 0) throw std::invalid_argument("resample: source rate must be positive");
    if (target_rate == w.sample_rate) return w;

    Waveform out;
    out.sample_rate = target_rate;
    if (w.samples.empty()) return out;

    const double ratio = static_cast<double>(target_rate) / w.sample_rate;
    const double cutoff = std::min(1.0, ratio);  // anti-alias at the lower Nyquist
    const int zero_crossings = 32;
    const double half_width = zero_crossings / cutoff;  // kernel support in source samples

    const std::size_t out_len =
        static_cast<std::size_t>(std::llround(static_cast<double>(w.samples.size()) * ratio));
    out.samples.resize(out_len);

    const std::size_t n = w.samples.size();
    for (std::size_t j = 0; j < out_len; ++j) {
        const double t = static_cast<double>(j) / ratio;  // source-sample position
        const long lo = std::max<long>(0, static_cast<long>(std::ceil(t - half_width)));
        const long hi = std::min<long>(static_cast<long>(n) - 1,
                                       static_cast<long>(std::floor(t + half_width)));
        double acc = 0.0;
        for (long i = lo; i <= hi; ++i) {
            const double u = cutoff * (t - i);
            double sinc = 1.0;
            if (u != 0.0) {
                const double pu = M_PI * u;
                sinc = std::sin(pu) / pu;
            }
            const double window = 0.5 + 0.5 * std::cos(M_PI * u / zero_crossings);
            acc += static_cast<double>(w.samples[i]) * cutoff * sinc * window;
        }
        out.samples[j] = static_cast<float>(acc);
    }
    return out;
}

Waveform pad_or_trim(const Waveform& w, double duration_seconds) {
    if (duration_seconds <= 0) throw std::invalid_argument("pad_or_trim: duration must be positive");
    if (w.sample_rate <= 0) throw std::invalid_argument("pad_or_trim: sample_rate must be positive");
    const std::size_t target =
        static_cast<std::size_t>(std::llround(duration_seconds * w.sample_rate));
    Waveform out;
    out.sample_rate = w.sample_rate;
    out.samples = w.samples;
    out.samples.resize(target, 0.0f);
    return out;
}

Waveform peak_normalize(const Waveform& w) {
    float peak = 0.0f;
    for (float s : w.samples) peak = std::max(peak, std::fabs(s));
    if (peak == 0.0f) return w;
    Waveform out;
    out.sample_rate = w.sample_rate;
    out.samples.resize(w.samples.size());
    for (std::size_t i = 0; i < w.samples.size(); ++i) out.samples[i] = w.samples[i] / peak;
    return out;
}

}  // namespace roadsound::audio
