#include "roadsound/pipeline/config.hpp"

#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "roadsound/errors.hpp"

namespace roadsound::pipeline {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != value.size() || value.empty()) {
        throw std::invalid_argument("config: key '" + key + "' needs a number, got '" + value +
                                    "'");
    }
    return v;
}

std::size_t parse_count(const std::string& key, const std::string& value) {
    const double v = parse_double(key, value);
    if (v < 0 || v != static_cast<double>(static_cast<long long>(v))) {
        throw std::invalid_argument("config: key '" + key + "' needs a non-negative integer");
    }
    return static_cast<std::size_t>(v);
}

std::vector<std::string> parse_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct Key {
    const char* name;
    const char* fallback;
    const char* help;
    std::function<void(PipelineConfig&, const std::string&)> apply;
};

const std::vector<Key>& key_table() {
    static const std::vector<Key> keys = {
        {"feature.duration_seconds", "5.0", "canonical clip length before feature extraction",
         [](PipelineConfig& c, const std::string& v) {
             c.features.canonical_duration = parse_double("feature.duration_seconds", v);
         }},
        {"feature.frames", "430", "output rows (time axis) of every feature channel",
         [](PipelineConfig& c, const std::string& v) {
             c.features.out_frames = parse_count("feature.frames", v);
         }},
        {"feature.bands", "128", "output columns (frequency axis) of every feature channel",
         [](PipelineConfig& c, const std::string& v) {
             c.features.out_bands = parse_count("feature.bands", v);
         }},
        {"feature.window", "hann", "analysis window: hann, hamming or rectangular",
         [](PipelineConfig& c, const std::string& v) {
             c.features.window = dsp::window_kind_from_string(v);
         }},
        {"feature.spectrogram_rate", "5490", "resample rate for the spectrogram channel (Hz)",
         [](PipelineConfig& c, const std::string& v) {
             c.features.spec_rate = static_cast<int>(parse_count("feature.spectrogram_rate", v));
         }},
        {"feature.spectrogram_window", "860", "spectrogram frame length (samples)",
         [](PipelineConfig& c, const std::string& v) {
             c.features.spec_window = parse_count("feature.spectrogram_window", v);
         }},
        {"feature.mfcc_rate", "44100", "resample rate for the MFCC channel (Hz)",
         [](PipelineConfig& c, const std::string& v) {
             c.features.mfcc_rate = static_cast<int>(parse_count("feature.mfcc_rate", v));
         }},
        {"feature.mfcc_window", "2048", "MFCC frame length (samples)",
         [](PipelineConfig& c, const std::string& v) {
             c.features.mfcc_window = parse_count("feature.mfcc_window", v);
         }},
        {"feature.mfcc_coeffs", "120", "number of cepstral coefficients kept",
         [](PipelineConfig& c, const std::string& v) {
             c.features.mfcc_coeffs = parse_count("feature.mfcc_coeffs", v);
         }},
        {"feature.mel_rate", "22100", "resample rate for the log-mel channel (Hz)",
         [](PipelineConfig& c, const std::string& v) {
             c.features.mel_rate = static_cast<int>(parse_count("feature.mel_rate", v));
         }},
        {"feature.mel_window_seconds", "0.71", "log-mel frame length (seconds)",
         [](PipelineConfig& c, const std::string& v) {
             c.features.mel_window_seconds = parse_double("feature.mel_window_seconds", v);
         }},
        {"augment.noise_amp_min", "0.001", "noise mix amplitude, lower bound",
         [](PipelineConfig& c, const std::string& v) {
             c.augment.noise_amp_min = parse_double("augment.noise_amp_min", v);
         }},
        {"augment.noise_amp_max", "0.015", "noise mix amplitude, upper bound",
         [](PipelineConfig& c, const std::string& v) {
             c.augment.noise_amp_max = parse_double("augment.noise_amp_max", v);
         }},
        {"augment.stretch_min", "0.8", "time-stretch rate, lower bound",
         [](PipelineConfig& c, const std::string& v) {
             c.augment.stretch_min = parse_double("augment.stretch_min", v);
         }},
        {"augment.stretch_max", "1.25", "time-stretch rate, upper bound",
         [](PipelineConfig& c, const std::string& v) {
             c.augment.stretch_max = parse_double("augment.stretch_max", v);
         }},
        {"augment.pitch_min", "-4", "pitch shift in semitones, lower bound",
         [](PipelineConfig& c, const std::string& v) {
             c.augment.pitch_min = parse_double("augment.pitch_min", v);
         }},
        {"augment.pitch_max", "4", "pitch shift in semitones, upper bound",
         [](PipelineConfig& c, const std::string& v) {
             c.augment.pitch_max = parse_double("augment.pitch_max", v);
         }},
        {"augment.shift_min", "-0.5", "circular time shift as a fraction, lower bound",
         [](PipelineConfig& c, const std::string& v) {
             c.augment.shift_min = parse_double("augment.shift_min", v);
         }},
        {"augment.shift_max", "0.5", "circular time shift as a fraction, upper bound",
         [](PipelineConfig& c, const std::string& v) {
             c.augment.shift_max = parse_double("augment.shift_max", v);
         }},
        {"augment.exclude", "", "comma-separated labels to leave unaugmented",
         [](PipelineConfig& c, const std::string& v) { c.augment_exclude = parse_list(v); }},
        {"augment.noise_label", "urban", "label whose train clips donate background noise",
         [](PipelineConfig& c, const std::string& v) { c.noise_label = trim(v); }},
        {"split.train_fraction", "0.8", "fraction of originals assigned to train",
         [](PipelineConfig& c, const std::string& v) {
             c.train_fraction = parse_double("split.train_fraction", v);
         }},
        {"train.batch_size", "16", "minibatch size",
         [](PipelineConfig& c, const std::string& v) {
             c.train.batch_size = parse_count("train.batch_size", v);
         }},
        {"train.epochs", "50", "maximum training epochs",
         [](PipelineConfig& c, const std::string& v) {
             c.train.epochs = parse_count("train.epochs", v);
         }},
        {"train.learning_rate", "0.001", "Adam learning rate",
         [](PipelineConfig& c, const std::string& v) {
             c.train.learning_rate = parse_double("train.learning_rate", v);
         }},
        {"train.patience", "8", "epochs without validation improvement before stopping",
         [](PipelineConfig& c, const std::string& v) {
             c.train.patience = parse_count("train.patience", v);
         }},
        {"train.val_fraction", "0.15", "fraction of train carved off for validation",
         [](PipelineConfig& c, const std::string& v) {
             c.train.val_fraction = parse_double("train.val_fraction", v);
         }},
        {"cv.repeats", "10", "number of repeated hold-out evaluations",
         [](PipelineConfig& c, const std::string& v) {
             c.cv_repeats = parse_count("cv.repeats", v);
         }},
        {"cv.train_fraction", "0.7", "train fraction for repeated hold-out evaluation",
         [](PipelineConfig& c, const std::string& v) {
             c.cv_train_fraction = parse_double("cv.train_fraction", v);
         }},
    };
    return keys;
}

}  // namespace

PipelineConfig parse_config_text(const std::string& text) {
    PipelineConfig config;
    std::map<std::string, const Key*> index;
    for (const Key& k : key_table()) index[k.name] = &k;

    std::stringstream ss(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                        ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = index.find(key);
        if (it == index.end()) {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
        it->second->apply(config, value);
    }
    return config;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

std::string config_keys() {
    std::string out;
    for (const Key& k : key_table()) {
        out += k.name;
        out += '\t';
        out += k.fallback;
        out += '\t';
        out += k.help;
        out += '\n';
    }
    return out;
}

}  // namespace roadsound::pipeline
