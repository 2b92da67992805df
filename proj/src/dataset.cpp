#include "roadsound/pipeline/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>

#include "roadsound/nn/train.hpp"

namespace roadsound::pipeline {

Manifest split_then_augment(const Manifest& originals, const std::string& out_dir,
                            const SplitAugmentConfig& config) {
    for (const auto& row : originals) {
        if (!row.is_original() || !row.split.empty()) {
            throw std::invalid_argument(
                "split_then_augment: input manifest must contain unsplit originals only");
        }
    }
    if (originals.empty()) throw std::invalid_argument("split_then_augment: empty manifest");

    const std::vector<std::string> labels = label_names(originals);
    std::vector<int> y;
    y.reserve(originals.size());
    for (const auto& row : originals) y.push_back(label_index(labels, row.label));

    const nn::SplitIndices split =
        nn::stratified_split(y, config.train_fraction, config.seed);

    Manifest out = originals;
    for (std::size_t i : split.first) out[i].split = "train";
    for (std::size_t i : split.second) out[i].split = "test";

    const std::set<std::string> excluded(config.exclude_labels.begin(),
                                         config.exclude_labels.end());

    // Noise donors: train originals of the noise label, loaded once.
    std::vector<std::size_t> donor_rows;
    for (std::size_t i : split.first) {
        if (out[i].label == config.noise_label) donor_rows.push_back(i);
    }
    std::sort(donor_rows.begin(), donor_rows.end());
    std::vector<audio::Waveform> donor_waves;
    donor_waves.reserve(donor_rows.size());
    for (std::size_t i : donor_rows) donor_waves.push_back(audio::read_wav(out[i].path));

    std::vector<std::size_t> to_augment;
    for (std::size_t i : split.first) {
        if (!excluded.count(out[i].label)) to_augment.push_back(i);
    }
    std::sort(to_augment.begin(), to_augment.end());  // row order, independent of shuffle
    if (!to_augment.empty() && donor_rows.empty()) {
        throw std::invalid_argument("split_then_augment: no train clips with noise label '" +
                                    config.noise_label + "' to donate background noise");
    }

    namespace fs = std::filesystem;
    const fs::path aug_dir = fs::path(out_dir) / "clips_aug";
    if (!to_augment.empty()) fs::create_directories(aug_dir);

    Manifest variants;
    for (std::size_t i : to_augment) {
        const ManifestRow& parent = out[i];
        audio::Waveform w = audio::read_wav(parent.path);

        // Donor pool at the clip's sample rate, with the clip itself left out
        // when an alternative exists.
        std::vector<audio::Waveform> pool;
        std::vector<std::string> pool_ids;
        for (std::size_t d = 0; d < donor_rows.size(); ++d) {
            if (out[donor_rows[d]].clip_id == parent.clip_id && donor_rows.size() > 1) continue;
            pool.push_back(audio::resample(donor_waves[d], w.sample_rate));
            pool_ids.push_back(out[donor_rows[d]].clip_id);
        }

        augment::AugmentSpec spec = config.augment;
        spec.seed = augment::derive_seed(config.seed, parent.clip_id);
        const std::vector<augment::AugmentedClip> clips = augment::augment_clip(w, spec, pool);

        for (std::size_t k = 0; k < clips.size(); ++k) {
            ManifestRow row;
            row.clip_id = parent.clip_id + "_aug" + std::to_string(k);
            row.label = parent.label;
            row.split = "train";
            row.parent_id = parent.clip_id;
            row.aug_type = clips[k].aug_type;
            row.aug_param = clips[k].param;
            if (clips[k].noise_donor >= 0) {
                row.aug_donor = pool_ids[static_cast<std::size_t>(clips[k].noise_donor)];
            }
            const fs::path p = aug_dir / (row.clip_id + ".wav");
            audio::write_wav(p.string(), clips[k].wave);
            row.path = p.string();
            variants.push_back(std::move(row));
        }
    }
    out.insert(out.end(), variants.begin(), variants.end());
    return out;
}

FeatureMatrix assemble_features(const Manifest& rows, const dsp::FeatureConfig& config,
                                const std::vector<std::string>& label_set,
                                CachedFeatures* cache) {
    FeatureMatrix fm;
    if (rows.empty()) return fm;
    fm.inputs = nn::Tensor<float>({rows.size(), config.out_frames, config.out_bands, 3});
    fm.labels.reserve(rows.size());
    fm.clip_ids.reserve(rows.size());

    std::map<std::string, std::size_t> cache_index;
    if (cache) {
        for (std::size_t i = 0; i < cache->ids.size(); ++i) cache_index[cache->ids[i]] = i;
    }

    const std::size_t plane = config.out_frames * config.out_bands;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const ManifestRow& row = rows[r];
        const dsp::FeatureVolume* vol = nullptr;
        dsp::FeatureVolume extracted;
        if (cache) {
            const auto it = cache_index.find(row.clip_id);
            if (it != cache_index.end()) vol = &cache->volumes[it->second];
        }
        if (!vol) {
            audio::Waveform w = audio::read_wav(row.path);
            w = audio::peak_normalize(w);
            w = audio::pad_or_trim(w, config.canonical_duration);
            extracted = dsp::extract_feature_volume(w, config);
            if (cache) {
                cache_index[row.clip_id] = cache->ids.size();
                cache->ids.push_back(row.clip_id);
                cache->volumes.push_back(std::move(extracted));
                vol = &cache->volumes.back();
            } else {
                vol = &extracted;
            }
        }
        if (vol->rows != config.out_frames || vol->cols != config.out_bands) {
            throw std::invalid_argument("assemble_features: cached volume for '" + row.clip_id +
                                        "' has the wrong shape");
        }
        float* dst = fm.inputs.data.data() + r * plane * 3;
        for (std::size_t ch = 0; ch < 3; ++ch) {
            const std::vector<float>& src = vol->channels[ch];
            for (std::size_t p = 0; p < plane; ++p) dst[p * 3 + ch] = src[p];
        }
        fm.labels.push_back(label_index(label_set, row.label));
        fm.clip_ids.push_back(row.clip_id);
    }
    return fm;
}

ChannelStats compute_channel_stats(const nn::Tensor<float>& inputs) {
    if (inputs.rank() != 4 || inputs.shape.back() != 3) {
        throw std::invalid_argument("compute_channel_stats: expected [N,H,W,3]");
    }
    ChannelStats stats;
    const std::size_t n = inputs.size() / 3;
    std::array<double, 3> sum{}, sum_sq{};
    for (std::size_t i = 0; i < inputs.size(); i += 3) {
        for (std::size_t ch = 0; ch < 3; ++ch) {
            const double v = inputs.data[i + ch];
            sum[ch] += v;
            sum_sq[ch] += v * v;
        }
    }
    for (std::size_t ch = 0; ch < 3; ++ch) {
        stats.mean[ch] = sum[ch] / static_cast<double>(n);
        const double var =
            std::max(0.0, sum_sq[ch] / static_cast<double>(n) - stats.mean[ch] * stats.mean[ch]);
        stats.stddev[ch] = std::sqrt(var);
    }
    return stats;
}

void standardize(nn::Tensor<float>& inputs, const ChannelStats& stats) {
    if (inputs.shape.back() != 3) {
        throw std::invalid_argument("standardize: expected trailing channel axis of 3");
    }
    std::array<float, 3> mean{}, inv{};
    for (std::size_t ch = 0; ch < 3; ++ch) {
        mean[ch] = static_cast<float>(stats.mean[ch]);
        inv[ch] = static_cast<float>(1.0 / std::max(stats.stddev[ch], 1e-6));
    }
    for (std::size_t i = 0; i < inputs.size(); i += 3) {
        for (std::size_t ch = 0; ch < 3; ++ch) {
            inputs.data[i + ch] = (inputs.data[i + ch] - mean[ch]) * inv[ch];
        }
    }
}

}  // namespace roadsound::pipeline
