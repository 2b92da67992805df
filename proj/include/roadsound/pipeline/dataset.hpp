#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "roadsound/augment.hpp"
#include "roadsound/dsp.hpp"
#include "roadsound/nn/tensor.hpp"
#include "roadsound/pipeline/cache.hpp"
#include "roadsound/pipeline/manifest.hpp"

namespace roadsound::pipeline {

struct SplitAugmentConfig {
    double train_fraction = 0.8;
    augment::AugmentSpec augment;              // per-clip seeds derive from `seed`
    std::vector<std::string> exclude_labels;   // labels left unaugmented
    std::string noise_label = "urban";
    std::uint64_t seed = 0;
};

// Stratified split of original clips first, then augmentation of train
// originals only: each eligible train original yields six variants written
// under <out_dir>/clips_aug/. Noise donors come exclusively from train clips
// of the noise label, so nothing derived from the test set can reach
// training. Returns the extended manifest (split column + variant rows).
Manifest split_then_augment(const Manifest& originals, const std::string& out_dir,
                            const SplitAugmentConfig& config);

// Feature tensors for a set of manifest rows, in row order. Volumes found in
// `cache` (matching id) are reused; missing ones are extracted from audio
// (peak-normalize, pad or trim to the canonical duration, then the three
// feature channels) and appended to `cache`. The caller owns persistence.
struct FeatureMatrix {
    nn::Tensor<float> inputs{std::vector<std::size_t>{0}};  // [N, frames, bands, 3]
    std::vector<int> labels;
    std::vector<std::string> clip_ids;
};

FeatureMatrix assemble_features(const Manifest& rows, const dsp::FeatureConfig& config,
                                const std::vector<std::string>& label_set,
                                CachedFeatures* cache);

// Per-channel scalar standardization, fitted on training data only.
struct ChannelStats {
    std::array<double, 3> mean{};
    std::array<double, 3> stddev{};
};

ChannelStats compute_channel_stats(const nn::Tensor<float>& inputs);
void standardize(nn::Tensor<float>& inputs, const ChannelStats& stats);

}  // namespace roadsound::pipeline
