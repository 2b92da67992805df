#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roadsound/nn/model.hpp"

namespace roadsound::nn {

// Everything inference needs besides the weights: the class names in label-id
// order, the hash of the feature configuration the network was trained on,
// per-channel standardization statistics, and the training seed.
struct CheckpointMeta {
    std::vector<std::string> labels;
    std::uint64_t feature_config_hash = 0;
    std::vector<double> channel_mean;
    std::vector<double> channel_std;
    std::uint64_t seed = 0;
};

// Binary container: magic + version, a JSON descriptor (model shape, tensor
// table, metadata), raw float32 blobs in descriptor order, and a trailing
// CRC32 over all preceding bytes.
void save_checkpoint(const std::string& path, const Network<float>& net,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
    Network<float> net;
    CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace roadsound::nn
