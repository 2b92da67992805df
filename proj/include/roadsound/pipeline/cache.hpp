#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roadsound/dsp.hpp"

namespace roadsound::pipeline {

// Extracted features for a set of clips, keyed by clip id, together with the
// hash of the feature configuration that produced them. Callers must compare
// the hash against their current configuration and refuse stale caches.
struct CachedFeatures {
    std::uint64_t config_hash = 0;
    std::vector<std::string> ids;
    std::vector<dsp::FeatureVolume> volumes;  // parallel to ids

    int find(const std::string& id) const;  // index or -1
};

// Single binary file: magic, version, config hash, entry count, per-entry id
// and three float32 planes, CRC32 trailer.
void save_feature_cache(const std::string& path, const CachedFeatures& cache);
CachedFeatures load_feature_cache(const std::string& path);

}  // namespace roadsound::pipeline
