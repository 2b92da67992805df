#pragma once

#include <string>
#include <vector>

#include "roadsound/augment.hpp"
#include "roadsound/dsp.hpp"
#include "roadsound/nn/train.hpp"

namespace roadsound::pipeline {

// Everything the pipeline stages read, with the defaults used when a key is
// absent. Seeds are injected by the caller, not read from config files.
struct PipelineConfig {
    dsp::FeatureConfig features;

    augment::AugmentSpec augment;
    std::vector<std::string> augment_exclude;  // labels left unaugmented
    std::string noise_label = "urban";         // donor class for noise mixes

    double train_fraction = 0.8;

    nn::TrainConfig train;

    std::size_t cv_repeats = 10;
    double cv_train_fraction = 0.7;
};

// Flat `key = value` lines; '#' starts a comment, blank lines are skipped,
// unknown keys are errors. See config_keys() for the full key list.
PipelineConfig parse_config_text(const std::string& text);
PipelineConfig load_config(const std::string& path);

// "key<TAB>default<TAB>description" per line, for --help style output.
std::string config_keys();

}  // namespace roadsound::pipeline
