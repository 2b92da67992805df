// Command-line front end for the roadway sound pipeline: synthetic corpus
// generation, feature extraction with caching, split + augmentation, training,
// evaluation and single-file prediction.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "roadsound/eval.hpp"
#include "roadsound/nn/checkpoint.hpp"
#include "roadsound/nn/train.hpp"
#include "roadsound/pipeline/cache.hpp"
#include "roadsound/pipeline/config.hpp"
#include "roadsound/pipeline/dataset.hpp"
#include "roadsound/pipeline/manifest.hpp"
#include "roadsound/pipeline/synth.hpp"

namespace {

using namespace roadsound;

constexpr const char* kVersion = "roadsound 1.0.0";

pipeline::PipelineConfig read_config(const std::string& path) {
    if (path.empty()) return pipeline::PipelineConfig{};
    return pipeline::load_config(path);
}

// Loads the cache when the file exists; a hash mismatch is a hard error so a
// stale cache can never silently feed the pipeline.
pipeline::CachedFeatures open_cache(const std::string& path, std::uint64_t config_hash,
                                    bool refresh) {
    pipeline::CachedFeatures cache;
    cache.config_hash = config_hash;
    if (path.empty() || !std::filesystem::exists(path)) return cache;
    if (refresh) return cache;
    pipeline::CachedFeatures loaded = pipeline::load_feature_cache(path);
    if (loaded.config_hash != config_hash) {
        throw std::runtime_error("feature cache '" + path +
                                 "' was built with different feature settings; delete it or "
                                 "rerun `features --refresh`");
    }
    return loaded;
}

pipeline::Manifest rows_with_split(const pipeline::Manifest& manifest, const std::string& split) {
    pipeline::Manifest rows;
    for (const auto& r : manifest) {
        if (r.split == split) rows.push_back(r);
    }
    if (rows.empty()) {
        throw std::runtime_error("manifest has no rows with split '" + split +
                                 "'; run the augment command first");
    }
    return rows;
}

void require_clean_split(const pipeline::Manifest& manifest) {
    const std::vector<std::string> violations = pipeline::audit_split(manifest);
    if (!violations.empty()) {
        std::string msg = "split audit failed: " + violations.front();
        if (violations.size() > 1) {
            msg += " (and " + std::to_string(violations.size() - 1) + " more)";
        }
        throw std::runtime_error(msg);
    }
}

int cmd_synth(const std::string& out_dir, std::size_t per_class, int rate, double duration,
              std::uint64_t seed) {
    pipeline::SynthConfig config;
    config.clips_per_class = per_class;
    config.sample_rate = rate;
    config.duration_seconds = duration;
    config.seed = seed;
    const pipeline::Manifest manifest = pipeline::generate_corpus(out_dir, config);
    std::printf("wrote %zu clips to %s\n", manifest.size(), out_dir.c_str());
    return 0;
}

int cmd_features(const std::string& manifest_path, const std::string& cache_path,
                 const std::string& config_path, bool refresh) {
    const pipeline::PipelineConfig config = read_config(config_path);
    const pipeline::Manifest manifest = pipeline::load_manifest(manifest_path);
    const std::uint64_t hash = config.features.hash();
    pipeline::CachedFeatures cache = open_cache(cache_path, hash, refresh);
    const std::size_t had = cache.ids.size();
    pipeline::assemble_features(manifest, config.features,
                                pipeline::label_names(manifest), &cache);
    pipeline::save_feature_cache(cache_path, cache);
    std::printf("cache %s: %zu volumes (%zu new)\n", cache_path.c_str(), cache.ids.size(),
                cache.ids.size() - had);
    return 0;
}

int cmd_augment(const std::string& manifest_path, const std::string& out_dir,
                const std::string& config_path, std::uint64_t seed) {
    const pipeline::PipelineConfig config = read_config(config_path);
    const pipeline::Manifest originals = pipeline::load_manifest(manifest_path);

    pipeline::SplitAugmentConfig sa;
    sa.train_fraction = config.train_fraction;
    sa.augment = config.augment;
    sa.exclude_labels = config.augment_exclude;
    sa.noise_label = config.noise_label;
    sa.seed = seed;
    const pipeline::Manifest extended = pipeline::split_then_augment(originals, out_dir, sa);
    require_clean_split(extended);

    const std::string out_manifest =
        (std::filesystem::path(out_dir) / "manifest_augmented.csv").string();
    pipeline::save_manifest(out_manifest, extended);
    std::size_t n_train = 0, n_test = 0;
    for (const auto& r : extended) (r.split == "train" ? n_train : n_test) += 1;
    std::printf("wrote %s: %zu train (%zu original), %zu test\n", out_manifest.c_str(), n_train,
                originals.size() - n_test, n_test);
    return 0;
}

int cmd_train(const std::string& manifest_path, const std::string& checkpoint_path,
              const std::string& config_path, const std::string& cache_path, std::uint64_t seed,
              bool verbose) {
    const pipeline::PipelineConfig config = read_config(config_path);
    const pipeline::Manifest manifest = pipeline::load_manifest(manifest_path);
    require_clean_split(manifest);
    const pipeline::Manifest train_rows = rows_with_split(manifest, "train");
    const std::vector<std::string> labels = pipeline::label_names(manifest);

    const std::uint64_t hash = config.features.hash();
    pipeline::CachedFeatures cache = open_cache(cache_path, hash, false);
    pipeline::FeatureMatrix fm =
        pipeline::assemble_features(train_rows, config.features, labels, &cache);
    if (!cache_path.empty()) pipeline::save_feature_cache(cache_path, cache);

    const pipeline::ChannelStats stats = pipeline::compute_channel_stats(fm.inputs);
    pipeline::standardize(fm.inputs, stats);

    nn::Network<float> net(nn::default_model_spec(config.features.out_frames,
                                                  config.features.out_bands, 3, labels.size()));
    net.init_parameters(seed);
    std::printf("training on %zu clips, %zu parameters\n", train_rows.size(),
                net.parameter_count());

    nn::TrainConfig tc = config.train;
    tc.seed = seed;
    tc.verbose = verbose;
    const nn::TrainResult result = nn::train(net, fm.inputs, fm.labels, tc);
    if (result.aborted_on_nan) {
        std::fprintf(stderr, "warning: training aborted on a non-finite loss; "
                             "kept the best earlier parameters\n");
    }
    if (!result.history.empty()) {
        const nn::EpochStats& best = result.history[result.best_epoch];
        std::printf("best epoch %zu/%zu: val accuracy %.4f, val loss %.4f\n",
                    result.best_epoch + 1, result.history.size(), best.val_accuracy,
                    best.val_loss);
    }

    nn::CheckpointMeta meta;
    meta.labels = labels;
    meta.feature_config_hash = hash;
    meta.channel_mean.assign(stats.mean.begin(), stats.mean.end());
    meta.channel_std.assign(stats.stddev.begin(), stats.stddev.end());
    meta.seed = seed;
    nn::save_checkpoint(checkpoint_path, net, meta);
    std::printf("checkpoint written to %s\n", checkpoint_path.c_str());
    return 0;
}

pipeline::ChannelStats stats_from_meta(const nn::CheckpointMeta& meta) {
    if (meta.channel_mean.size() != 3 || meta.channel_std.size() != 3) {
        throw std::runtime_error("checkpoint has malformed standardization statistics");
    }
    pipeline::ChannelStats stats;
    for (std::size_t i = 0; i < 3; ++i) {
        stats.mean[i] = meta.channel_mean[i];
        stats.stddev[i] = meta.channel_std[i];
    }
    return stats;
}

void require_matching_features(const pipeline::PipelineConfig& config,
                               const nn::CheckpointMeta& meta) {
    if (config.features.hash() != meta.feature_config_hash) {
        throw std::runtime_error(
            "feature settings do not match the checkpoint; pass the config the model was "
            "trained with");
    }
}

int cmd_eval(const std::string& manifest_path, const std::string& checkpoint_path,
             const std::string& report_path, const std::string& report_json_path,
             const std::string& config_path, const std::string& cache_path) {
    const pipeline::PipelineConfig config = read_config(config_path);
    nn::LoadedCheckpoint ckpt = nn::load_checkpoint(checkpoint_path);
    require_matching_features(config, ckpt.meta);

    const pipeline::Manifest manifest = pipeline::load_manifest(manifest_path);
    require_clean_split(manifest);
    const pipeline::Manifest test_rows = rows_with_split(manifest, "test");

    pipeline::CachedFeatures cache = open_cache(cache_path, ckpt.meta.feature_config_hash, false);
    pipeline::FeatureMatrix fm =
        pipeline::assemble_features(test_rows, config.features, ckpt.meta.labels, &cache);
    if (!cache_path.empty()) pipeline::save_feature_cache(cache_path, cache);
    pipeline::standardize(fm.inputs, stats_from_meta(ckpt.meta));

    const std::vector<int> predicted = nn::predict_labels(ckpt.net, fm.inputs);
    const eval::MetricsReport report =
        eval::compute_metrics(fm.labels, predicted, ckpt.meta.labels.size());
    const std::string text = eval::format_report(report, ckpt.meta.labels);

    if (!report_path.empty()) {
        std::ofstream f(report_path, std::ios::trunc | std::ios::binary);
        if (!f) throw std::runtime_error("cannot write report to '" + report_path + "'");
        f << text;
    }
    if (!report_json_path.empty()) {
        std::ofstream f(report_json_path, std::ios::trunc | std::ios::binary);
        if (!f) throw std::runtime_error("cannot write report to '" + report_json_path + "'");
        f << eval::format_report_json(report, ckpt.meta.labels);
    }
    std::fputs(text.c_str(), stdout);
    return 0;
}

int cmd_predict(const std::string& checkpoint_path, const std::string& config_path,
                const std::vector<std::string>& files) {
    const pipeline::PipelineConfig config = read_config(config_path);
    nn::LoadedCheckpoint ckpt = nn::load_checkpoint(checkpoint_path);
    require_matching_features(config, ckpt.meta);

    for (const std::string& path : files) {
        audio::Waveform w = audio::read_wav(path);
        w = audio::peak_normalize(w);
        w = audio::pad_or_trim(w, config.features.canonical_duration);
        const dsp::FeatureVolume vol = dsp::extract_feature_volume(w, config.features);

        nn::Tensor<float> input({1, vol.rows, vol.cols, 3});
        const std::size_t plane = vol.rows * vol.cols;
        for (std::size_t ch = 0; ch < 3; ++ch) {
            for (std::size_t p = 0; p < plane; ++p) {
                input.data[p * 3 + ch] = vol.channels[ch][p];
            }
        }
        pipeline::standardize(input, stats_from_meta(ckpt.meta));

        const nn::Tensor<float> probs = nn::predict_probabilities(ckpt.net, input);
        std::size_t arg = 0;
        for (std::size_t j = 1; j < probs.dim(1); ++j) {
            if (probs.data[j] > probs.data[arg]) arg = j;
        }
        std::printf("%s\t%s\t%.4f\n", path.c_str(), ckpt.meta.labels[arg].c_str(),
                    probs.data[arg]);
    }
    return 0;
}

int cmd_cv(const std::string& manifest_path, const std::string& config_path,
           const std::string& cache_path, std::uint64_t seed) {
    const pipeline::PipelineConfig config = read_config(config_path);
    const pipeline::Manifest manifest = pipeline::load_manifest(manifest_path);
    const std::vector<std::string> labels = pipeline::label_names(manifest);

    const std::uint64_t hash = config.features.hash();
    pipeline::CachedFeatures cache = open_cache(cache_path, hash, false);
    pipeline::FeatureMatrix fm =
        pipeline::assemble_features(manifest, config.features, labels, &cache);
    if (!cache_path.empty()) pipeline::save_feature_cache(cache_path, cache);

    // The repeats split original clips only. Augmented variants follow their
    // parent into training and the held-out side keeps originals exclusively,
    // so nothing derived from an evaluation clip is ever trained on.
    std::vector<std::size_t> original_rows;
    std::map<std::string, std::vector<std::size_t>> children;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        if (manifest[i].is_original()) {
            original_rows.push_back(i);
        } else {
            children[manifest[i].parent_id].push_back(i);
        }
    }
    std::vector<int> original_labels;
    original_labels.reserve(original_rows.size());
    for (std::size_t r : original_rows) original_labels.push_back(fm.labels[r]);

    const std::size_t row = fm.inputs.size() / fm.inputs.dim(0);
    auto gather = [&](const std::vector<std::size_t>& rows, nn::Tensor<float>& x,
                      std::vector<int>& y) {
        std::vector<std::size_t> shape = fm.inputs.shape;
        shape[0] = rows.size();
        x = nn::Tensor<float>(shape);
        y.clear();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::copy_n(fm.inputs.data.begin() + static_cast<std::ptrdiff_t>(rows[i] * row),
                        row, x.data.begin() + static_cast<std::ptrdiff_t>(i * row));
            y.push_back(fm.labels[rows[i]]);
        }
    };

    const eval::CvSummary summary = eval::repeated_split_cv(
        original_labels, config.cv_train_fraction, config.cv_repeats, seed,
        [&](const std::vector<std::size_t>& train_idx, const std::vector<std::size_t>& test_idx) {
            std::vector<std::size_t> train_rows, test_rows;
            for (std::size_t i : train_idx) {
                const std::size_t r = original_rows[i];
                train_rows.push_back(r);
                const auto it = children.find(manifest[r].clip_id);
                if (it != children.end()) {
                    train_rows.insert(train_rows.end(), it->second.begin(), it->second.end());
                }
            }
            for (std::size_t i : test_idx) test_rows.push_back(original_rows[i]);

            nn::Tensor<float> train_x, test_x;
            std::vector<int> train_y, test_y;
            gather(train_rows, train_x, train_y);
            gather(test_rows, test_x, test_y);

            const pipeline::ChannelStats stats = pipeline::compute_channel_stats(train_x);
            pipeline::standardize(train_x, stats);
            pipeline::standardize(test_x, stats);

            nn::Network<float> net(nn::default_model_spec(
                config.features.out_frames, config.features.out_bands, 3, labels.size()));
            net.init_parameters(seed);
            nn::TrainConfig tc = config.train;
            tc.seed = seed;
            nn::train(net, train_x, train_y, tc);

            const std::vector<int> predicted = nn::predict_labels(net, test_x);
            const eval::MetricsReport r =
                eval::compute_metrics(test_y, predicted, labels.size());
            return eval::SplitScore{r.accuracy, r.macro_f1};
        });

    std::printf("repeats: %zu\n", summary.runs.size());
    std::printf("accuracy: min %.4f q1 %.4f median %.4f q3 %.4f max %.4f mean %.4f\n",
                summary.accuracy.min, summary.accuracy.q1, summary.accuracy.median,
                summary.accuracy.q3, summary.accuracy.max, summary.accuracy.mean);
    std::printf("macro f1: min %.4f q1 %.4f median %.4f q3 %.4f max %.4f mean %.4f\n",
                summary.macro_f1.min, summary.macro_f1.q1, summary.macro_f1.median,
                summary.macro_f1.q3, summary.macro_f1.max, summary.macro_f1.mean);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"roadway sound classification pipeline"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string manifest_path, out_dir, config_path, cache_path, checkpoint_path, report_path;
    std::string report_json_path;
    std::vector<std::string> files;
    std::uint64_t seed = 1;
    std::size_t per_class = 8;
    int rate = 16000;
    double duration = 5.0;
    bool refresh = false;
    bool verbose = false;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
    synth->add_option("--out", out_dir, "output directory")->required();
    synth->add_option("--clips-per-class", per_class, "clips per class");
    synth->add_option("--rate", rate, "sample rate (Hz)");
    synth->add_option("--duration", duration, "clip length (seconds)");
    synth->add_option("--seed", seed, "random seed");

    CLI::App* features = app.add_subcommand("features", "extract features into a cache file");
    features->add_option("--manifest", manifest_path, "manifest CSV")->required();
    features->add_option("--cache", cache_path, "cache file")->required();
    features->add_option("--config", config_path, "pipeline config file");
    features->add_flag("--refresh", refresh, "rebuild the cache from scratch");

    CLI::App* augment = app.add_subcommand("augment", "split originals, then augment train");
    augment->add_option("--manifest", manifest_path, "manifest CSV of originals")->required();
    augment->add_option("--out", out_dir, "output directory")->required();
    augment->add_option("--config", config_path, "pipeline config file");
    augment->add_option("--seed", seed, "random seed");

    CLI::App* train = app.add_subcommand("train", "train on the manifest's train split");
    train->add_option("--manifest", manifest_path, "manifest CSV with split column")->required();
    train->add_option("--checkpoint", checkpoint_path, "checkpoint output")->required();
    train->add_option("--config", config_path, "pipeline config file");
    train->add_option("--cache", cache_path, "feature cache file");
    train->add_option("--seed", seed, "random seed");
    train->add_flag("--verbose", verbose, "per-epoch progress on stderr");

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate on the manifest's test split");
    eval_cmd->add_option("--manifest", manifest_path, "manifest CSV with split column")
        ->required();
    eval_cmd->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
    eval_cmd->add_option("--report", report_path, "write the text report here");
    eval_cmd->add_option("--report-json", report_json_path, "write the report as JSON here");
    eval_cmd->add_option("--config", config_path, "pipeline config file");
    eval_cmd->add_option("--cache", cache_path, "feature cache file");

    CLI::App* predict = app.add_subcommand("predict", "classify wav files");
    predict->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
    predict->add_option("--config", config_path, "pipeline config file");
    predict->add_option("files", files, "wav files")->required();

    CLI::App* cv = app.add_subcommand("cv", "repeated stratified hold-out evaluation");
    cv->add_option("--manifest", manifest_path, "manifest CSV")->required();
    cv->add_option("--config", config_path, "pipeline config file");
    cv->add_option("--cache", cache_path, "feature cache file");
    cv->add_option("--seed", seed, "random seed");

    CLI::App* keys = app.add_subcommand("config-keys", "list config keys with defaults");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(out_dir, per_class, rate, duration, seed);
        if (features->parsed()) return cmd_features(manifest_path, cache_path, config_path,
                                                    refresh);
        if (augment->parsed()) return cmd_augment(manifest_path, out_dir, config_path, seed);
        if (train->parsed()) return cmd_train(manifest_path, checkpoint_path, config_path,
                                              cache_path, seed, verbose);
        if (eval_cmd->parsed()) return cmd_eval(manifest_path, checkpoint_path, report_path,
                                                report_json_path, config_path, cache_path);
        if (predict->parsed()) return cmd_predict(checkpoint_path, config_path, files);
        if (cv->parsed()) return cmd_cv(manifest_path, config_path, cache_path, seed);
        if (keys->parsed()) {
            std::fputs(roadsound::pipeline::config_keys().c_str(), stdout);
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
