#include "roadsound/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>

#include "roadsound/rng.hpp"

namespace roadsound::nn {

namespace {

// Rows of `inputs` (axis 0) selected by `idx`, packed into one batch tensor.
Tensor<float> gather_rows(const Tensor<float>& inputs, const std::vector<std::size_t>& idx) {
    std::vector<std::size_t> shape = inputs.shape;
    shape[0] = idx.size();
    Tensor<float> out(shape);
    const std::size_t row = inputs.size() / inputs.dim(0);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        std::copy_n(inputs.data.begin() + static_cast<std::ptrdiff_t>(idx[i] * row), row,
                    out.data.begin() + static_cast<std::ptrdiff_t>(i * row));
    }
    return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels,
                               const std::vector<std::size_t>& idx) {
    std::vector<int> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = labels[idx[i]];
    return out;
}

struct LossAccuracy {
    double loss = 0.0;
    double accuracy = 0.0;
};

LossAccuracy evaluate(Network<float>& net, const Tensor<float>& inputs,
                      const std::vector<int>& labels, const std::vector<std::size_t>& idx,
                      std::size_t batch_size) {
    LossAccuracy out;
    if (idx.empty()) return out;
    std::size_t correct = 0;
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < idx.size(); start += batch_size) {
        const std::size_t stop = std::min(idx.size(), start + batch_size);
        const std::vector<std::size_t> part(idx.begin() + static_cast<std::ptrdiff_t>(start),
                                            idx.begin() + static_cast<std::ptrdiff_t>(stop));
        Tensor<float> batch = gather_rows(inputs, part);
        const std::vector<int> batch_labels = gather_labels(labels, part);
        Tensor<float> probs = softmax(net.forward(batch, /*training=*/false));
        loss_sum += static_cast<double>(cross_entropy(probs, batch_labels)) *
                    static_cast<double>(part.size());
        const std::size_t c = probs.shape.back();
        for (std::size_t i = 0; i < part.size(); ++i) {
            const float* row = probs.data.data() + i * c;
            std::size_t arg = 0;
            for (std::size_t j = 1; j < c; ++j) {
                if (row[j] > row[arg]) arg = j;
            }
            if (static_cast<int>(arg) == batch_labels[i]) ++correct;
        }
    }
    out.loss = loss_sum / static_cast<double>(idx.size());
    out.accuracy = static_cast<double>(correct) / static_cast<double>(idx.size());
    return out;
}

}  // namespace

SplitIndices stratified_split(const std::vector<int>& labels, double first_fraction,
                              std::uint64_t seed) {
    if (first_fraction < 0.0 || first_fraction > 1.0) {
        throw std::invalid_argument("stratified_split: fraction must be in [0,1]");
    }
    std::map<int, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);

    std::mt19937_64 g(seed);
    for (auto& [label, idx] : by_label) rng::shuffle(idx, g);

    // Largest-remainder apportionment so the global count is exactly
    // round(fraction * total) while each class stays near its share.
    const std::size_t target =
        static_cast<std::size_t>(std::llround(first_fraction * static_cast<double>(labels.size())));
    std::vector<std::pair<double, int>> remainders;  // (-remainder, label) for stable sort
    std::map<int, std::size_t> take;
    std::size_t assigned = 0;
    for (const auto& [label, idx] : by_label) {
        const double quota = first_fraction * static_cast<double>(idx.size());
        const auto base = static_cast<std::size_t>(std::floor(quota));
        take[label] = std::min(base, idx.size());
        assigned += take[label];
        remainders.emplace_back(-(quota - std::floor(quota)), label);
    }
    std::sort(remainders.begin(), remainders.end());
    for (const auto& [neg_rem, label] : remainders) {
        if (assigned >= target) break;
        if (take[label] < by_label[label].size()) {
            ++take[label];
            ++assigned;
        }
    }

    SplitIndices split;
    for (const auto& [label, idx] : by_label) {
        const std::size_t n_first = take[label];
        split.first.insert(split.first.end(), idx.begin(),
                           idx.begin() + static_cast<std::ptrdiff_t>(n_first));
        split.second.insert(split.second.end(),
                            idx.begin() + static_cast<std::ptrdiff_t>(n_first), idx.end());
    }
    return split;
}

TrainResult train(Network<float>& net, const Tensor<float>& inputs,
                  const std::vector<int>& labels, const TrainConfig& config) {
    if (inputs.dim(0) != labels.size()) {
        throw std::invalid_argument("train: input/label count mismatch");
    }
    if (labels.empty()) throw std::invalid_argument("train: empty dataset");
    if (config.batch_size == 0) throw std::invalid_argument("train: batch_size must be > 0");

    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> val_idx;
    if (config.val_fraction > 0.0 && labels.size() >= 4) {
        SplitIndices split = stratified_split(labels, 1.0 - config.val_fraction, config.seed);
        train_idx = std::move(split.first);
        val_idx = std::move(split.second);
    }
    if (train_idx.empty() || val_idx.empty()) {
        train_idx.resize(labels.size());
        for (std::size_t i = 0; i < train_idx.size(); ++i) train_idx[i] = i;
        val_idx.clear();
    }

    std::mt19937_64 g(config.seed ^ 0x9e3779b97f4a7c15ull);
    AdamState<float> adam;
    AdamConfig adam_config;
    adam_config.lr = config.learning_rate;
    std::vector<Tensor<float>*> params = net.parameters();

    TrainResult result;
    auto best_layers = net.layers();  // fall back to the init on first-epoch failure
    double best_accuracy = -1.0;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t stagnant = 0;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng::shuffle(train_idx, g);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        std::size_t seen = 0;
        bool nan_hit = false;

        for (std::size_t start = 0; start < train_idx.size(); start += config.batch_size) {
            const std::size_t stop = std::min(train_idx.size(), start + config.batch_size);
            if (stop - start < 2 && train_idx.size() >= 2) continue;  // batch norm needs pairs
            const std::vector<std::size_t> part(
                train_idx.begin() + static_cast<std::ptrdiff_t>(start),
                train_idx.begin() + static_cast<std::ptrdiff_t>(stop));
            Tensor<float> batch = gather_rows(inputs, part);
            const std::vector<int> batch_labels = gather_labels(labels, part);

            std::vector<LayerCache<float>> caches;
            Tensor<float> logits = net.forward(batch, /*training=*/true, &caches);
            Tensor<float> probs = softmax(logits);
            const float loss = cross_entropy(probs, batch_labels);
            if (!std::isfinite(loss)) {
                nan_hit = true;
                break;
            }
            loss_sum += static_cast<double>(loss) * static_cast<double>(part.size());
            const std::size_t c = probs.shape.back();
            for (std::size_t i = 0; i < part.size(); ++i) {
                const float* row = probs.data.data() + i * c;
                std::size_t arg = 0;
                for (std::size_t j = 1; j < c; ++j) {
                    if (row[j] > row[arg]) arg = j;
                }
                if (static_cast<int>(arg) == batch_labels[i]) ++correct;
            }
            seen += part.size();

            Tensor<float> grad = softmax_cross_entropy_grad(probs, batch_labels);
            std::vector<Tensor<float>> grads = net.backward(grad, caches);
            std::vector<const Tensor<float>*> grad_ptrs;
            grad_ptrs.reserve(grads.size());
            for (const auto& t : grads) grad_ptrs.push_back(&t);
            adam_step(params, grad_ptrs, adam, adam_config);
        }

        if (nan_hit || seen == 0) {
            net.layers() = best_layers;
            result.aborted_on_nan = nan_hit;
            break;
        }

        EpochStats stats;
        stats.train_loss = loss_sum / static_cast<double>(seen);
        stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(seen);
        if (!val_idx.empty()) {
            const LossAccuracy val = evaluate(net, inputs, labels, val_idx, config.batch_size);
            stats.val_loss = val.loss;
            stats.val_accuracy = val.accuracy;
        } else {
            stats.val_loss = stats.train_loss;
            stats.val_accuracy = stats.train_accuracy;
        }
        result.history.push_back(stats);
        if (config.verbose) {
            std::fprintf(stderr,
                         "epoch %zu  train loss %.4f acc %.4f  val loss %.4f acc %.4f\n",
                         epoch + 1, stats.train_loss, stats.train_accuracy, stats.val_loss,
                         stats.val_accuracy);
        }

        const bool improved = stats.val_accuracy > best_accuracy + 1e-12 ||
                              (std::abs(stats.val_accuracy - best_accuracy) <= 1e-12 &&
                               stats.val_loss < best_loss - 1e-12);
        if (improved) {
            best_accuracy = stats.val_accuracy;
            best_loss = stats.val_loss;
            best_layers = net.layers();
            result.best_epoch = result.history.size() - 1;
            stagnant = 0;
        } else {
            ++stagnant;
            if (stagnant > config.patience) break;
        }
    }

    net.layers() = best_layers;
    return result;
}

Tensor<float> predict_probabilities(Network<float>& net, const Tensor<float>& inputs,
                                    std::size_t batch_size) {
    const std::size_t n = inputs.dim(0);
    const std::size_t c = net.spec().n_classes;
    Tensor<float> out({n, c});
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t stop = std::min(n, start + batch_size);
        idx.clear();
        for (std::size_t i = start; i < stop; ++i) idx.push_back(i);
        Tensor<float> probs = softmax(net.forward(gather_rows(inputs, idx), /*training=*/false));
        std::copy(probs.data.begin(), probs.data.end(),
                  out.data.begin() + static_cast<std::ptrdiff_t>(start * c));
    }
    return out;
}

std::vector<int> predict_labels(Network<float>& net, const Tensor<float>& inputs,
                                std::size_t batch_size) {
    Tensor<float> probs = predict_probabilities(net, inputs, batch_size);
    const std::size_t n = probs.dim(0), c = probs.dim(1);
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const float* row = probs.data.data() + i * c;
        std::size_t arg = 0;
        for (std::size_t j = 1; j < c; ++j) {
            if (row[j] > row[arg]) arg = j;
        }
        out[i] = static_cast<int>(arg);
    }
    return out;
}

}  // namespace roadsound::nn
