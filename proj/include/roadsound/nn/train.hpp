#pragma once

#include <cstdint>
#include <vector>

#include "roadsound/nn/model.hpp"
#include "roadsound/nn/tensor.hpp"

namespace roadsound::nn {

struct TrainConfig {
    std::size_t batch_size = 16;
    std::size_t epochs = 50;
    double learning_rate = 1e-3;
    std::size_t patience = 8;    // epochs without validation improvement before stopping
    double val_fraction = 0.15;  // carved, stratified, from the training inputs
    std::uint64_t seed = 0;
    bool verbose = false;
};

struct EpochStats {
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    std::size_t best_epoch = 0;  // into history; the restored parameters
    bool aborted_on_nan = false;
};

// Minibatch Adam over softmax cross-entropy. Shuffling, the validation carve
// and initialization randomness all come from config.seed. On a non-finite
// loss the last improving parameters are restored and training stops. The
// network keeps the best-validation parameters when training returns.
TrainResult train(Network<float>& net, const Tensor<float>& inputs,
                  const std::vector<int>& labels, const TrainConfig& config);

// Inference helpers; batched so memory stays bounded.
Tensor<float> predict_probabilities(Network<float>& net, const Tensor<float>& inputs,
                                    std::size_t batch_size = 32);
std::vector<int> predict_labels(Network<float>& net, const Tensor<float>& inputs,
                                std::size_t batch_size = 32);

// Indices of a stratified split: each label contributes floor/round of its
// share to the first part, preserving class balance. Order within parts is
// the shuffled draw order, so downstream batching stays deterministic.
struct SplitIndices {
    std::vector<std::size_t> first;
    std::vector<std::size_t> second;
};
SplitIndices stratified_split(const std::vector<int>& labels, double first_fraction,
                              std::uint64_t seed);

}  // namespace roadsound::nn
