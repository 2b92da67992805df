#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "roadsound/nn/ops.hpp"
#include "roadsound/nn/tensor.hpp"
#include "roadsound/rng.hpp"

namespace roadsound::nn {

enum class LayerKind { kConv, kMaxPool, kBatchNorm, kFlatten, kDense };

struct LayerSpec {
    LayerKind kind;
    std::size_t units = 0;   // conv filters / dense units
    std::size_t kernel = 3;  // conv kernel extent (square)
    std::size_t pool = 3;    // pool window (square)
    std::size_t stride = 3;  // pool stride
    bool relu = false;

    static LayerSpec conv(std::size_t filters) {
        return {LayerKind::kConv, filters, 3, 3, 3, true};
    }
    static LayerSpec maxpool() { return {LayerKind::kMaxPool, 0, 3, 3, 3, false}; }
    static LayerSpec batchnorm() { return {LayerKind::kBatchNorm, 0, 3, 3, 3, false}; }
    static LayerSpec flatten() { return {LayerKind::kFlatten, 0, 3, 3, 3, false}; }
    static LayerSpec dense(std::size_t units, bool relu_act) {
        return {LayerKind::kDense, units, 3, 3, 3, relu_act};
    }
};

struct ModelSpec {
    std::size_t input_rows = 0;
    std::size_t input_cols = 0;
    std::size_t input_channels = 3;
    std::size_t n_classes = 5;
    std::vector<LayerSpec> layers;
};

// Shape of the data after each layer; flat != 0 once the volume is flattened.
struct TraceShape {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t channels = 0;
    std::size_t flat = 0;
};

inline std::vector<TraceShape> trace_shapes(const ModelSpec& spec) {
    std::vector<TraceShape> shapes;
    TraceShape s{spec.input_rows, spec.input_cols, spec.input_channels, 0};
    for (const auto& layer : spec.layers) {
        switch (layer.kind) {
            case LayerKind::kConv:
                if (s.flat != 0) throw std::invalid_argument("conv after flatten");
                s.channels = layer.units;
                break;
            case LayerKind::kMaxPool:
                if (s.rows < layer.pool || s.cols < layer.pool) {
                    throw std::invalid_argument("pool window larger than input");
                }
                s.rows = (s.rows - layer.pool) / layer.stride + 1;
                s.cols = (s.cols - layer.pool) / layer.stride + 1;
                break;
            case LayerKind::kBatchNorm:
                break;
            case LayerKind::kFlatten:
                s.flat = s.rows * s.cols * s.channels;
                s.rows = s.cols = s.channels = 0;
                break;
            case LayerKind::kDense:
                if (s.flat == 0) throw std::invalid_argument("dense before flatten");
                s.flat = layer.units;
                break;
        }
        shapes.push_back(s);
    }
    return shapes;
}

// The classifier used throughout: three pool stages interleaved with paired
// convolutions and batch norms, then two hidden dense layers and the class
// logits. The final softmax lives in the loss / prediction code.
inline ModelSpec default_model_spec(std::size_t rows, std::size_t cols,
                                    std::size_t channels = 3, std::size_t n_classes = 5) {
    ModelSpec spec;
    spec.input_rows = rows;
    spec.input_cols = cols;
    spec.input_channels = channels;
    spec.n_classes = n_classes;
    spec.layers = {
        LayerSpec::maxpool(),
        LayerSpec::conv(64),
        LayerSpec::conv(64),
        LayerSpec::maxpool(),
        LayerSpec::batchnorm(),
        LayerSpec::conv(128),
        LayerSpec::conv(128),
        LayerSpec::maxpool(),
        LayerSpec::batchnorm(),
        LayerSpec::conv(256),
        LayerSpec::conv(256),
        LayerSpec::batchnorm(),
        LayerSpec::flatten(),
        LayerSpec::dense(80, true),
        LayerSpec::dense(40, true),
        LayerSpec::dense(n_classes, false),
    };
    return spec;
}

template <typename T>
struct Layer {
    LayerSpec spec;
    // conv: weight [kh,kw,C,F], bias [F]; dense: weight [D,U], bias [U];
    // batchnorm: gamma/beta/running stats per channel. Unused tensors are empty.
    Tensor<T> weight{std::vector<std::size_t>{0}};
    Tensor<T> bias{std::vector<std::size_t>{0}};
    Tensor<T> gamma{std::vector<std::size_t>{0}};
    Tensor<T> beta{std::vector<std::size_t>{0}};
    std::vector<T> running_mean;
    std::vector<T> running_var;
};

template <typename T>
struct LayerCache {
    Tensor<T> input{std::vector<std::size_t>{0}};
    Tensor<T> pre_activation{std::vector<std::size_t>{0}};
    std::vector<std::size_t> argmax;
    std::vector<std::size_t> input_shape;
    BatchNormCache<T> bn;
};

template <typename T>
class Network {
public:
    explicit Network(const ModelSpec& spec) : spec_(spec) {
        TraceShape s{spec.input_rows, spec.input_cols, spec.input_channels, 0};
        for (const auto& ls : spec.layers) {
            Layer<T> layer;
            layer.spec = ls;
            switch (ls.kind) {
                case LayerKind::kConv:
                    layer.weight = Tensor<T>({ls.kernel, ls.kernel, s.channels, ls.units});
                    layer.bias = Tensor<T>({ls.units});
                    s.channels = ls.units;
                    break;
                case LayerKind::kMaxPool:
                    s.rows = (s.rows - ls.pool) / ls.stride + 1;
                    s.cols = (s.cols - ls.pool) / ls.stride + 1;
                    break;
                case LayerKind::kBatchNorm: {
                    const std::size_t c = s.flat != 0 ? s.flat : s.channels;
                    layer.gamma = Tensor<T>({c});
                    layer.beta = Tensor<T>({c});
                    layer.gamma.fill(T(1));
                    layer.running_mean.assign(c, T(0));
                    layer.running_var.assign(c, T(1));
                    break;
                }
                case LayerKind::kFlatten:
                    s.flat = s.rows * s.cols * s.channels;
                    s.rows = s.cols = s.channels = 0;
                    break;
                case LayerKind::kDense:
                    layer.weight = Tensor<T>({s.flat, ls.units});
                    layer.bias = Tensor<T>({ls.units});
                    s.flat = ls.units;
                    break;
            }
            layers_.push_back(std::move(layer));
        }
        if (spec.layers.empty() || spec.layers.back().kind != LayerKind::kDense ||
            spec.layers.back().units != spec.n_classes || spec.layers.back().relu) {
            throw std::invalid_argument("network must end in a linear dense layer of n_classes");
        }
    }

    // He-uniform fan-in initialization for weights; biases start at zero,
    // batch-norm scales at one.
    void init_parameters(std::uint64_t seed) {
        std::mt19937_64 g(seed);
        for (auto& layer : layers_) {
            if (layer.spec.kind == LayerKind::kConv || layer.spec.kind == LayerKind::kDense) {
                std::size_t fan_in = layer.weight.size() / layer.weight.shape.back();
                const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
                for (auto& w : layer.weight.data) {
                    w = static_cast<T>(rng::uniform_in(g, -limit, limit));
                }
                layer.bias.fill(T(0));
            } else if (layer.spec.kind == LayerKind::kBatchNorm) {
                layer.gamma.fill(T(1));
                layer.beta.fill(T(0));
                std::fill(layer.running_mean.begin(), layer.running_mean.end(), T(0));
                std::fill(layer.running_var.begin(), layer.running_var.end(), T(1));
            }
        }
    }

    // Input is [N,H,W,C]; returns the class logits [N, n_classes]. In training
    // mode batch norm uses batch statistics and updates the running ones, and
    // caches are recorded for backward().
    Tensor<T> forward(const Tensor<T>& input, bool training,
                      std::vector<LayerCache<T>>* caches = nullptr) {
        if (caches) {
            caches->clear();
            caches->resize(layers_.size());
        }
        Tensor<T> x = input;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            Layer<T>& layer = layers_[i];
            LayerCache<T>* cache = caches ? &(*caches)[i] : nullptr;
            switch (layer.spec.kind) {
                case LayerKind::kConv: {
                    Tensor<T> z = conv2d_forward(x, layer.weight, layer.bias);
                    if (cache) {
                        cache->input = std::move(x);
                        cache->pre_activation = z;
                    }
                    x = layer.spec.relu ? relu(z) : std::move(z);
                    break;
                }
                case LayerKind::kMaxPool: {
                    auto r = maxpool_forward(x, layer.spec.pool, layer.spec.stride);
                    if (cache) {
                        cache->input_shape = x.shape;
                        cache->argmax = std::move(r.argmax);
                    }
                    x = std::move(r.output);
                    break;
                }
                case LayerKind::kBatchNorm: {
                    Tensor<T> y = batchnorm_forward(x, layer.gamma, layer.beta, training,
                                                    layer.running_mean, layer.running_var,
                                                    cache ? &cache->bn : nullptr);
                    x = std::move(y);
                    break;
                }
                case LayerKind::kFlatten: {
                    if (cache) cache->input_shape = x.shape;
                    const std::size_t n = x.dim(0);
                    x.shape = {n, x.size() / n};
                    break;
                }
                case LayerKind::kDense: {
                    Tensor<T> z = dense_forward(x, layer.weight, layer.bias);
                    if (cache) {
                        cache->input = std::move(x);
                        cache->pre_activation = z;
                    }
                    x = layer.spec.relu ? relu(z) : std::move(z);
                    break;
                }
            }
        }
        return x;
    }

    // Gradients for every trainable parameter, aligned with parameters().
    // grad_logits is d(loss)/d(logits) from the fused softmax + cross-entropy.
    std::vector<Tensor<T>> backward(const Tensor<T>& grad_logits,
                                    const std::vector<LayerCache<T>>& caches) {
        if (caches.size() != layers_.size()) {
            throw std::invalid_argument("backward: run forward with caches first");
        }
        std::vector<Tensor<T>> grads(parameters().size(),
                                     Tensor<T>(std::vector<std::size_t>{0}));
        std::size_t grad_pos = grads.size();
        Tensor<T> g = grad_logits;
        for (std::size_t ii = layers_.size(); ii-- > 0;) {
            Layer<T>& layer = layers_[ii];
            const LayerCache<T>& cache = caches[ii];
            switch (layer.spec.kind) {
                case LayerKind::kConv: {
                    Tensor<T> gz =
                        layer.spec.relu ? relu_backward(g, cache.pre_activation) : std::move(g);
                    auto lg = conv2d_backward(gz, cache.input, layer.weight);
                    grads[--grad_pos] = std::move(lg.bias);
                    grads[--grad_pos] = std::move(lg.kernel);
                    g = std::move(lg.input);
                    break;
                }
                case LayerKind::kMaxPool:
                    g = maxpool_backward(g, cache.argmax, cache.input_shape);
                    break;
                case LayerKind::kBatchNorm: {
                    auto lg = batchnorm_backward(g, cache.bn, layer.gamma);
                    grads[--grad_pos] = std::move(lg.beta);
                    grads[--grad_pos] = std::move(lg.gamma);
                    g = std::move(lg.input);
                    break;
                }
                case LayerKind::kFlatten:
                    g.shape = cache.input_shape;
                    break;
                case LayerKind::kDense: {
                    Tensor<T> gz =
                        layer.spec.relu ? relu_backward(g, cache.pre_activation) : std::move(g);
                    auto lg = dense_backward(gz, cache.input, layer.weight);
                    grads[--grad_pos] = std::move(lg.bias);
                    grads[--grad_pos] = std::move(lg.weight);
                    g = std::move(lg.input);
                    break;
                }
            }
        }
        if (grad_pos != 0) throw std::logic_error("backward: gradient bookkeeping error");
        return grads;
    }

    std::vector<Tensor<T>*> parameters() {
        std::vector<Tensor<T>*> ps;
        for (auto& layer : layers_) {
            switch (layer.spec.kind) {
                case LayerKind::kConv:
                case LayerKind::kDense:
                    ps.push_back(&layer.weight);
                    ps.push_back(&layer.bias);
                    break;
                case LayerKind::kBatchNorm:
                    ps.push_back(&layer.gamma);
                    ps.push_back(&layer.beta);
                    break;
                default:
                    break;
            }
        }
        return ps;
    }

    std::vector<std::string> parameter_names() const {
        std::vector<std::string> names;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            const std::string prefix = "layer" + std::to_string(i);
            switch (layers_[i].spec.kind) {
                case LayerKind::kConv:
                    names.push_back(prefix + ".conv.weight");
                    names.push_back(prefix + ".conv.bias");
                    break;
                case LayerKind::kDense:
                    names.push_back(prefix + ".dense.weight");
                    names.push_back(prefix + ".dense.bias");
                    break;
                case LayerKind::kBatchNorm:
                    names.push_back(prefix + ".bn.gamma");
                    names.push_back(prefix + ".bn.beta");
                    break;
                default:
                    break;
            }
        }
        return names;
    }

    std::size_t parameter_count() {
        std::size_t n = 0;
        for (const auto* p : parameters()) n += p->size();
        return n;
    }

    const ModelSpec& spec() const { return spec_; }
    std::vector<Layer<T>>& layers() { return layers_; }
    const std::vector<Layer<T>>& layers() const { return layers_; }

    // Copy all parameters and running statistics into a network of another
    // scalar type (float training checkpoints vs double gradient checks).
    template <typename U>
    Network<U> cast() const {
        Network<U> other(spec_);
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            const Layer<T>& src = layers_[i];
            Layer<U>& dst = other.layers()[i];
            dst.weight = src.weight.template cast<U>();
            dst.bias = src.bias.template cast<U>();
            dst.gamma = src.gamma.template cast<U>();
            dst.beta = src.beta.template cast<U>();
            dst.running_mean.assign(src.running_mean.begin(), src.running_mean.end());
            dst.running_var.assign(src.running_var.begin(), src.running_var.end());
        }
        return other;
    }

private:
    ModelSpec spec_;
    std::vector<Layer<T>> layers_;
};

}  // namespace roadsound::nn
