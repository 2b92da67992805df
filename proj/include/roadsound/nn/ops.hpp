#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "roadsound/nn/tensor.hpp"

namespace roadsound::nn {

// ---------------------------------------------------------------------------
// Convolution, NHWC input, [kh,kw,C,F] kernel, same padding, stride 1,
// cross-correlation convention.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias) {
    if (input.rank() != 4 || kernel.rank() != 4 || bias.rank() != 1) {
        throw std::invalid_argument("conv2d_forward: expected NHWC input, khkwCF kernel, F bias");
    }
    const std::size_t n = input.dim(0), h = input.dim(1), w = input.dim(2), c = input.dim(3);
    const std::size_t kh = kernel.dim(0), kw = kernel.dim(1), kc = kernel.dim(2),
                      f = kernel.dim(3);
    if (kc != c) throw std::invalid_argument("conv2d_forward: channel mismatch");
    if (bias.dim(0) != f) throw std::invalid_argument("conv2d_forward: bias size mismatch");
    if (kh % 2 == 0 || kw % 2 == 0) {
        throw std::invalid_argument("conv2d_forward: kernel extents must be odd for same padding");
    }
    const std::size_t ph = (kh - 1) / 2, pw = (kw - 1) / 2;

    Tensor<T> out({n, h, w, f});
    for (std::size_t in_ = 0; in_ < n; ++in_) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                T* o = out.data.data() + ((in_ * h + y) * w + x) * f;
                for (std::size_t fi = 0; fi < f; ++fi) o[fi] = bias[fi];
            }
            for (std::size_t k = 0; k < kh; ++k) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + k) -
                                          static_cast<std::ptrdiff_t>(ph);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                for (std::size_t x = 0; x < w; ++x) {
                    T* o = out.data.data() + ((in_ * h + y) * w + x) * f;
                    for (std::size_t l = 0; l < kw; ++l) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x + l) -
                                                  static_cast<std::ptrdiff_t>(pw);
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                        const T* in_row = input.data.data() +
                                          ((in_ * h + iy) * w + static_cast<std::size_t>(ix)) * c;
                        const T* k_row = kernel.data.data() + (k * kw + l) * c * f;
                        for (std::size_t ci = 0; ci < c; ++ci) {
                            const T a = in_row[ci];
                            const T* kr = k_row + ci * f;
                            for (std::size_t fi = 0; fi < f; ++fi) o[fi] += a * kr[fi];
                        }
                    }
                }
            }
        }
    }
    return out;
}

template <typename T>
struct Conv2dGrads {
    Tensor<T> input;
    Tensor<T> kernel;
    Tensor<T> bias;
};

template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                               const Tensor<T>& kernel) {
    const std::size_t n = input.dim(0), h = input.dim(1), w = input.dim(2), c = input.dim(3);
    const std::size_t kh = kernel.dim(0), kw = kernel.dim(1), f = kernel.dim(3);
    if (grad_out.rank() != 4 || grad_out.dim(0) != n || grad_out.dim(1) != h ||
        grad_out.dim(2) != w || grad_out.dim(3) != f || kernel.dim(2) != c) {
        throw std::invalid_argument("conv2d_backward: shape mismatch");
    }
    const std::size_t ph = (kh - 1) / 2, pw = (kw - 1) / 2;

    Conv2dGrads<T> g{Tensor<T>(input.shape), Tensor<T>(kernel.shape), Tensor<T>({f})};

    for (std::size_t in_ = 0; in_ < n; ++in_) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                const T* go = grad_out.data.data() + ((in_ * h + y) * w + x) * f;
                for (std::size_t fi = 0; fi < f; ++fi) g.bias[fi] += go[fi];
            }
            for (std::size_t k = 0; k < kh; ++k) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + k) -
                                          static_cast<std::ptrdiff_t>(ph);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                for (std::size_t x = 0; x < w; ++x) {
                    const T* go = grad_out.data.data() + ((in_ * h + y) * w + x) * f;
                    for (std::size_t l = 0; l < kw; ++l) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x + l) -
                                                  static_cast<std::ptrdiff_t>(pw);
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                        const std::size_t in_off =
                            ((in_ * h + iy) * w + static_cast<std::size_t>(ix)) * c;
                        const T* in_row = input.data.data() + in_off;
                        T* gin_row = g.input.data.data() + in_off;
                        const T* k_row = kernel.data.data() + (k * kw + l) * c * f;
                        T* gk_row = g.kernel.data.data() + (k * kw + l) * c * f;
                        for (std::size_t ci = 0; ci < c; ++ci) {
                            const T a = in_row[ci];
                            const T* kr = k_row + ci * f;
                            T* gkr = gk_row + ci * f;
                            T acc{0};
                            for (std::size_t fi = 0; fi < f; ++fi) {
                                acc += kr[fi] * go[fi];
                                gkr[fi] += a * go[fi];
                            }
                            gin_row[ci] += acc;
                        }
                    }
                }
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Max pooling; partial windows at the bottom/right edges are dropped.
// ---------------------------------------------------------------------------

template <typename T>
struct MaxPoolResult {
    Tensor<T> output;
    std::vector<std::size_t> argmax;  // flat input index per output element
};

template <typename T>
MaxPoolResult<T> maxpool_forward(const Tensor<T>& input, std::size_t pool, std::size_t stride) {
    if (input.rank() != 4) throw std::invalid_argument("maxpool_forward: expected NHWC input");
    if (pool < 1 || stride < 1) throw std::invalid_argument("maxpool_forward: bad pool/stride");
    const std::size_t n = input.dim(0), h = input.dim(1), w = input.dim(2), c = input.dim(3);
    if (h < pool || w < pool) throw std::invalid_argument("maxpool_forward: input smaller than pool");
    const std::size_t ho = (h - pool) / stride + 1;
    const std::size_t wo = (w - pool) / stride + 1;

    MaxPoolResult<T> r{Tensor<T>({n, ho, wo, c}), {}};
    r.argmax.resize(r.output.size());
    for (std::size_t in_ = 0; in_ < n; ++in_) {
        for (std::size_t oy = 0; oy < ho; ++oy) {
            for (std::size_t ox = 0; ox < wo; ++ox) {
                for (std::size_t ci = 0; ci < c; ++ci) {
                    const std::size_t y0 = oy * stride, x0 = ox * stride;
                    std::size_t best_idx = ((in_ * h + y0) * w + x0) * c + ci;
                    T best = input.data[best_idx];
                    for (std::size_t dy = 0; dy < pool; ++dy) {
                        for (std::size_t dx = 0; dx < pool; ++dx) {
                            const std::size_t idx =
                                ((in_ * h + y0 + dy) * w + x0 + dx) * c + ci;
                            if (input.data[idx] > best) {
                                best = input.data[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    const std::size_t out_idx = ((in_ * ho + oy) * wo + ox) * c + ci;
                    r.output.data[out_idx] = best;
                    r.argmax[out_idx] = best_idx;
                }
            }
        }
    }
    return r;
}

template <typename T>
Tensor<T> maxpool_backward(const Tensor<T>& grad_out, const std::vector<std::size_t>& argmax,
                           const std::vector<std::size_t>& input_shape) {
    if (grad_out.size() != argmax.size()) {
        throw std::invalid_argument("maxpool_backward: argmax size mismatch");
    }
    Tensor<T> gin(input_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) gin.data[argmax[i]] += grad_out.data[i];
    return gin;
}

// ---------------------------------------------------------------------------
// Batch normalization over the trailing (channel) axis.
// ---------------------------------------------------------------------------

template <typename T>
struct BatchNormCache {
    Tensor<T> x_hat;
    std::vector<T> inv_std;   // per channel
    std::vector<T> batch_mean;
    std::vector<T> batch_var;
};

template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                            bool training, std::vector<T>& running_mean,
                            std::vector<T>& running_var, BatchNormCache<T>* cache,
                            T momentum = T(0.9), T eps = T(1e-5)) {
    if (input.rank() < 2) throw std::invalid_argument("batchnorm: input rank must be >= 2");
    const std::size_t c = input.shape.back();
    if (gamma.size() != c || beta.size() != c || running_mean.size() != c ||
        running_var.size() != c) {
        throw std::invalid_argument("batchnorm: parameter size mismatch");
    }
    const std::size_t rows = input.size() / c;
    if (training && input.dim(0) < 2) {
        throw std::invalid_argument("batchnorm: train mode requires batch size >= 2");
    }

    Tensor<T> out(input.shape);
    if (training) {
        std::vector<T> mean(c, T(0)), var(c, T(0));
        for (std::size_t r = 0; r < rows; ++r) {
            const T* row = input.data.data() + r * c;
            for (std::size_t ci = 0; ci < c; ++ci) mean[ci] += row[ci];
        }
        for (std::size_t ci = 0; ci < c; ++ci) mean[ci] /= static_cast<T>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            const T* row = input.data.data() + r * c;
            for (std::size_t ci = 0; ci < c; ++ci) {
                const T d = row[ci] - mean[ci];
                var[ci] += d * d;
            }
        }
        for (std::size_t ci = 0; ci < c; ++ci) var[ci] /= static_cast<T>(rows);

        std::vector<T> inv_std(c);
        for (std::size_t ci = 0; ci < c; ++ci) inv_std[ci] = T(1) / std::sqrt(var[ci] + eps);

        if (cache) {
            cache->x_hat = Tensor<T>(input.shape);
            cache->inv_std = inv_std;
            cache->batch_mean = mean;
            cache->batch_var = var;
        }
        for (std::size_t r = 0; r < rows; ++r) {
            const T* row = input.data.data() + r * c;
            T* out_row = out.data.data() + r * c;
            T* hat_row = cache ? cache->x_hat.data.data() + r * c : nullptr;
            for (std::size_t ci = 0; ci < c; ++ci) {
                const T x_hat = (row[ci] - mean[ci]) * inv_std[ci];
                if (hat_row) hat_row[ci] = x_hat;
                out_row[ci] = gamma[ci] * x_hat + beta[ci];
            }
        }
        for (std::size_t ci = 0; ci < c; ++ci) {
            running_mean[ci] = momentum * running_mean[ci] + (T(1) - momentum) * mean[ci];
            running_var[ci] = momentum * running_var[ci] + (T(1) - momentum) * var[ci];
        }
    } else {
        std::vector<T> inv_std(c);
        for (std::size_t ci = 0; ci < c; ++ci) {
            inv_std[ci] = T(1) / std::sqrt(running_var[ci] + eps);
        }
        for (std::size_t r = 0; r < rows; ++r) {
            const T* row = input.data.data() + r * c;
            T* out_row = out.data.data() + r * c;
            for (std::size_t ci = 0; ci < c; ++ci) {
                out_row[ci] = gamma[ci] * (row[ci] - running_mean[ci]) * inv_std[ci] + beta[ci];
            }
        }
    }
    return out;
}

template <typename T>
struct BatchNormGrads {
    Tensor<T> input;
    Tensor<T> gamma;
    Tensor<T> beta;
};

template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& grad_out, const BatchNormCache<T>& cache,
                                     const Tensor<T>& gamma) {
    const std::size_t c = grad_out.shape.back();
    const std::size_t rows = grad_out.size() / c;
    const T m = static_cast<T>(rows);

    BatchNormGrads<T> g{Tensor<T>(grad_out.shape), Tensor<T>({c}), Tensor<T>({c})};
    std::vector<T> sum_dxhat(c, T(0)), sum_dxhat_xhat(c, T(0));
    for (std::size_t r = 0; r < rows; ++r) {
        const T* go = grad_out.data.data() + r * c;
        const T* xh = cache.x_hat.data.data() + r * c;
        for (std::size_t ci = 0; ci < c; ++ci) {
            g.gamma[ci] += go[ci] * xh[ci];
            g.beta[ci] += go[ci];
            sum_dxhat[ci] += go[ci] * gamma[ci];
            sum_dxhat_xhat[ci] += go[ci] * gamma[ci] * xh[ci];
        }
    }
    for (std::size_t r = 0; r < rows; ++r) {
        const T* go = grad_out.data.data() + r * c;
        const T* xh = cache.x_hat.data.data() + r * c;
        T* gi = g.input.data.data() + r * c;
        for (std::size_t ci = 0; ci < c; ++ci) {
            const T dxhat = go[ci] * gamma[ci];
            gi[ci] = cache.inv_std[ci] *
                     (dxhat - sum_dxhat[ci] / m - xh[ci] * sum_dxhat_xhat[ci] / m);
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Dense, activations, loss.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
    if (input.rank() != 2 || weight.rank() != 2) {
        throw std::invalid_argument("dense_forward: expected [N,D] input and [D,U] weight");
    }
    const std::size_t n = input.dim(0), d = input.dim(1), u = weight.dim(1);
    if (weight.dim(0) != d || bias.size() != u) {
        throw std::invalid_argument("dense_forward: shape mismatch");
    }
    Tensor<T> out({n, u});
    for (std::size_t i = 0; i < n; ++i) {
        const T* row = input.data.data() + i * d;
        T* o = out.data.data() + i * u;
        for (std::size_t j = 0; j < u; ++j) o[j] = bias[j];
        for (std::size_t k = 0; k < d; ++k) {
            const T a = row[k];
            const T* wr = weight.data.data() + k * u;
            for (std::size_t j = 0; j < u; ++j) o[j] += a * wr[j];
        }
    }
    return out;
}

template <typename T>
struct DenseGrads {
    Tensor<T> input;
    Tensor<T> weight;
    Tensor<T> bias;
};

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                             const Tensor<T>& weight) {
    const std::size_t n = input.dim(0), d = input.dim(1), u = weight.dim(1);
    if (grad_out.dim(0) != n || grad_out.dim(1) != u) {
        throw std::invalid_argument("dense_backward: shape mismatch");
    }
    DenseGrads<T> g{Tensor<T>({n, d}), Tensor<T>({d, u}), Tensor<T>({u})};
    for (std::size_t i = 0; i < n; ++i) {
        const T* go = grad_out.data.data() + i * u;
        const T* row = input.data.data() + i * d;
        T* gi = g.input.data.data() + i * d;
        for (std::size_t j = 0; j < u; ++j) g.bias[j] += go[j];
        for (std::size_t k = 0; k < d; ++k) {
            const T* wr = weight.data.data() + k * u;
            T* gw = g.weight.data.data() + k * u;
            T acc{0};
            const T a = row[k];
            for (std::size_t j = 0; j < u; ++j) {
                acc += wr[j] * go[j];
                gw[j] += a * go[j];
            }
            gi[k] = acc;
        }
    }
    return g;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& z) {
    Tensor<T> out(z.shape);
    for (std::size_t i = 0; i < z.size(); ++i) out.data[i] = z.data[i] > T(0) ? z.data[i] : T(0);
    return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& pre_activation) {
    Tensor<T> gin(grad_out.shape);
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
        gin.data[i] = pre_activation.data[i] > T(0) ? grad_out.data[i] : T(0);
    }
    return gin;
}

// Row-wise softmax over the trailing axis.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
    const std::size_t c = x.shape.back();
    const std::size_t rows = x.size() / c;
    Tensor<T> out(x.shape);
    for (std::size_t r = 0; r < rows; ++r) {
        const T* row = x.data.data() + r * c;
        T* o = out.data.data() + r * c;
        T max_v = row[0];
        for (std::size_t i = 1; i < c; ++i) max_v = std::max(max_v, row[i]);
        T sum{0};
        for (std::size_t i = 0; i < c; ++i) {
            o[i] = std::exp(row[i] - max_v);
            sum += o[i];
        }
        for (std::size_t i = 0; i < c; ++i) o[i] /= sum;
    }
    return out;
}

// Mean negative log-likelihood; log arguments clamped at 1e-12.
template <typename T>
T cross_entropy(const Tensor<T>& probs, const std::vector<int>& labels) {
    const std::size_t c = probs.shape.back();
    const std::size_t n = probs.size() / c;
    if (labels.size() != n) throw std::invalid_argument("cross_entropy: label count mismatch");
    T loss{0};
    for (std::size_t i = 0; i < n; ++i) {
        const T p = probs.data[i * c + static_cast<std::size_t>(labels[i])];
        loss -= std::log(std::max(p, T(1e-12)));
    }
    return loss / static_cast<T>(n);
}

// Gradient of cross_entropy(softmax(logits)) w.r.t. the logits: (p - y)/N.
template <typename T>
Tensor<T> softmax_cross_entropy_grad(const Tensor<T>& probs, const std::vector<int>& labels) {
    const std::size_t c = probs.shape.back();
    const std::size_t n = probs.size() / c;
    Tensor<T> grad(probs.shape);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            grad.data[i * c + j] = probs.data[i * c + j] / static_cast<T>(n);
        }
        grad.data[i * c + static_cast<std::size_t>(labels[i])] -= T(1) / static_cast<T>(n);
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Adam with bias correction.
// ---------------------------------------------------------------------------

template <typename T>
struct AdamState {
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;
    std::uint64_t step = 0;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T>
void adam_step(std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads,
               AdamState<T>& state, const AdamConfig& config) {
    if (params.size() != grads.size()) throw std::invalid_argument("adam_step: size mismatch");
    if (state.m.empty()) {
        for (const auto* p : params) {
            state.m.emplace_back(p->shape);
            state.v.emplace_back(p->shape);
        }
    }
    state.step += 1;
    const T b1 = static_cast<T>(config.beta1), b2 = static_cast<T>(config.beta2);
    const T corr1 = T(1) - std::pow(b1, static_cast<T>(state.step));
    const T corr2 = T(1) - std::pow(b2, static_cast<T>(state.step));
    const T lr = static_cast<T>(config.lr);
    const T eps = static_cast<T>(config.eps);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor<T>& p = *params[i];
        const Tensor<T>& g = *grads[i];
        Tensor<T>& m = state.m[i];
        Tensor<T>& v = state.v[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            m.data[j] = b1 * m.data[j] + (T(1) - b1) * g.data[j];
            v.data[j] = b2 * v.data[j] + (T(1) - b2) * g.data[j] * g.data[j];
            const T m_hat = m.data[j] / corr1;
            const T v_hat = v.data[j] / corr2;
            p.data[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

}  // namespace roadsound::nn
