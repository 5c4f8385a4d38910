#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "etvd/rng.hpp"
#include "etvd/tensor.hpp"

namespace etvd {

struct EluParams {
    double alpha = 1.0;  // saturation level for negative inputs, must be > 0

    explicit EluParams(double a = 1.0) : alpha(a) {
        if (!(alpha > 0)) throw std::invalid_argument("EluParams: alpha must be > 0");
    }
};

// x for x > 0, alpha * (exp(x) - 1) otherwise. Continuous at 0, bounded
// below by -alpha.
template <typename T>
Tensor<T> elu_forward(const Tensor<T>& x, const EluParams& p) {
    Tensor<T> out(x.shape());
    const T alpha = static_cast<T>(p.alpha);
    for (size_t i = 0; i < x.size(); ++i) {
        const T v = x[i];
        out[i] = v > T(0) ? v : alpha * (std::exp(v) - T(1));
    }
    ensure_finite(out, "elu_forward");
    return out;
}

// Derivative is 1 on the positive side, alpha * exp(x) on the negative side;
// the kink at exactly 0 resolves to 1.
template <typename T>
Tensor<T> elu_backward(const Tensor<T>& x, const Tensor<T>& grad_out, const EluParams& p) {
    if (x.shape() != grad_out.shape())
        throw std::invalid_argument("elu_backward: shape mismatch");
    Tensor<T> out(x.shape());
    const T alpha = static_cast<T>(p.alpha);
    for (size_t i = 0; i < x.size(); ++i) {
        const T v = x[i];
        out[i] = grad_out[i] * (v >= T(0) ? T(1) : alpha * std::exp(v));
    }
    return out;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
    Tensor<T> out(x.shape());
    for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
    return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
    if (x.shape() != grad_out.shape())
        throw std::invalid_argument("relu_backward: shape mismatch");
    Tensor<T> out(x.shape());
    for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T(0) ? grad_out[i] : T(0);
    return out;
}

enum class BnMode { kTrain, kEval };

template <typename T>
struct BatchNormState {
    std::vector<T> gamma;
    std::vector<T> beta;
    std::vector<T> running_mean;
    std::vector<T> running_var;
    double eps = 1e-5;
    double stat_momentum = 0.1;

    BatchNormState() = default;
    explicit BatchNormState(int channels)
        : gamma(static_cast<size_t>(channels), T(1)),
          beta(static_cast<size_t>(channels), T(0)),
          running_mean(static_cast<size_t>(channels), T(0)),
          running_var(static_cast<size_t>(channels), T(1)) {}

    int channels() const { return static_cast<int>(gamma.size()); }
};

// Batch statistics retained by a train-mode forward; required by backward.
template <typename T>
struct BnCache {
    bool valid = false;
    Tensor<T> xhat;
    std::vector<double> inv_std;  // per channel, 1 / sqrt(var + eps)
};

// Train mode normalizes each channel by the batch mean/variance over
// (batch, h, w), applies the learned affine, and folds the batch statistics
// into the running estimates with stat_momentum. Eval mode normalizes by the
// running estimates. Statistics accumulate in double even for float tensors.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, BatchNormState<T>& s, BnMode mode,
                            BnCache<T>* cache = nullptr) {
    if (x.c() != s.channels())
        throw std::invalid_argument("batchnorm_forward: channel mismatch");
    const int n = x.n(), c = x.c(), h = x.h(), w = x.w();
    const int64_t m = static_cast<int64_t>(n) * h * w;
    Tensor<T> out(x.shape());

    if (mode == BnMode::kTrain) {
        if (m < 2)
            throw std::invalid_argument(
                "batchnorm_forward: batch*h*w must be >= 2 in train mode");
        if (cache) {
            cache->valid = true;
            cache->xhat = Tensor<T>(x.shape());
            cache->inv_std.assign(static_cast<size_t>(c), 0.0);
        }
        for (int ci = 0; ci < c; ++ci) {
            double sum = 0.0;
            for (int ni = 0; ni < n; ++ni) {
                const T* p = x.plane(ni, ci);
                for (int i = 0; i < h * w; ++i) sum += p[i];
            }
            const double mean = sum / static_cast<double>(m);
            double sq = 0.0;
            for (int ni = 0; ni < n; ++ni) {
                const T* p = x.plane(ni, ci);
                for (int i = 0; i < h * w; ++i) {
                    const double d = p[i] - mean;
                    sq += d * d;
                }
            }
            const double var = sq / static_cast<double>(m);
            const double inv_std = 1.0 / std::sqrt(var + s.eps);
            const double g = s.gamma[static_cast<size_t>(ci)];
            const double b = s.beta[static_cast<size_t>(ci)];
            for (int ni = 0; ni < n; ++ni) {
                const T* p = x.plane(ni, ci);
                T* o = out.plane(ni, ci);
                T* xh = cache ? cache->xhat.plane(ni, ci) : nullptr;
                for (int i = 0; i < h * w; ++i) {
                    const double xhat = (p[i] - mean) * inv_std;
                    if (xh) xh[i] = static_cast<T>(xhat);
                    o[i] = static_cast<T>(g * xhat + b);
                }
            }
            if (cache) cache->inv_std[static_cast<size_t>(ci)] = inv_std;
            const double mom = s.stat_momentum;
            s.running_mean[static_cast<size_t>(ci)] = static_cast<T>(
                (1.0 - mom) * s.running_mean[static_cast<size_t>(ci)] + mom * mean);
            s.running_var[static_cast<size_t>(ci)] = static_cast<T>(
                (1.0 - mom) * s.running_var[static_cast<size_t>(ci)] + mom * var);
        }
    } else {
        if (cache) cache->valid = false;
        for (int ci = 0; ci < c; ++ci) {
            const double mean = s.running_mean[static_cast<size_t>(ci)];
            const double inv_std = 1.0 / std::sqrt(static_cast<double>(s.running_var[static_cast<size_t>(ci)]) + s.eps);
            const double g = s.gamma[static_cast<size_t>(ci)];
            const double b = s.beta[static_cast<size_t>(ci)];
            for (int ni = 0; ni < n; ++ni) {
                const T* p = x.plane(ni, ci);
                T* o = out.plane(ni, ci);
                for (int i = 0; i < h * w; ++i)
                    o[i] = static_cast<T>(g * ((p[i] - mean) * inv_std) + b);
            }
        }
    }
    ensure_finite(out, "batchnorm_forward");
    return out;
}

template <typename T>
struct BnGrads {
    Tensor<T> grad_x;
    std::vector<T> grad_gamma;
    std::vector<T> grad_beta;
};

// Gradient through the batch statistics:
//   dx = inv_std * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat))
// with dxhat = grad_out * gamma and means over (batch, h, w). Only defined
// for train-mode forwards; an eval-mode cache is rejected.
template <typename T>
BnGrads<T> batchnorm_backward(const Tensor<T>& grad_out, const BnCache<T>& cache,
                              const BatchNormState<T>& s) {
    if (!cache.valid)
        throw std::invalid_argument(
            "batchnorm_backward: no train-mode cache (called in eval mode?)");
    if (grad_out.shape() != cache.xhat.shape())
        throw std::invalid_argument("batchnorm_backward: shape mismatch");
    const int n = grad_out.n(), c = grad_out.c(), h = grad_out.h(), w = grad_out.w();
    const double m = static_cast<double>(static_cast<int64_t>(n) * h * w);

    BnGrads<T> g;
    g.grad_x = Tensor<T>(grad_out.shape());
    g.grad_gamma.assign(static_cast<size_t>(c), T(0));
    g.grad_beta.assign(static_cast<size_t>(c), T(0));

    for (int ci = 0; ci < c; ++ci) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int ni = 0; ni < n; ++ni) {
            const T* dy = grad_out.plane(ni, ci);
            const T* xh = cache.xhat.plane(ni, ci);
            for (int i = 0; i < h * w; ++i) {
                sum_dy += dy[i];
                sum_dy_xhat += static_cast<double>(dy[i]) * xh[i];
            }
        }
        g.grad_beta[static_cast<size_t>(ci)] = static_cast<T>(sum_dy);
        g.grad_gamma[static_cast<size_t>(ci)] = static_cast<T>(sum_dy_xhat);

        const double gamma = s.gamma[static_cast<size_t>(ci)];
        const double inv_std = cache.inv_std[static_cast<size_t>(ci)];
        const double mean_dxhat = gamma * sum_dy / m;
        const double mean_dxhat_xhat = gamma * sum_dy_xhat / m;
        for (int ni = 0; ni < n; ++ni) {
            const T* dy = grad_out.plane(ni, ci);
            const T* xh = cache.xhat.plane(ni, ci);
            T* dx = g.grad_x.plane(ni, ci);
            for (int i = 0; i < h * w; ++i) {
                const double dxhat = gamma * dy[i];
                dx[i] = static_cast<T>(inv_std * (dxhat - mean_dxhat - xh[i] * mean_dxhat_xhat));
            }
        }
    }
    return g;
}

// Zero-mean Gaussian weights with std sqrt(2 / (c_in * kh * kw)), zero bias.
// Deterministic for a given seed.
template <typename T>
Filter<T> msra_init(int c_out, int c_in, int k, uint64_t seed) {
    Filter<T> f(c_out, c_in, k);
    const double stddev = std::sqrt(2.0 / (static_cast<double>(c_in) * k * k));
    Rng rng(seed);
    for (size_t i = 0; i < f.weights.size(); ++i)
        f.weights[i] = static_cast<T>(stddev * rng.next_gaussian());
    return f;
}

}  // namespace etvd
