#pragma once

#include <cmath>
#include <stdexcept>

#include "etvd/tensor.hpp"

namespace etvd {

struct TvL2Config {
    double beta = 1e-4;        // TV weight before the switch epoch
    double beta_late = 5e-4;   // TV weight from the switch epoch on
    int switch_epoch = 30;
    double tv_eps = 1e-3;      // smoothing for the TV gradient

    double beta_at(int epoch) const { return epoch >= switch_epoch ? beta_late : beta; }

    void validate() const {
        if (beta < 0 || beta_late < 0)
            throw std::invalid_argument("TvL2Config: beta must be >= 0");
        if (!(tv_eps > 0)) throw std::invalid_argument("TvL2Config: tv_eps must be > 0");
    }
};

namespace detail {

// sum_{i,j} sqrt(dx^2 + dy^2 + eps^2) over one channel plane, forward
// differences with zero derivative at the last row/column. eps = 0 gives the
// exact TV value.
template <typename T>
double tv_plane(const T* p, int h, int w, double eps) {
    const double eps2 = eps * eps;
    double total = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double v = p[y * w + x];
            const double dx = x + 1 < w ? p[y * w + x + 1] - v : 0.0;
            const double dy = y + 1 < h ? p[(y + 1) * w + x] - v : 0.0;
            total += std::sqrt(dx * dx + dy * dy + eps2);
        }
    }
    return total;
}

// Accumulates d(tv_plane)/du into grad, scaled by `scale`.
template <typename T>
void tv_plane_grad(const T* p, int h, int w, double eps, double scale, T* grad) {
    const double eps2 = eps * eps;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double v = p[y * w + x];
            const double dx = x + 1 < w ? p[y * w + x + 1] - v : 0.0;
            const double dy = y + 1 < h ? p[(y + 1) * w + x] - v : 0.0;
            const double r = std::sqrt(dx * dx + dy * dy + eps2);
            const double inv = scale / r;
            grad[y * w + x] += static_cast<T>(-(dx + dy) * inv);
            if (x + 1 < w) grad[y * w + x + 1] += static_cast<T>(dx * inv);
            if (y + 1 < h) grad[(y + 1) * w + x] += static_cast<T>(dy * inv);
        }
    }
}

template <typename T>
double tv_sample(const Tensor<T>& u, int ni, double eps) {
    double total = 0.0;
    for (int c = 0; c < u.c(); ++c) total += tv_plane(u.plane(ni, c), u.h(), u.w(), eps);
    return total;
}

}  // namespace detail

// Discrete total variation of a single image, per-channel TV summed over
// channels. Zero exactly when the image is constant per channel.
template <typename T>
double tv_value(const Tensor<T>& u) {
    if (u.n() != 1) throw std::invalid_argument("tv_value: expected a single image (n == 1)");
    return detail::tv_sample(u, 0, 0.0);
}

// Smoothed surrogate sum sqrt(dx^2 + dy^2 + eps^2); differs from tv_value by
// at most h*w*eps per channel and is differentiable everywhere.
template <typename T>
double tv_value_smoothed(const Tensor<T>& u, double eps) {
    if (u.n() != 1) throw std::invalid_argument("tv_value_smoothed: expected a single image");
    if (!(eps > 0)) throw std::invalid_argument("tv_value_smoothed: eps must be > 0");
    return detail::tv_sample(u, 0, eps);
}

namespace detail {

template <typename T>
double tv_l2_loss(const Tensor<T>& R, const Tensor<T>& y, const Tensor<T>& x,
                  const TvL2Config& cfg, int epoch, double tv_eps) {
    if (R.shape() != y.shape() || R.shape() != x.shape())
        throw std::invalid_argument("loss_forward: shape mismatch");
    if (R.n() < 1) throw std::invalid_argument("loss_forward: empty batch");
    cfg.validate();
    const int n = R.n();
    const int64_t per_sample = static_cast<int64_t>(R.c()) * R.h() * R.w();

    double data_term = 0.0;
    for (int ni = 0; ni < n; ++ni) {
        const T* r = R.data() + ni * per_sample;
        const T* yv = y.data() + ni * per_sample;
        const T* xv = x.data() + ni * per_sample;
        double s = 0.0;
        for (int64_t i = 0; i < per_sample; ++i) {
            const double d = static_cast<double>(r[i]) - (static_cast<double>(yv[i]) - xv[i]);
            s += d * d;
        }
        data_term += s;
    }

    double tv_term = 0.0;
    const double beta = cfg.beta_at(epoch);
    if (beta != 0.0) {
        Tensor<T> u(Shape{1, R.c(), R.h(), R.w()});
        for (int ni = 0; ni < n; ++ni) {
            const T* r = R.data() + ni * per_sample;
            const T* yv = y.data() + ni * per_sample;
            for (int64_t i = 0; i < per_sample; ++i) u[static_cast<size_t>(i)] = yv[i] - r[i];
            tv_term += tv_sample(u, 0, tv_eps);
        }
    }
    return data_term / (2.0 * n) + beta * tv_term / n;
}

}  // namespace detail

// L = (1/2N) sum_i ||R_i - (y_i - x_i)||^2 + (beta(epoch)/N) sum_i TV(y_i - R_i)
// with the exact TV value. This is the quantity reported in training logs.
template <typename T>
double loss_forward(const Tensor<T>& R, const Tensor<T>& y, const Tensor<T>& x,
                    const TvL2Config& cfg, int epoch) {
    return detail::tv_l2_loss(R, y, x, cfg, epoch, 0.0);
}

// Same objective with the eps-smoothed TV; this is the differentiable
// function whose gradient loss_backward returns, and the one finite
// differences must be taken against.
template <typename T>
double loss_forward_smoothed(const Tensor<T>& R, const Tensor<T>& y, const Tensor<T>& x,
                             const TvL2Config& cfg, int epoch) {
    return detail::tv_l2_loss(R, y, x, cfg, epoch, cfg.tv_eps);
}

// dL/dR = (1/N)(R - (y - x)) - (beta/N) dTV_smoothed/du at u = y - R.
template <typename T>
Tensor<T> loss_backward(const Tensor<T>& R, const Tensor<T>& y, const Tensor<T>& x,
                        const TvL2Config& cfg, int epoch) {
    if (R.shape() != y.shape() || R.shape() != x.shape())
        throw std::invalid_argument("loss_backward: shape mismatch");
    if (R.n() < 1) throw std::invalid_argument("loss_backward: empty batch");
    cfg.validate();
    const int n = R.n();
    const int64_t per_sample = static_cast<int64_t>(R.c()) * R.h() * R.w();

    Tensor<T> grad(R.shape());
    const double inv_n = 1.0 / n;
    for (size_t i = 0; i < R.size(); ++i)
        grad[i] = static_cast<T>(inv_n * (static_cast<double>(R[i]) -
                                          (static_cast<double>(y[i]) - x[i])));

    const double beta = cfg.beta_at(epoch);
    if (beta != 0.0) {
        Tensor<T> u(Shape{1, R.c(), R.h(), R.w()});
        Tensor<T> tv_grad_u(u.shape());
        for (int ni = 0; ni < n; ++ni) {
            const T* r = R.data() + ni * per_sample;
            const T* yv = y.data() + ni * per_sample;
            for (int64_t i = 0; i < per_sample; ++i) u[static_cast<size_t>(i)] = yv[i] - r[i];
            tv_grad_u.fill(T(0));
            for (int c = 0; c < u.c(); ++c)
                detail::tv_plane_grad(u.plane(0, c), u.h(), u.w(), cfg.tv_eps, 1.0,
                                      tv_grad_u.plane(0, c));
            // u = y - R, so dL/dR picks up a sign flip.
            T* gr = grad.data() + ni * per_sample;
            const double scale = beta * inv_n;
            for (int64_t i = 0; i < per_sample; ++i)
                gr[i] -= static_cast<T>(scale * tv_grad_u[static_cast<size_t>(i)]);
        }
    }
    ensure_finite(grad, "loss_backward");
    return grad;
}

}  // namespace etvd
