#pragma once

#include <stdexcept>

#include "etvd/tensor.hpp"
#include "etvd/util.hpp"

namespace etvd {

// Spatial 180-degree rotation of every (c_out, c_in) slice. Together with
// conv2d_forward (which is plain cross-correlation) this realizes the
// flipped-filter convolution explicitly.
template <typename T>
Filter<T> rotate180(const Filter<T>& f) {
    Filter<T> out;
    out.weights = Tensor<T>(f.c_out(), f.c_in(), f.kh(), f.kw());
    out.bias = f.bias;
    const int kh = f.kh(), kw = f.kw();
    for (int co = 0; co < f.c_out(); ++co)
        for (int ci = 0; ci < f.c_in(); ++ci)
            for (int ky = 0; ky < kh; ++ky)
                for (int kx = 0; kx < kw; ++kx)
                    out.weights.at(co, ci, kh - 1 - ky, kw - 1 - kx) =
                        f.weights.at(co, ci, ky, kx);
    return out;
}

namespace detail {

template <typename T>
void validate_conv(const Tensor<T>& input, const Filter<T>& f, int zero_pad) {
    if (zero_pad < 0) throw std::invalid_argument("conv2d: zero_pad must be >= 0");
    if (f.kh() != f.kw() || (f.kh() != 1 && f.kh() != 3))
        throw std::invalid_argument("conv2d: kernel must be square with size 1 or 3");
    if (input.c() != f.c_in())
        throw std::invalid_argument("conv2d: channel mismatch, input has " +
                                    std::to_string(input.c()) + " channels, filter expects " +
                                    std::to_string(f.c_in()));
    int oh = input.h() + 2 * zero_pad - f.kh() + 1;
    int ow = input.w() + 2 * zero_pad - f.kw() + 1;
    if (oh < 1 || ow < 1)
        throw std::invalid_argument("conv2d: input smaller than kernel");
}

}  // namespace detail

// Stride-1 cross-correlation with zero padding. Output is
// (n, c_out, h + 2p - k + 1, w + 2p - k + 1); p = floor(k/2) keeps the
// spatial size. Out-of-bounds taps read zero.
//
// The kernel taps are applied as shifted row accumulations, so per output
// element the accumulation order over (c_in, ky, kx) is fixed and results are
// bit-identical regardless of how many threads split the (n, c_out) slices.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Filter<T>& f, int zero_pad) {
    detail::validate_conv(input, f, zero_pad);
    const int n = input.n(), c_in = input.c(), h = input.h(), w = input.w();
    const int c_out = f.c_out(), k = f.kh(), pad = zero_pad;
    const int oh = h + 2 * pad - k + 1;
    const int ow = w + 2 * pad - k + 1;

    Tensor<T> out(n, c_out, oh, ow);
    parallel_for(static_cast<int64_t>(n) * c_out, [&](int64_t job) {
        const int ni = static_cast<int>(job / c_out);
        const int co = static_cast<int>(job % c_out);
        T* out_plane = out.plane(ni, co);
        const T bias = f.bias[static_cast<size_t>(co)];
        for (int i = 0; i < oh * ow; ++i) out_plane[i] = bias;
        for (int ci = 0; ci < c_in; ++ci) {
            const T* in_plane = input.plane(ni, ci);
            for (int ky = 0; ky < k; ++ky) {
                const int dy = ky - pad;
                const int oy0 = std::max(0, -dy);
                const int oy1 = std::min(oh - 1, h - 1 - dy);
                for (int kx = 0; kx < k; ++kx) {
                    const int dx = kx - pad;
                    const int ox0 = std::max(0, -dx);
                    const int ox1 = std::min(ow - 1, w - 1 - dx);
                    if (ox0 > ox1) continue;
                    const T wv = f.weights.at(co, ci, ky, kx);
                    for (int oy = oy0; oy <= oy1; ++oy) {
                        const T* src = in_plane + (oy + dy) * w + (ox0 + dx);
                        T* dst = out_plane + oy * ow + ox0;
                        const int count = ox1 - ox0 + 1;
                        for (int i = 0; i < count; ++i) dst[i] += wv * src[i];
                    }
                }
            }
        }
    });
    ensure_finite(out, "conv2d_forward");
    return out;
}

template <typename T>
struct ConvGrads {
    Tensor<T> grad_input;
    Filter<T> grad_filter;  // bias field carries the bias gradient
};

// Adjoint of conv2d_forward. grad_input applies the transposed map
// (equivalently, correlation with the 180-degree-rotated filter); grad_filter
// accumulates input x grad_out correlations; the bias gradient is the
// per-channel sum of grad_out.
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Filter<T>& f,
                             const Tensor<T>& grad_out, int zero_pad) {
    detail::validate_conv(input, f, zero_pad);
    const int n = input.n(), c_in = input.c(), h = input.h(), w = input.w();
    const int c_out = f.c_out(), k = f.kh(), pad = zero_pad;
    const int oh = h + 2 * pad - k + 1;
    const int ow = w + 2 * pad - k + 1;
    if (grad_out.shape() != Shape{n, c_out, oh, ow})
        throw std::invalid_argument("conv2d_backward: grad_out shape " +
                                    grad_out.shape().str() + " does not match forward output " +
                                    Shape{n, c_out, oh, ow}.str());

    ConvGrads<T> g;
    g.grad_input = Tensor<T>(input.shape());
    g.grad_filter = Filter<T>(c_out, c_in, k);

    // grad_input[ci][iy][ix] += w[co][ci][ky][kx] * grad_out[co][iy-ky+pad][ix-kx+pad]
    parallel_for(static_cast<int64_t>(n) * c_in, [&](int64_t job) {
        const int ni = static_cast<int>(job / c_in);
        const int ci = static_cast<int>(job % c_in);
        T* gi_plane = g.grad_input.plane(ni, ci);
        for (int co = 0; co < c_out; ++co) {
            const T* go_plane = grad_out.plane(ni, co);
            for (int ky = 0; ky < k; ++ky) {
                const int dy = pad - ky;
                const int iy0 = std::max(0, -dy);
                const int iy1 = std::min(h - 1, oh - 1 - dy);
                for (int kx = 0; kx < k; ++kx) {
                    const int dx = pad - kx;
                    const int ix0 = std::max(0, -dx);
                    const int ix1 = std::min(w - 1, ow - 1 - dx);
                    if (ix0 > ix1) continue;
                    const T wv = f.weights.at(co, ci, ky, kx);
                    for (int iy = iy0; iy <= iy1; ++iy) {
                        const T* src = go_plane + (iy + dy) * ow + (ix0 + dx);
                        T* dst = gi_plane + iy * w + ix0;
                        const int count = ix1 - ix0 + 1;
                        for (int i = 0; i < count; ++i) dst[i] += wv * src[i];
                    }
                }
            }
        }
    });

    // grad_w[co][ci][ky][kx] = sum_{n,oy,ox} grad_out[n][co][oy][ox] * input[n][ci][oy+ky-pad][ox+kx-pad]
    parallel_for(static_cast<int64_t>(c_out) * c_in, [&](int64_t job) {
        const int co = static_cast<int>(job / c_in);
        const int ci = static_cast<int>(job % c_in);
        for (int ky = 0; ky < k; ++ky) {
            const int dy = ky - pad;
            const int oy0 = std::max(0, -dy);
            const int oy1 = std::min(oh - 1, h - 1 - dy);
            for (int kx = 0; kx < k; ++kx) {
                const int dx = kx - pad;
                const int ox0 = std::max(0, -dx);
                const int ox1 = std::min(ow - 1, w - 1 - dx);
                T acc = 0;
                if (ox0 <= ox1) {
                    for (int ni = 0; ni < n; ++ni) {
                        const T* go_plane = grad_out.plane(ni, co);
                        const T* in_plane = input.plane(ni, ci);
                        for (int oy = oy0; oy <= oy1; ++oy) {
                            const T* go = go_plane + oy * ow + ox0;
                            const T* in = in_plane + (oy + dy) * w + (ox0 + dx);
                            T row = 0;
                            const int count = ox1 - ox0 + 1;
                            for (int i = 0; i < count; ++i) row += go[i] * in[i];
                            acc += row;
                        }
                    }
                }
                g.grad_filter.weights.at(co, ci, ky, kx) = acc;
            }
        }
    });

    for (int co = 0; co < c_out; ++co) {
        T acc = 0;
        for (int ni = 0; ni < n; ++ni) {
            const T* go = grad_out.plane(ni, co);
            for (int i = 0; i < oh * ow; ++i) acc += go[i];
        }
        g.grad_filter.bias[static_cast<size_t>(co)] = acc;
    }

    ensure_finite(g.grad_input, "conv2d_backward grad_input");
    ensure_finite(g.grad_filter, "conv2d_backward grad_filter");
    return g;
}

}  // namespace etvd
