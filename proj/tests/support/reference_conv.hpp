#pragma once

// Naive nested-loop convolution used as an independent oracle for the
// optimized path. Deliberately has no code in common with conv2d_forward.

#include "etvd/tensor.hpp"

namespace etvd::testsupport {

template <typename T>
Tensor<T> conv2d_reference(const Tensor<T>& input, const Filter<T>& f, int pad) {
    const int n = input.n(), c_in = input.c(), h = input.h(), w = input.w();
    const int c_out = f.c_out(), kh = f.kh(), kw = f.kw();
    const int oh = h + 2 * pad - kh + 1;
    const int ow = w + 2 * pad - kw + 1;
    Tensor<T> out(n, c_out, oh, ow);
    for (int ni = 0; ni < n; ++ni)
        for (int co = 0; co < c_out; ++co)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    T acc = f.bias[static_cast<size_t>(co)];
                    for (int ci = 0; ci < c_in; ++ci)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx) {
                                const int iy = oy + ky - pad;
                                const int ix = ox + kx - pad;
                                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                                acc += f.weights.at(co, ci, ky, kx) * input.at(ni, ci, iy, ix);
                            }
                    out.at(ni, co, oy, ox) = acc;
                }
    return out;
}

}  // namespace etvd::testsupport
