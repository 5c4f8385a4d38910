#pragma once

// Deterministic piecewise-smooth test images: a bilinear background, soft
// edged ellipses and rectangles, optional low-amplitude sinusoidal texture,
// quantized to the 8-bit grid like any file-backed source.

#include <algorithm>
#include <cmath>

#include "etvd/image.hpp"
#include "etvd/rng.hpp"
#include "etvd/util.hpp"

namespace etvd::testsupport {

inline double smoothstep(double edge0, double edge1, double x) {
    double t = std::clamp((x - edge0) / (edge1 - edge0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

inline Image make_synthetic_image(uint64_t seed, int h, int w) {
    Rng rng(seed);
    Image img(1, h, w);

    const double c00 = rng.next_uniform(0.2, 0.8), c01 = rng.next_uniform(0.2, 0.8);
    const double c10 = rng.next_uniform(0.2, 0.8), c11 = rng.next_uniform(0.2, 0.8);
    for (int y = 0; y < h; ++y) {
        const double fy = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
        for (int x = 0; x < w; ++x) {
            const double fx = w > 1 ? static_cast<double>(x) / (w - 1) : 0.0;
            img.at(0, y, x) = (1 - fy) * ((1 - fx) * c00 + fx * c01) +
                              fy * ((1 - fx) * c10 + fx * c11);
        }
    }

    const int shapes = 6 + static_cast<int>(rng.next_below(7));
    for (int s = 0; s < shapes; ++s) {
        const bool ellipse = rng.next_uniform() < 0.6;
        const double cx = rng.next_uniform(0.0, w);
        const double cy = rng.next_uniform(0.0, h);
        const double ax = rng.next_uniform(0.08, 0.35) * w;
        const double ay = rng.next_uniform(0.08, 0.35) * h;
        const double value = rng.next_uniform(0.05, 0.95);
        const double opacity = rng.next_uniform(0.6, 1.0);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double cover;
                if (ellipse) {
                    const double r = ((x - cx) / ax) * ((x - cx) / ax) +
                                     ((y - cy) / ay) * ((y - cy) / ay);
                    cover = 1.0 - smoothstep(0.85, 1.15, r);
                } else {
                    const double dx = std::abs(x - cx) / ax;
                    const double dy = std::abs(y - cy) / ay;
                    cover = (1.0 - smoothstep(0.9, 1.1, dx)) * (1.0 - smoothstep(0.9, 1.1, dy));
                }
                if (cover > 0)
                    img.at(0, y, x) += cover * opacity * (value - img.at(0, y, x));
            }
    }

    if (rng.next_uniform() < 0.5) {
        const double amp = rng.next_uniform(0.0, 0.04);
        const double fx = rng.next_uniform(0.02, 0.2);
        const double fy = rng.next_uniform(0.02, 0.2);
        const double phase = rng.next_uniform(0.0, 6.28318);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                img.at(0, y, x) += amp * std::sin(fx * x + fy * y + phase);
    }

    for (double& v : img.pix) v = std::round(clamp01(v) * 255.0) / 255.0;
    return img;
}

inline Image make_synthetic_color_image(uint64_t seed, int h, int w) {
    Image r = make_synthetic_image(mix_seed(seed, 0), h, w);
    Image g = make_synthetic_image(mix_seed(seed, 1), h, w);
    Image b = make_synthetic_image(mix_seed(seed, 2), h, w);
    Image out(3, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            // correlate the channels so the result looks like a tinted photo
            const double base = r.at(0, y, x);
            out.at(0, y, x) = base;
            out.at(1, y, x) = 0.7 * base + 0.3 * g.at(0, y, x);
            out.at(2, y, x) = 0.7 * base + 0.3 * b.at(0, y, x);
        }
    return out;
}

}  // namespace etvd::testsupport
