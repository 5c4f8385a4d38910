#include "etvd/texture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "etvd/conv.hpp"
#include "etvd/layers.hpp"
#include "etvd/rng.hpp"

namespace etvd {

void GlcmConfig::validate() const {
    if (levels < 2) throw std::invalid_argument("GlcmConfig: levels must be >= 2");
    if (offset_dy == 0 && offset_dx == 0)
        throw std::invalid_argument("GlcmConfig: offset must be nonzero");
}

double GlcmMatrix::sum() const {
    double s = 0.0;
    for (double v : p) s += v;
    return s;
}

GlcmMatrix compute_glcm(const Tensor<double>& u, const GlcmConfig& cfg) {
    cfg.validate();
    if (u.n() != 1 || u.c() != 1)
        throw std::invalid_argument("compute_glcm: expected a single-channel image (1,1,h,w)");
    ensure_finite(u, "compute_glcm input");
    const int h = u.h(), w = u.w();
    if (std::abs(cfg.offset_dy) >= h || std::abs(cfg.offset_dx) >= w)
        throw std::invalid_argument("compute_glcm: image smaller than offset");

    const double* p = u.plane(0, 0);
    double lo = p[0], hi = p[0];
    for (int i = 0; i < h * w; ++i) {
        lo = std::min(lo, p[i]);
        hi = std::max(hi, p[i]);
    }

    // Min-max rescale to [0, levels-1] and floor; a constant image collapses
    // into bin 0.
    const int levels = cfg.levels;
    std::vector<int> bins(static_cast<size_t>(h) * w, 0);
    if (hi > lo) {
        const double scale = (levels - 1) / (hi - lo);
        for (int i = 0; i < h * w; ++i) {
            int b = static_cast<int>(std::floor((p[i] - lo) * scale));
            bins[static_cast<size_t>(i)] = std::clamp(b, 0, levels - 1);
        }
    }

    GlcmMatrix m;
    m.levels = levels;
    m.p.assign(static_cast<size_t>(levels) * levels, 0.0);

    const int dy = cfg.offset_dy, dx = cfg.offset_dx;
    const int y0 = std::max(0, -dy), y1 = std::min(h - 1, h - 1 - dy);
    const int x0 = std::max(0, -dx), x1 = std::min(w - 1, w - 1 - dx);
    long pairs = 0;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const int a = bins[static_cast<size_t>(y) * w + x];
            const int b = bins[static_cast<size_t>(y + dy) * w + (x + dx)];
            m.at(a, b) += 1.0;
            ++pairs;
        }
    if (pairs == 0) throw std::invalid_argument("compute_glcm: no valid pixel pairs");

    if (cfg.symmetric) {
        for (int i = 0; i < levels; ++i)
            for (int j = i + 1; j < levels; ++j) {
                const double s = m.at(i, j) + m.at(j, i);
                m.at(i, j) = s;
                m.at(j, i) = s;
            }
        for (int i = 0; i < levels; ++i) m.at(i, i) *= 2.0;
    }
    if (cfg.normalize) {
        const double total = m.sum();
        for (double& v : m.p) v /= total;
    }
    return m;
}

double asm_energy(const GlcmMatrix& m) {
    double s = 0.0;
    for (double v : m.p) s += v * v;
    return s;
}

namespace {

Tensor<double> apply_activation(const Tensor<double>& x, Activation act, double alpha) {
    if (act == Activation::kElu) return elu_forward(x, EluParams(alpha));
    return relu_forward(x);
}

}  // namespace

Tensor<double> single_filter_residual(const Tensor<double>& y, const Filter<double>& f,
                                      Activation activation, double alpha) {
    if (y.n() != 1 || y.c() != 1)
        throw std::invalid_argument("single_filter_residual: expected a (1,1,h,w) image");
    if (f.c_out() != 1 || f.c_in() != 1)
        throw std::invalid_argument("single_filter_residual: expected a single-channel filter");
    const int pad = f.kh() / 2;
    Tensor<double> inner = conv2d_forward(y, f, pad);
    Tensor<double> activated = apply_activation(inner, activation, alpha);
    return conv2d_forward(activated, rotate180(f), pad);
}

AsmExperimentResult asm_experiment_arms(const std::vector<NamedImage>& images,
                                        const AsmExperimentConfig& cfg,
                                        Activation arm_a, Activation arm_b) {
    if (images.empty()) throw std::invalid_argument("asm_experiment: empty image set");
    if (cfg.trials_per_image < 1)
        throw std::invalid_argument("asm_experiment: trials_per_image must be >= 1");
    cfg.glcm.validate();

    AsmExperimentResult result;
    for (size_t ii = 0; ii < images.size(); ++ii) {
        const Image& img = images[ii].image;
        if (img.channels != 1)
            throw std::invalid_argument("asm_experiment: images must be grayscale: " +
                                        images[ii].name);
        const uint64_t image_seed = mix_seed(cfg.seed, ii);
        for (int trial = 0; trial < cfg.trials_per_image; ++trial) {
            const uint64_t trial_seed = mix_seed(image_seed, static_cast<uint64_t>(trial));

            NoiseSpec noise;
            noise.mode = NoiseMode::kFixed;
            noise.sigma = cfg.sigma;
            noise.seed = trial_seed;
            Tensor<double> y = add_gaussian_noise(img, noise).noisy;

            Filter<double> f(1, 1, cfg.filter_size);
            Rng rng(mix_seed(trial_seed, 0xF1172));
            for (size_t i = 0; i < f.weights.size(); ++i)
                f.weights[i] = rng.next_uniform(-0.5, 0.5);

            const double asm_a = asm_energy(
                compute_glcm(single_filter_residual(y, f, arm_a, cfg.alpha), cfg.glcm));
            const double asm_b = asm_energy(
                compute_glcm(single_filter_residual(y, f, arm_b, cfg.alpha), cfg.glcm));

            AsmTrialRow row;
            row.image = images[ii].name;
            row.trial = trial;
            row.sigma = cfg.sigma;
            row.asm_elu = asm_a;
            row.asm_relu = asm_b;
            row.elu_lower = asm_a < asm_b;
            result.rows.push_back(std::move(row));

            if (asm_a < asm_b)
                ++result.count_elu_lower;
            else if (asm_a > asm_b)
                ++result.count_elu_higher;
            else
                ++result.count_ties;
        }
    }
    const long total = result.count_elu_lower + result.count_elu_higher + result.count_ties;
    result.fraction_elu_lower = static_cast<double>(result.count_elu_lower) / total;
    return result;
}

AsmExperimentResult asm_experiment(const std::vector<NamedImage>& images,
                                   const AsmExperimentConfig& cfg) {
    return asm_experiment_arms(images, cfg, Activation::kElu, Activation::kRelu);
}

namespace {

template <typename T>
double psnr_impl(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape()) throw std::invalid_argument("psnr: shape mismatch");
    if (a.size() == 0) throw std::invalid_argument("psnr: empty input");
    double mse = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

}  // namespace

double psnr(const Tensor<double>& a, const Tensor<double>& b) { return psnr_impl(a, b); }
double psnr(const Tensor<float>& a, const Tensor<float>& b) { return psnr_impl(a, b); }

double psnr(const Image& a, const Image& b) {
    if (a.channels != b.channels || a.h != b.h || a.w != b.w)
        throw std::invalid_argument("psnr: shape mismatch");
    return psnr_impl(image_to_tensor(a), image_to_tensor(b));
}

}  // namespace etvd
