#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "etvd/data.hpp"
#include "etvd/image.hpp"
#include "etvd/tensor.hpp"

namespace etvd {

struct GlcmConfig {
    int levels = 64;       // quantization bins, >= 2
    int offset_dy = 0;     // pixel displacement, (0,0) is invalid
    int offset_dx = 1;
    bool symmetric = true;
    bool normalize = true;

    void validate() const;
};

// Normalized gray-level co-occurrence matrix over quantized intensity pairs.
struct GlcmMatrix {
    int levels = 0;
    std::vector<double> p;  // levels x levels, row-major

    double& at(int i, int j) { return p[static_cast<size_t>(i) * levels + j]; }
    double at(int i, int j) const { return p[static_cast<size_t>(i) * levels + j]; }
    double sum() const;
};

// Min-max rescales u to [0, levels-1], floors to integer bins (a constant
// image maps wholly to bin 0), then accumulates co-occurrence counts over all
// pixel pairs at the configured offset. Expects a single-channel image
// tensor (1, 1, h, w).
GlcmMatrix compute_glcm(const Tensor<double>& u, const GlcmConfig& cfg);

// Angular second moment: sum of squared GLCM entries. 1 for a constant
// image, 1/levels^2 for a uniform co-occurrence matrix.
double asm_energy(const GlcmMatrix& m);

enum class Activation { kElu, kRelu };

// Single-filter residual map v = conv(rot180(f), phi(conv(f, y))) with
// same-size padding at both stages; phi is ELU or ReLU.
Tensor<double> single_filter_residual(const Tensor<double>& y, const Filter<double>& f,
                                      Activation activation, double alpha);

struct AsmExperimentConfig {
    double sigma = 25.0;        // noise level for the synthesized observation
    int filter_size = 3;
    double alpha = 0.1;         // ELU saturation used in the experiment
    int trials_per_image = 20;
    uint64_t seed = 1;
    GlcmConfig glcm;            // identical in both arms by construction
};

struct AsmTrialRow {
    std::string image;
    int trial = 0;
    double sigma = 0.0;
    double asm_elu = 0.0;
    double asm_relu = 0.0;
    bool elu_lower = false;
};

struct AsmExperimentResult {
    long count_elu_lower = 0;
    long count_elu_higher = 0;
    long count_ties = 0;
    double fraction_elu_lower = 0.0;  // of all trials
    std::vector<AsmTrialRow> rows;
};

struct NamedImage {
    std::string name;
    Image image;
};

// Per image and trial: synthesize a noisy observation, draw a random 3x3
// filter (uniform on [-0.5, 0.5]), compute the residual ASM under both
// activations on identical inputs, and tally which arm is lower.
AsmExperimentResult asm_experiment(const std::vector<NamedImage>& images,
                                   const AsmExperimentConfig& cfg);

// Generalization used for negative controls (e.g. ELU vs ELU ties).
AsmExperimentResult asm_experiment_arms(const std::vector<NamedImage>& images,
                                        const AsmExperimentConfig& cfg,
                                        Activation arm_a, Activation arm_b);

// 10 * log10(1 / MSE) on [0, 1] intensities; +infinity when the inputs are
// identical. Equal in value to the 255-scale convention.
double psnr(const Tensor<double>& a, const Tensor<double>& b);
double psnr(const Tensor<float>& a, const Tensor<float>& b);
double psnr(const Image& a, const Image& b);

}  // namespace etvd
