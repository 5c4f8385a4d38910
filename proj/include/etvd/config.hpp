#pragma once

#include <cstdint>
#include <string>

#include "etvd/data.hpp"
#include "etvd/network.hpp"
#include "etvd/texture.hpp"
#include "etvd/train.hpp"

namespace etvd {

inline constexpr uint64_t kDefaultSeed = 1;

// Aggregated settings for every CLI command, read from a plain-text
// key=value file with [section] headers ('#' comments). Unknown sections or
// keys are errors; parse(serialize(cfg)) reproduces cfg exactly.
struct RunConfig {
    NetworkConfig network;          // [network] blocks, channels, in_channels, alpha
    TrainConfig train;              // [train] epochs, batch_size, lr, lr_late, ...
    int patch_size = 40;            // [train] patch_size
    int patch_stride = 20;          // [train] patch_stride
    NoiseSpec noise;                // [noise] mode, sigma, range_lo, range_hi
    GlcmConfig glcm;                // [glcm] levels, offset_dy, offset_dx, symmetric
    int trials_per_image = 20;      // [experiment]
    int exp_filter_size = 3;        // [experiment]
    double exp_alpha = 0.1;         // [experiment]
    std::string train_manifest;     // [paths]
    std::string eval_manifest;      // [paths]
    std::string checkpoint;         // [paths]
    std::string out_dir = "out";    // [paths]
    uint64_t seed = kDefaultSeed;   // [run] seed; mirrored into sub-configs

    static RunConfig parse(const std::string& text);
    static RunConfig load(const std::string& path);
    std::string serialize() const;

    // Pushes the run seed into the network/train/noise sub-configs.
    void propagate_seed();
};

}  // namespace etvd
