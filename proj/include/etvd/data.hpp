#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "etvd/image.hpp"
#include "etvd/tensor.hpp"

namespace etvd {

enum class NoiseMode { kFixed, kRandomized };

// Additive Gaussian white noise. sigma is quoted on the 0-255 intensity
// scale and divided by 255 internally; in randomized mode sigma is drawn
// uniformly from [range_lo, range_hi] per image.
struct NoiseSpec {
    NoiseMode mode = NoiseMode::kFixed;
    double sigma = 25.0;
    double range_lo = 0.0;
    double range_hi = 55.0;
    uint64_t seed = 1;

    void validate() const;
};

struct NoisyImage {
    Tensor<double> noisy;  // (1, c, h, w); deliberately unclamped so y - x
                           // stays exactly the injected noise
    double sigma_used = 0.0;
};

NoisyImage add_gaussian_noise(const Image& img, const NoiseSpec& spec);

// Patches on a regular grid with the given stride, deterministically shuffled
// by seed. Each patch is a contiguous copy.
std::vector<Image> extract_patches(const Image& img, int size, int stride, uint64_t seed);

// One image path per line; '#' starts a comment; blank lines are skipped.
// Relative paths resolve against the manifest's own directory.
std::vector<std::string> load_manifest(const std::string& path);

// Train and eval manifests must not share any image (compared as
// canonicalized paths). Throws on overlap.
void require_disjoint_manifests(const std::vector<std::string>& train_paths,
                                const std::vector<std::string>& eval_paths);

// Noisy-clean training pairs in the network's input precision.
struct PatchDataset {
    std::vector<Tensor<float>> noisy;
    std::vector<Tensor<float>> clean;

    size_t size() const { return clean.size(); }
    bool empty() const { return clean.empty(); }
};

// Cuts every image into patches and synthesizes one noisy partner per patch.
// All randomness is keyed off `seed`, so a rerun reproduces the dataset
// bit for bit.
PatchDataset build_patch_dataset(const std::vector<Image>& images, int patch_size,
                                 int patch_stride, const NoiseSpec& noise, uint64_t seed);

struct Batch {
    Tensor<float> noisy;
    Tensor<float> clean;
};

// Deterministic shuffle keyed by (seed, epoch); the final partial batch is
// dropped.
class BatchStream {
public:
    BatchStream(const PatchDataset& data, int batch_size, uint64_t seed, int epoch);

    int batch_count() const { return batch_count_; }
    std::optional<Batch> next();

private:
    const PatchDataset& data_;
    std::vector<uint32_t> order_;
    int batch_size_;
    int batch_count_;
    int cursor_ = 0;
};

BatchStream make_batches(const PatchDataset& data, int batch_size, uint64_t seed, int epoch);

}  // namespace etvd
