#include "etvd/data.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "etvd/rng.hpp"

namespace etvd {

namespace fs = std::filesystem;

void NoiseSpec::validate() const {
    if (sigma < 0) throw std::invalid_argument("NoiseSpec: sigma must be >= 0");
    if (range_lo > range_hi)
        throw std::invalid_argument("NoiseSpec: range_lo must be <= range_hi");
    if (range_lo < 0) throw std::invalid_argument("NoiseSpec: range_lo must be >= 0");
}

NoisyImage add_gaussian_noise(const Image& img, const NoiseSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    double sigma = spec.sigma;
    if (spec.mode == NoiseMode::kRandomized)
        sigma = rng.next_uniform(spec.range_lo, spec.range_hi);

    NoisyImage out;
    out.sigma_used = sigma;
    out.noisy = image_to_tensor(img);
    if (sigma > 0) {
        const double scale = sigma / 255.0;
        for (size_t i = 0; i < out.noisy.size(); ++i)
            out.noisy[i] += scale * rng.next_gaussian();
    }
    ensure_finite(out.noisy, "add_gaussian_noise");
    return out;
}

std::vector<Image> extract_patches(const Image& img, int size, int stride, uint64_t seed) {
    if (size < 1) throw std::invalid_argument("extract_patches: size must be >= 1");
    if (stride < 1) throw std::invalid_argument("extract_patches: stride must be >= 1");
    if (size > img.h || size > img.w)
        throw std::invalid_argument("extract_patches: patch size " + std::to_string(size) +
                                    " exceeds image " + std::to_string(img.h) + "x" +
                                    std::to_string(img.w));
    std::vector<std::pair<int, int>> origins;
    for (int y = 0; y + size <= img.h; y += stride)
        for (int x = 0; x + size <= img.w; x += stride)
            origins.emplace_back(y, x);
    Rng rng(seed);
    rng.shuffle(origins.begin(), origins.end());

    std::vector<Image> patches;
    patches.reserve(origins.size());
    for (auto [oy, ox] : origins) {
        Image p(img.channels, size, size);
        for (int c = 0; c < img.channels; ++c)
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x)
                    p.at(c, y, x) = img.at(c, oy + y, ox + x);
        patches.push_back(std::move(p));
    }
    return patches;
}

std::vector<std::string> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open manifest");
    const fs::path base = fs::path(path).parent_path();
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        auto b = line.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r\n");
        std::string entry = line.substr(b, e - b + 1);
        fs::path p(entry);
        if (p.is_relative()) p = base / p;
        out.push_back(p.lexically_normal().string());
    }
    return out;
}

void require_disjoint_manifests(const std::vector<std::string>& train_paths,
                                const std::vector<std::string>& eval_paths) {
    auto canon = [](const std::string& p) {
        std::error_code ec;
        fs::path c = fs::weakly_canonical(p, ec);
        return ec ? fs::path(p).lexically_normal().string() : c.string();
    };
    std::set<std::string> train_set;
    for (const auto& p : train_paths) train_set.insert(canon(p));
    for (const auto& p : eval_paths)
        if (train_set.count(canon(p)))
            throw std::runtime_error("train/eval manifests overlap on " + p);
}

namespace {

Tensor<float> to_float_tensor(const Image& img) {
    Tensor<float> t(1, img.channels, img.h, img.w);
    for (size_t i = 0; i < img.pix.size(); ++i) t[i] = static_cast<float>(img.pix[i]);
    return t;
}

Tensor<float> to_float_tensor(const Tensor<double>& d) {
    Tensor<float> t(d.shape());
    for (size_t i = 0; i < d.size(); ++i) t[i] = static_cast<float>(d[i]);
    return t;
}

}  // namespace

PatchDataset build_patch_dataset(const std::vector<Image>& images, int patch_size,
                                 int patch_stride, const NoiseSpec& noise, uint64_t seed) {
    PatchDataset ds;
    uint64_t patch_index = 0;
    for (size_t ii = 0; ii < images.size(); ++ii) {
        auto patches =
            extract_patches(images[ii], patch_size, patch_stride, mix_seed(seed, ii));
        for (const Image& patch : patches) {
            NoiseSpec per_patch = noise;
            per_patch.seed = mix_seed(noise.seed, patch_index++);
            NoisyImage noisy = add_gaussian_noise(patch, per_patch);
            ds.clean.push_back(to_float_tensor(patch));
            ds.noisy.push_back(to_float_tensor(noisy.noisy));
        }
    }
    return ds;
}

BatchStream::BatchStream(const PatchDataset& data, int batch_size, uint64_t seed, int epoch)
    : data_(data), batch_size_(batch_size) {
    if (batch_size < 1) throw std::invalid_argument("make_batches: batch_size must be >= 1");
    if (data.empty()) throw std::invalid_argument("make_batches: empty dataset");
    order_.resize(data.size());
    for (uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
    Rng rng(mix_seed(seed, static_cast<uint64_t>(epoch)));
    rng.shuffle(order_.begin(), order_.end());
    batch_count_ = static_cast<int>(data.size() / static_cast<size_t>(batch_size));
}

std::optional<Batch> BatchStream::next() {
    if (cursor_ >= batch_count_) return std::nullopt;
    const Shape one = data_.clean.front().shape();
    Batch b{Tensor<float>(batch_size_, one.c, one.h, one.w),
            Tensor<float>(batch_size_, one.c, one.h, one.w)};
    const size_t per_sample = static_cast<size_t>(one.c) * one.h * one.w;
    for (int i = 0; i < batch_size_; ++i) {
        const uint32_t src = order_[static_cast<size_t>(cursor_) * batch_size_ + i];
        std::copy(data_.noisy[src].data(), data_.noisy[src].data() + per_sample,
                  b.noisy.data() + static_cast<size_t>(i) * per_sample);
        std::copy(data_.clean[src].data(), data_.clean[src].data() + per_sample,
                  b.clean.data() + static_cast<size_t>(i) * per_sample);
    }
    ++cursor_;
    return b;
}

BatchStream make_batches(const PatchDataset& data, int batch_size, uint64_t seed, int epoch) {
    return BatchStream(data, batch_size, seed, epoch);
}

}  // namespace etvd
