#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "etvd/conv.hpp"
#include "etvd/layers.hpp"
#include "etvd/rng.hpp"
#include "etvd/tensor.hpp"
#include "etvd/util.hpp"

namespace etvd {

struct NetworkConfig {
    int blocks = 15;       // Conv3x3-ELU-Conv1x1-BN blocks between head and tail
    int channels = 64;     // feature width
    int in_channels = 1;   // 1 = gray, 3 = color
    double alpha = 1.0;    // ELU saturation
    uint64_t seed = 1;     // weight initialization seed

    void validate() const {
        if (blocks < 1) throw std::invalid_argument("NetworkConfig: blocks must be >= 1");
        if (channels < 1) throw std::invalid_argument("NetworkConfig: channels must be >= 1");
        if (in_channels != 1 && in_channels != 3)
            throw std::invalid_argument("NetworkConfig: in_channels must be 1 or 3");
        if (!(alpha > 0)) throw std::invalid_argument("NetworkConfig: alpha must be > 0");
    }
};

enum class ParamKind { kConvWeight, kBias, kBnGamma, kBnBeta, kBnRunningMean, kBnRunningVar };

inline bool is_learnable(ParamKind k) {
    return k != ParamKind::kBnRunningMean && k != ParamKind::kBnRunningVar;
}

// Weight decay applies to convolution weights only; biases and BN parameters
// are exempt.
inline bool decays(ParamKind k) { return k == ParamKind::kConvWeight; }

template <typename T>
struct ParamRef {
    std::string name;
    ParamKind kind;
    T* data;
    size_t size;
    std::vector<int> dims;
};

template <typename T>
struct ParamView {
    std::string name;
    const T* data;
    size_t size;
    std::vector<int> dims;
};

// Gradient buffers aligned index-for-index with ResidualDenoiser::parameters().
template <typename T>
struct GradBuffers {
    std::vector<std::vector<T>> g;

    void init_like(const std::vector<ParamRef<T>>& params) {
        g.clear();
        g.reserve(params.size());
        for (const auto& p : params) g.emplace_back(p.size, T(0));
    }
};

template <typename T>
struct ForwardCache {
    bool valid = false;
    Tensor<T> input;
    Tensor<T> head_pre;  // head conv output before ELU
    Tensor<T> head_act;
    struct BlockCache {
        Tensor<T> conv3_pre;  // 3x3 conv output before ELU
        Tensor<T> elu_out;    // input of the 1x1 conv
        BnCache<T> bn;
        Tensor<T> bn_out;     // input of the next block / tail
    };
    std::vector<BlockCache> blocks;
};

// clamp(y - R) to the valid intensity range; the estimated clean image.
template <typename T>
Tensor<T> recover_clean(const Tensor<T>& y, const Tensor<T>& residual) {
    if (y.shape() != residual.shape())
        throw std::invalid_argument("recover_clean: shape mismatch");
    Tensor<T> out(y.shape());
    for (size_t i = 0; i < y.size(); ++i) out[i] = clamp01(y[i] - residual[i]);
    return out;
}

// Residual denoising network: Conv3x3+ELU head, `blocks` repetitions of
// Conv3x3 -> ELU -> Conv1x1 -> BN, and a bare Conv3x3 tail producing the
// noise estimate R. All convolutions are same-size; there is no pooling and
// no fully connected layer, so output spatial dims always equal the input's.
template <typename T>
class ResidualDenoiser {
public:
    struct Block {
        Filter<T> conv3;
        Filter<T> conv1;
        BatchNormState<T> bn;
    };

    explicit ResidualDenoiser(const NetworkConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        uint64_t layer = 0;
        head_ = msra_init<T>(cfg_.channels, cfg_.in_channels, 3, mix_seed(cfg_.seed, layer++));
        blocks_.reserve(static_cast<size_t>(cfg_.blocks));
        for (int b = 0; b < cfg_.blocks; ++b) {
            Block blk;
            blk.conv3 = msra_init<T>(cfg_.channels, cfg_.channels, 3, mix_seed(cfg_.seed, layer++));
            blk.conv1 = msra_init<T>(cfg_.channels, cfg_.channels, 1, mix_seed(cfg_.seed, layer++));
            blk.bn = BatchNormState<T>(cfg_.channels);
            blocks_.push_back(std::move(blk));
        }
        tail_ = msra_init<T>(cfg_.in_channels, cfg_.channels, 3, mix_seed(cfg_.seed, layer++));
    }

    const NetworkConfig& config() const { return cfg_; }

    // Head and tail plus two convolutions per block.
    int conv_layer_count() const { return 2 + 2 * static_cast<int>(blocks_.size()); }

    Filter<T>& head() { return head_; }
    Filter<T>& tail() { return tail_; }
    std::vector<Block>& blocks() { return blocks_; }
    const std::vector<Block>& blocks() const { return blocks_; }

    // Predicts the residual (noise) R for a batch y. In train mode a cache
    // must be supplied so backward() can traverse the same activations.
    Tensor<T> forward(const Tensor<T>& y, BnMode mode, ForwardCache<T>* cache = nullptr) {
        if (y.c() != cfg_.in_channels)
            throw std::invalid_argument("forward: input has " + std::to_string(y.c()) +
                                        " channels, network expects " +
                                        std::to_string(cfg_.in_channels));
        const EluParams elu(cfg_.alpha);
        if (cache) {
            cache->valid = true;
            cache->input = y;
            cache->blocks.assign(static_cast<size_t>(cfg_.blocks), {});
        }
        Tensor<T> pre = conv2d_forward(y, head_, 1);
        Tensor<T> act = elu_forward(pre, elu);
        if (cache) {
            cache->head_pre = pre;
            cache->head_act = act;
        }
        for (size_t b = 0; b < blocks_.size(); ++b) {
            Block& blk = blocks_[b];
            Tensor<T> c3 = conv2d_forward(act, blk.conv3, 1);
            Tensor<T> e = elu_forward(c3, elu);
            Tensor<T> c1 = conv2d_forward(e, blk.conv1, 0);
            BnCache<T>* bnc = cache ? &cache->blocks[b].bn : nullptr;
            act = batchnorm_forward(c1, blk.bn, mode, bnc);
            if (cache) {
                cache->blocks[b].conv3_pre = std::move(c3);
                cache->blocks[b].elu_out = std::move(e);
                cache->blocks[b].bn_out = act;
            }
        }
        return conv2d_forward(act, tail_, 1);
    }

    // Reverse traversal of the block list; requires the cache of a matching
    // train-mode forward. Gradients land in `grads`, aligned with
    // parameters().
    void backward(const ForwardCache<T>& cache, const Tensor<T>& grad_R, GradBuffers<T>& grads) {
        if (!cache.valid)
            throw std::invalid_argument("backward: called without a cached forward");
        auto params = parameters();
        if (grads.g.size() != params.size()) grads.init_like(params);

        const EluParams elu(cfg_.alpha);
        size_t pi = params.size();  // filled back-to-front, mirroring traversal

        const Tensor<T>& tail_in =
            blocks_.empty() ? cache.head_act : cache.blocks.back().bn_out;
        ConvGrads<T> tg = conv2d_backward(tail_in, tail_, grad_R, 1);
        store_filter_grads(grads, pi, tg.grad_filter);
        Tensor<T> grad = std::move(tg.grad_input);

        for (int b = static_cast<int>(blocks_.size()) - 1; b >= 0; --b) {
            Block& blk = blocks_[static_cast<size_t>(b)];
            const auto& bc = cache.blocks[static_cast<size_t>(b)];
            BnGrads<T> bng = batchnorm_backward(grad, bc.bn, blk.bn);
            pi -= 1;
            copy_into(grads.g[pi], bng.grad_beta);
            pi -= 1;
            copy_into(grads.g[pi], bng.grad_gamma);
            ConvGrads<T> c1g = conv2d_backward(bc.elu_out, blk.conv1, bng.grad_x, 0);
            store_filter_grads(grads, pi, c1g.grad_filter);
            Tensor<T> grad_elu = elu_backward(bc.conv3_pre, c1g.grad_input, elu);
            const Tensor<T>& block_in =
                b == 0 ? cache.head_act : cache.blocks[static_cast<size_t>(b) - 1].bn_out;
            ConvGrads<T> c3g = conv2d_backward(block_in, blk.conv3, grad_elu, 1);
            store_filter_grads(grads, pi, c3g.grad_filter);
            grad = std::move(c3g.grad_input);
        }

        Tensor<T> grad_head = elu_backward(cache.head_pre, grad, elu);
        ConvGrads<T> hg = conv2d_backward(cache.input, head_, grad_head, 1);
        store_filter_grads(grads, pi, hg.grad_filter);
        if (pi != 0) throw std::logic_error("backward: parameter walk out of sync");
    }

    // Eval-mode residual prediction followed by clamp(y - R).
    Tensor<T> denoise(const Tensor<T>& y) {
        Tensor<T> r = forward(y, BnMode::kEval);
        return recover_clean(y, r);
    }

    // Learnable parameters in a stable order (head, blocks, tail).
    std::vector<ParamRef<T>> parameters() {
        std::vector<ParamRef<T>> out;
        collect(out, /*learnable_only=*/true);
        return out;
    }

    // Learnable parameters plus BN running statistics; the checkpoint payload.
    std::vector<ParamRef<T>> state_entries() {
        std::vector<ParamRef<T>> out;
        collect(out, /*learnable_only=*/false);
        return out;
    }

    std::vector<ParamView<T>> state_views() const {
        auto& self = const_cast<ResidualDenoiser&>(*this);
        std::vector<ParamView<T>> out;
        for (auto& p : self.state_entries())
            out.push_back({p.name, p.data, p.size, p.dims});
        return out;
    }

private:
    static void copy_into(std::vector<T>& dst, const std::vector<T>& src) {
        if (dst.size() != src.size()) throw std::logic_error("gradient size mismatch");
        std::copy(src.begin(), src.end(), dst.begin());
    }

    // Writes filter weight+bias grads into the two slots ending at `pi`,
    // moving `pi` to the first of them.
    void store_filter_grads(GradBuffers<T>& grads, size_t& pi, const Filter<T>& gf) {
        pi -= 1;
        copy_into(grads.g[pi], gf.bias);
        pi -= 1;
        if (grads.g[pi].size() != gf.weights.size())
            throw std::logic_error("gradient size mismatch");
        std::copy(gf.weights.data(), gf.weights.data() + gf.weights.size(),
                  grads.g[pi].begin());
    }

    void add_filter(std::vector<ParamRef<T>>& out, const std::string& prefix, Filter<T>& f) {
        out.push_back({prefix + ".weight", ParamKind::kConvWeight, f.weights.data(),
                       f.weights.size(),
                       {f.c_out(), f.c_in(), f.kh(), f.kw()}});
        out.push_back({prefix + ".bias", ParamKind::kBias, f.bias.data(), f.bias.size(),
                       {f.c_out()}});
    }

    void collect(std::vector<ParamRef<T>>& out, bool learnable_only) {
        add_filter(out, "head", head_);
        for (size_t b = 0; b < blocks_.size(); ++b) {
            const std::string prefix = "block" + std::to_string(b);
            Block& blk = blocks_[b];
            add_filter(out, prefix + ".conv3", blk.conv3);
            add_filter(out, prefix + ".conv1", blk.conv1);
            const int ch = blk.bn.channels();
            out.push_back({prefix + ".bn.gamma", ParamKind::kBnGamma, blk.bn.gamma.data(),
                           blk.bn.gamma.size(), {ch}});
            out.push_back({prefix + ".bn.beta", ParamKind::kBnBeta, blk.bn.beta.data(),
                           blk.bn.beta.size(), {ch}});
            if (!learnable_only) {
                out.push_back({prefix + ".bn.running_mean", ParamKind::kBnRunningMean,
                               blk.bn.running_mean.data(), blk.bn.running_mean.size(), {ch}});
                out.push_back({prefix + ".bn.running_var", ParamKind::kBnRunningVar,
                               blk.bn.running_var.data(), blk.bn.running_var.size(), {ch}});
            }
        }
        add_filter(out, "tail", tail_);
    }

    NetworkConfig cfg_;
    Filter<T> head_;
    std::vector<Block> blocks_;
    Filter<T> tail_;
};

}  // namespace etvd
