#include "etvd/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "etvd/checkpoint.hpp"

namespace etvd {

namespace {

constexpr double kLoopGain = 16.0;

std::string format_line(const char* fmt, ...) {
    char buf[256];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    return buf;
}

}  // namespace

TrainResult train_model(ResidualDenoiser<float>& net, const PatchDataset& data,
                        const TrainConfig& cfg, const std::string& checkpoint_dir,
                        const TrainLogger& log, int start_epoch) {
    cfg.sgd.validate();
    cfg.loss.validate();
    if (cfg.epochs < 1) throw std::invalid_argument("train_model: epochs must be >= 1");
    if (data.empty()) throw std::invalid_argument("train_model: empty dataset");

    if (!checkpoint_dir.empty()) std::filesystem::create_directories(checkpoint_dir);

    auto params = net.parameters();
    SgdState<float> sgd(cfg.sgd);
    sgd.init(params);
    GradBuffers<float> grads;
    grads.init_like(params);

    TrainResult result;
    const uint64_t batch_seed = mix_seed(cfg.seed, 0xBA7C4);

    for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        BatchStream batches = make_batches(data, cfg.batch_size, batch_seed, epoch);
        if (batches.batch_count() == 0)
            throw std::invalid_argument("train_model: batch_size exceeds dataset size");

        double loss_sum = 0.0;
        int steps = 0;
        ForwardCache<float> cache;
        while (auto batch = batches.next()) {
            Tensor<float> residual = net.forward(batch->noisy, BnMode::kTrain, &cache);
            const double loss =
                loss_forward(residual, batch->noisy, batch->clean, cfg.loss, epoch);
            if (!std::isfinite(loss))
                throw std::runtime_error(format_line(
                    "training diverged: non-finite loss at epoch %d step %d", epoch, steps));
            Tensor<float> grad_r =
                loss_backward(residual, batch->noisy, batch->clean, cfg.loss, epoch);
            // The loss sums over every pixel of a patch, so its raw gradient
            // is orders of magnitude too steep for the configured learning
            // rates (lr 1e-3 diverges within a few steps). The optimizer
            // therefore descends kLoopGain * L / (c*h*w): the same objective
            // under a fixed normalization, with the gain set at the measured
            // stability/speed point (gain 32 is unstable, 1 is too slow to
            // converge in short runs). Logged losses are unaffected.
            const float grad_scale = static_cast<float>(
                kLoopGain / (static_cast<double>(residual.c()) * residual.h() * residual.w()));
            for (size_t i = 0; i < grad_r.size(); ++i) grad_r[i] *= grad_scale;
            net.backward(cache, grad_r, grads);
            sgd_step(params, grads, sgd, epoch);
            loss_sum += loss;
            ++steps;
            if (log)
                log(format_line("epoch=%d step=%d/%d loss=%.6f", epoch, steps,
                                batches.batch_count(), loss));
        }

        const auto t1 = std::chrono::steady_clock::now();
        EpochLog e;
        e.epoch = epoch;
        e.mean_loss = loss_sum / steps;
        e.lr = cfg.sgd.lr_at(epoch);
        e.beta = cfg.loss.beta_at(epoch);
        e.seconds = std::chrono::duration<double>(t1 - t0).count();
        e.steps = steps;
        result.epochs.push_back(e);
        if (log)
            log(format_line("epoch=%d mean_loss=%.6f lr=%.6g beta=%.6g time_s=%.2f", epoch,
                            e.mean_loss, e.lr, e.beta, e.seconds));

        if (!checkpoint_dir.empty()) {
            char name[64];
            std::snprintf(name, sizeof(name), "checkpoint-epoch%03d.etvd", epoch);
            save_checkpoint((std::filesystem::path(checkpoint_dir) / name).string(), net);
        }
    }

    if (!checkpoint_dir.empty())
        save_checkpoint(
            (std::filesystem::path(checkpoint_dir) / "checkpoint-final.etvd").string(), net);
    return result;
}

}  // namespace etvd
