#include "etvd/gradcheck.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "etvd/conv.hpp"
#include "etvd/layers.hpp"
#include "etvd/loss.hpp"
#include "etvd/network.hpp"
#include "etvd/rng.hpp"

namespace etvd {

double max_rel_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                     double floor) {
    if (analytic.size() != numeric.size())
        throw std::invalid_argument("max_rel_error: size mismatch");
    double worst = 0.0;
    for (size_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
    return worst;
}

namespace {

constexpr double kStep = 1e-5;

Tensor<double> random_tensor(Shape s, Rng& rng, double scale = 1.0) {
    Tensor<double> t(s);
    for (size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.next_gaussian();
    return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double central_diff(const std::function<double()>& f, double* slot) {
    const double saved = *slot;
    *slot = saved + kStep;
    const double hi = f();
    *slot = saved - kStep;
    const double lo = f();
    *slot = saved;
    return (hi - lo) / (2.0 * kStep);
}

// One gradient-check instance: a scalar forward, the slots finite
// differences sweep over, and the analytic gradient per slot group.
struct CheckInstance {
    std::function<double()> eval;
    std::vector<std::pair<double*, size_t>> slots;
    std::vector<std::vector<double>> analytic;
};

double run_instance(CheckInstance& inst, bool corrupt) {
    if (corrupt && !inst.analytic.empty() && !inst.analytic.front().empty())
        inst.analytic.front().front() += 0.5;
    double worst = 0.0;
    for (size_t s = 0; s < inst.slots.size(); ++s) {
        std::vector<double> numeric(inst.slots[s].second);
        for (size_t j = 0; j < inst.slots[s].second; ++j)
            numeric[j] = central_diff(inst.eval, inst.slots[s].first + j);
        worst = std::max(worst, max_rel_error(inst.analytic[s], numeric));
    }
    return worst;
}

struct ConvCheck {
    Tensor<double> input;
    Filter<double> filter;
    Tensor<double> cotangent;
    int pad;

    ConvCheck(uint64_t seed, int k, int pad_) : pad(pad_) {
        Rng rng(seed);
        input = random_tensor({2, 3, 8, 8}, rng);
        filter = msra_init<double>(2, 3, k, mix_seed(seed, 7));
        for (size_t i = 0; i < filter.bias.size(); ++i)
            filter.bias[i] = 0.1 * rng.next_gaussian();
        const int oh = 8 + 2 * pad - k + 1;
        cotangent = random_tensor({2, 2, oh, oh}, rng);
    }

    CheckInstance instance() {
        CheckInstance inst;
        inst.eval = [this] { return dot(conv2d_forward(input, filter, pad), cotangent); };
        ConvGrads<double> g = conv2d_backward(input, filter, cotangent, pad);
        inst.analytic.resize(3);
        inst.analytic[0].assign(g.grad_filter.weights.data(),
                                g.grad_filter.weights.data() + g.grad_filter.weights.size());
        inst.analytic[1] = g.grad_filter.bias;
        inst.analytic[2].assign(g.grad_input.data(), g.grad_input.data() + g.grad_input.size());
        inst.slots = {{filter.weights.data(), filter.weights.size()},
                      {filter.bias.data(), filter.bias.size()},
                      {input.data(), input.size()}};
        return inst;
    }
};

struct EluCheck {
    Tensor<double> x;
    Tensor<double> cotangent;
    EluParams params{0.7};

    explicit EluCheck(uint64_t seed) {
        Rng rng(seed);
        x = random_tensor({2, 3, 6, 6}, rng);
        // keep inputs away from the kink at 0
        for (size_t i = 0; i < x.size(); ++i)
            if (std::abs(x[i]) < 0.05) x[i] += x[i] >= 0 ? 0.05 : -0.05;
        cotangent = random_tensor(x.shape(), rng);
    }

    CheckInstance instance() {
        CheckInstance inst;
        inst.eval = [this] { return dot(elu_forward(x, params), cotangent); };
        Tensor<double> g = elu_backward(x, cotangent, params);
        inst.analytic = {{g.data(), g.data() + g.size()}};
        inst.slots = {{x.data(), x.size()}};
        return inst;
    }
};

struct BnCheck {
    Tensor<double> x;
    Tensor<double> cotangent;
    BatchNormState<double> bn{3};

    explicit BnCheck(uint64_t seed) {
        Rng rng(seed);
        x = random_tensor({2, 3, 4, 4}, rng);
        for (int c = 0; c < 3; ++c) {
            bn.gamma[static_cast<size_t>(c)] = 1.0 + 0.3 * rng.next_gaussian();
            bn.beta[static_cast<size_t>(c)] = 0.3 * rng.next_gaussian();
        }
        cotangent = random_tensor(x.shape(), rng);
    }

    CheckInstance instance() {
        CheckInstance inst;
        inst.eval = [this] {
            BatchNormState<double> scratch = bn;  // forward mutates running stats
            return dot(batchnorm_forward(x, scratch, BnMode::kTrain), cotangent);
        };
        BatchNormState<double> scratch = bn;
        BnCache<double> cache;
        batchnorm_forward(x, scratch, BnMode::kTrain, &cache);
        BnGrads<double> g = batchnorm_backward(cotangent, cache, bn);
        inst.analytic.resize(3);
        inst.analytic[0].assign(g.grad_x.data(), g.grad_x.data() + g.grad_x.size());
        inst.analytic[1].assign(g.grad_gamma.begin(), g.grad_gamma.end());
        inst.analytic[2].assign(g.grad_beta.begin(), g.grad_beta.end());
        inst.slots = {{x.data(), x.size()},
                      {bn.gamma.data(), bn.gamma.size()},
                      {bn.beta.data(), bn.beta.size()}};
        return inst;
    }
};

// One full Conv3x3-ELU-Conv1x1-BN block exercised through a 1-block network,
// checking every parameter gradient at once.
struct BlockCheck {
    ResidualDenoiser<double> net;
    Tensor<double> y;
    Tensor<double> cotangent;

    explicit BlockCheck(uint64_t seed)
        : net(NetworkConfig{.blocks = 1, .channels = 3, .in_channels = 1, .alpha = 1.0,
                            .seed = seed}),
          y(0, 0, 0, 0),
          cotangent(0, 0, 0, 0) {
        Rng rng(mix_seed(seed, 3));
        y = random_tensor({2, 1, 6, 6}, rng);
        cotangent = random_tensor(y.shape(), rng);
    }

    CheckInstance instance() {
        CheckInstance inst;
        inst.eval = [this] {
            ResidualDenoiser<double> scratch = net;
            return dot(scratch.forward(y, BnMode::kTrain), cotangent);
        };
        ForwardCache<double> cache;
        {
            ResidualDenoiser<double> scratch = net;
            scratch.forward(y, BnMode::kTrain, &cache);
        }
        GradBuffers<double> grads;
        net.backward(cache, cotangent, grads);
        auto params = net.parameters();
        for (size_t pi = 0; pi < params.size(); ++pi) {
            inst.slots.emplace_back(params[pi].data, params[pi].size);
            inst.analytic.push_back(grads.g[pi]);
        }
        return inst;
    }
};

struct LossCheck {
    Tensor<double> R, y, x;
    TvL2Config cfg;

    explicit LossCheck(uint64_t seed) {
        Rng rng(seed);
        R = random_tensor({2, 1, 5, 5}, rng, 0.3);
        y = random_tensor(R.shape(), rng, 0.5);
        x = random_tensor(R.shape(), rng, 0.5);
        cfg.beta = 0.05;  // large enough that the TV term dominates rounding
        cfg.beta_late = 0.05;
    }

    CheckInstance instance() {
        CheckInstance inst;
        inst.eval = [this] { return loss_forward_smoothed(R, y, x, cfg, 0); };
        Tensor<double> g = loss_backward(R, y, x, cfg, 0);
        inst.analytic = {{g.data(), g.data() + g.size()}};
        inst.slots = {{R.data(), R.size()}};
        return inst;
    }
};

}  // namespace

GradCheckReport run_gradcheck(GradCheckScope scope, uint64_t seed, int seeds_per_case,
                              bool corrupt_first) {
    GradCheckReport report;
    bool corrupt = corrupt_first;

    auto add_case = [&](const std::string& name, double tolerance,
                        const std::function<double(uint64_t, bool)>& run) {
        double worst = 0.0;
        for (int i = 0; i < seeds_per_case; ++i) {
            worst = std::max(worst, run(mix_seed(seed, static_cast<uint64_t>(i)), corrupt));
            corrupt = false;
        }
        GradCheckCase c{name, worst, tolerance, worst <= tolerance};
        if (!c.pass) report.all_pass = false;
        report.cases.push_back(std::move(c));
    };

    const bool layers = scope == GradCheckScope::kLayer || scope == GradCheckScope::kAll;
    const bool network = scope == GradCheckScope::kNetwork || scope == GradCheckScope::kAll;
    const bool loss = scope == GradCheckScope::kLoss || scope == GradCheckScope::kAll;

    if (layers) {
        add_case("conv3x3", 1e-5, [](uint64_t s, bool c) {
            ConvCheck chk(s, 3, 1);
            auto inst = chk.instance();
            return run_instance(inst, c);
        });
        add_case("conv1x1", 1e-5, [](uint64_t s, bool c) {
            ConvCheck chk(s, 1, 0);
            auto inst = chk.instance();
            return run_instance(inst, c);
        });
        add_case("elu", 1e-7, [](uint64_t s, bool c) {
            EluCheck chk(s);
            auto inst = chk.instance();
            return run_instance(inst, c);
        });
        add_case("batchnorm", 1e-5, [](uint64_t s, bool c) {
            BnCheck chk(s);
            auto inst = chk.instance();
            return run_instance(inst, c);
        });
    }
    if (network) {
        add_case("block", 1e-5, [](uint64_t s, bool c) {
            BlockCheck chk(s);
            auto inst = chk.instance();
            return run_instance(inst, c);
        });
    }
    if (loss) {
        add_case("tv_l2_loss", 1e-5, [](uint64_t s, bool c) {
            LossCheck chk(s);
            auto inst = chk.instance();
            return run_instance(inst, c);
        });
    }
    return report;
}

}  // namespace etvd
