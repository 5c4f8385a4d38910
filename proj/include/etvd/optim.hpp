#pragma once

#include <stdexcept>
#include <vector>

#include "etvd/network.hpp"

namespace etvd {

struct SgdConfig {
    double lr = 1e-3;        // before the switch epoch
    double lr_late = 1e-4;   // from the switch epoch on
    int switch_epoch = 30;
    double momentum = 0.9;
    double weight_decay = 1e-4;

    double lr_at(int epoch) const { return epoch >= switch_epoch ? lr_late : lr; }

    void validate() const {
        if (!(lr > 0) || !(lr_late > 0))
            throw std::invalid_argument("SgdConfig: learning rates must be > 0");
        if (momentum < 0 || momentum >= 1)
            throw std::invalid_argument("SgdConfig: momentum must be in [0, 1)");
        if (weight_decay < 0)
            throw std::invalid_argument("SgdConfig: weight_decay must be >= 0");
    }
};

template <typename T>
struct SgdState {
    SgdConfig cfg;
    std::vector<std::vector<T>> velocity;

    explicit SgdState(const SgdConfig& c = {}) : cfg(c) { cfg.validate(); }

    void init(const std::vector<ParamRef<T>>& params) {
        velocity.clear();
        velocity.reserve(params.size());
        for (const auto& p : params) velocity.emplace_back(p.size, T(0));
    }
};

// g' = grad + weight_decay * param   (conv weights only)
// v  = momentum * v + g'
// param -= lr(epoch) * v
template <typename T>
void sgd_step(std::vector<ParamRef<T>>& params, const GradBuffers<T>& grads,
              SgdState<T>& s, int epoch) {
    if (s.velocity.empty()) s.init(params);
    if (params.size() != grads.g.size() || params.size() != s.velocity.size())
        throw std::invalid_argument("sgd_step: parameter/gradient count mismatch");
    const double lr = s.cfg.lr_at(epoch);
    const double mom = s.cfg.momentum;
    const double wd = s.cfg.weight_decay;
    for (size_t i = 0; i < params.size(); ++i) {
        ParamRef<T>& p = params[i];
        const std::vector<T>& g = grads.g[i];
        std::vector<T>& v = s.velocity[i];
        if (g.size() != p.size || v.size() != p.size)
            throw std::invalid_argument("sgd_step: shape mismatch for " + p.name);
        const bool decay = decays(p.kind);
        for (size_t j = 0; j < p.size; ++j) {
            T gj = g[j];
            if (decay) gj += static_cast<T>(wd) * p.data[j];
            v[j] = static_cast<T>(mom) * v[j] + gj;
            p.data[j] -= static_cast<T>(lr) * v[j];
        }
    }
}

}  // namespace etvd
