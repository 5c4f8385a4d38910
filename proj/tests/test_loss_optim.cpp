#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "etvd/loss.hpp"
#include "etvd/optim.hpp"
#include "etvd/rng.hpp"

using namespace etvd;

namespace {

Tensor<double> random_tensor(Shape s, uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    Tensor<double> t(s);
    for (size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.next_gaussian();
    return t;
}

}  // namespace

TEST_CASE("tv_value basics") {
    CHECK(tv_value(Tensor<double>::full({1, 1, 5, 7}, 0.42)) == 0.0);

    Tensor<double> steps(1, 1, 2, 2);  // [[0,1],[0,1]]
    steps.at(0, 0, 0, 1) = 1.0;
    steps.at(0, 0, 1, 1) = 1.0;
    CHECK(tv_value(steps) == 2.0);

    Tensor<double> u = random_tensor({1, 2, 6, 6}, 3);
    for (double c : {-2.5, 0.0, 3.0, 0.125}) {
        Tensor<double> scaled(u.shape());
        for (size_t i = 0; i < u.size(); ++i) scaled[i] = c * u[i];
        CHECK(tv_value(scaled) == doctest::Approx(std::abs(c) * tv_value(u)).epsilon(1e-12));
    }

    CHECK(tv_value(u) > 0.0);  // nonconstant image has positive TV
    Tensor<double> batch(2, 1, 3, 3);
    CHECK_THROWS_AS(tv_value(batch), std::invalid_argument);
}

TEST_CASE("smoothed TV stays within h*w*eps per channel of the exact value") {
    Tensor<double> u = random_tensor({1, 3, 7, 5}, 4);
    const double eps = 1e-3;
    const double exact = tv_value(u);
    const double smooth = tv_value_smoothed(u, eps);
    CHECK(smooth >= exact);
    CHECK(smooth - exact <= 3 * 7 * 5 * eps);
}

TEST_CASE("loss_forward special cases") {
    TvL2Config cfg;  // beta = 1e-4
    Tensor<double> x = Tensor<double>::full({1, 1, 4, 4}, 0.5);
    Tensor<double> v = random_tensor(x.shape(), 5, 0.1);
    Tensor<double> y(x.shape());
    for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] + v[i];

    SUBCASE("perfect residual and a flat clean image give zero loss") {
        CHECK(loss_forward(v, y, x, cfg, 0) == doctest::Approx(0.0).epsilon(1e-15));
    }

    SUBCASE("zero residual decomposes into L2 of the noise plus beta * TV(y)") {
        Tensor<double> zero(x.shape());
        double l2 = 0.0;
        for (size_t i = 0; i < v.size(); ++i) l2 += v[i] * v[i];
        const double expected = 0.5 * l2 + cfg.beta * tv_value(y);
        CHECK(loss_forward(zero, y, x, cfg, 0) == doctest::Approx(expected).epsilon(1e-12));
    }

    SUBCASE("beta = 0 reduces to the plain residual L2 loss") {
        TvL2Config off;
        off.beta = 0.0;
        off.beta_late = 0.0;
        Tensor<double> r = random_tensor(x.shape(), 6, 0.2);
        double l2 = 0.0;
        for (size_t i = 0; i < r.size(); ++i) {
            const double d = r[i] - (y[i] - x[i]);
            l2 += d * d;
        }
        CHECK(loss_forward(r, y, x, off, 0) == doctest::Approx(0.5 * l2).epsilon(1e-12));
    }

    SUBCASE("shape mismatch is rejected") {
        Tensor<double> wrong(1, 1, 3, 3);
        CHECK_THROWS_AS(loss_forward(wrong, y, x, cfg, 0), std::invalid_argument);
    }
}

TEST_CASE("loss is invariant under batch permutation") {
    TvL2Config cfg;
    cfg.beta = 0.01;
    Tensor<double> R = random_tensor({4, 1, 5, 5}, 7, 0.3);
    Tensor<double> y = random_tensor(R.shape(), 8, 0.5);
    Tensor<double> x = random_tensor(R.shape(), 9, 0.5);

    auto permute = [](const Tensor<double>& t, const std::vector<int>& order) {
        Tensor<double> out(t.shape());
        const size_t per = t.size() / t.n();
        for (int i = 0; i < t.n(); ++i)
            std::copy(t.data() + order[i] * per, t.data() + (order[i] + 1) * per,
                      out.data() + i * per);
        return out;
    };
    const std::vector<int> order = {2, 0, 3, 1};
    const double a = loss_forward(R, y, x, cfg, 0);
    const double b = loss_forward(permute(R, order), permute(y, order), permute(x, order),
                                  cfg, 0);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("loss_backward") {
    TvL2Config cfg;
    cfg.beta = 0.05;
    cfg.beta_late = 0.05;

    SUBCASE("perfect residual with constant clean image has zero gradient") {
        Tensor<double> x = Tensor<double>::full({1, 1, 4, 4}, 0.3);
        Tensor<double> v = random_tensor(x.shape(), 10, 0.1);
        Tensor<double> y(x.shape());
        for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] + v[i];
        Tensor<double> g = loss_backward(v, y, x, cfg, 0);
        for (size_t i = 0; i < g.size(); ++i) CHECK(std::abs(g[i]) <= 1e-12);
    }

    SUBCASE("beta = 0 gives exactly (1/N)(R - (y - x))") {
        TvL2Config off;
        off.beta = 0.0;
        off.beta_late = 0.0;
        Tensor<double> R = random_tensor({2, 1, 4, 4}, 11);
        Tensor<double> y = random_tensor(R.shape(), 12);
        Tensor<double> x = random_tensor(R.shape(), 13);
        Tensor<double> g = loss_backward(R, y, x, off, 0);
        for (size_t i = 0; i < g.size(); ++i)
            CHECK(g[i] == doctest::Approx(0.5 * (R[i] - (y[i] - x[i]))).epsilon(1e-15));
    }

    SUBCASE("matches finite differences of the smoothed loss") {
        Tensor<double> R = random_tensor({1, 1, 5, 5}, 14, 0.3);
        Tensor<double> y = random_tensor(R.shape(), 15, 0.5);
        Tensor<double> x = random_tensor(R.shape(), 16, 0.5);
        Tensor<double> g = loss_backward(R, y, x, cfg, 0);
        const double h = 1e-5;
        double worst = 0.0;
        for (size_t i = 0; i < R.size(); ++i) {
            const double saved = R[i];
            R[i] = saved + h;
            const double hi = loss_forward_smoothed(R, y, x, cfg, 0);
            R[i] = saved - h;
            const double lo = loss_forward_smoothed(R, y, x, cfg, 0);
            R[i] = saved;
            const double fd = (hi - lo) / (2 * h);
            const double denom = std::max({std::abs(fd), std::abs(g[i]), 1e-3});
            worst = std::max(worst, std::abs(g[i] - fd) / denom);
        }
        CHECK(worst <= 1e-5);
    }
}

TEST_CASE("beta schedule steps at the switch epoch") {
    TvL2Config cfg;  // defaults: 1e-4 -> 5e-4 at epoch 30
    CHECK(cfg.beta_at(0) == 1e-4);
    CHECK(cfg.beta_at(29) == 1e-4);
    CHECK(cfg.beta_at(30) == 5e-4);
    CHECK(cfg.beta_at(49) == 5e-4);
}

TEST_CASE("learning-rate schedule steps at the switch epoch") {
    SgdConfig cfg;  // defaults: 1e-3 -> 1e-4 at epoch 30
    CHECK(cfg.lr_at(0) == 1e-3);
    CHECK(cfg.lr_at(29) == 1e-3);
    CHECK(cfg.lr_at(30) == 1e-4);
    CHECK(cfg.lr_at(49) == 1e-4);
}

namespace {

struct FakeParams {
    std::vector<double> weight{1.0};
    std::vector<double> bias{1.0};
    std::vector<ParamRef<double>> refs() {
        return {{"w", ParamKind::kConvWeight, weight.data(), 1, {1}},
                {"b", ParamKind::kBias, bias.data(), 1, {1}}};
    }
};

}  // namespace

TEST_CASE("sgd_step hand iteration") {
    FakeParams fp;
    auto params = fp.refs();
    SgdConfig cfg;
    cfg.lr = 0.1;
    cfg.lr_late = 0.1;
    cfg.momentum = 0.9;
    cfg.weight_decay = 0.0;
    SgdState<double> state(cfg);
    GradBuffers<double> grads;
    grads.g = {{1.0}, {0.0}};

    sgd_step(params, grads, state, 0);
    CHECK(fp.weight[0] == doctest::Approx(0.9).epsilon(1e-15));
    sgd_step(params, grads, state, 0);
    // velocity = 0.9 * 1 + 1 = 1.9, w = 0.9 - 0.19
    CHECK(fp.weight[0] == doctest::Approx(0.71).epsilon(1e-15));
}

TEST_CASE("sgd_step leaves parameters alone without gradient or decay") {
    FakeParams fp;
    auto params = fp.refs();
    SgdState<double> state(SgdConfig{});
    // weight_decay defaults to 1e-4 so zero it out for this check
    state.cfg.weight_decay = 0.0;
    GradBuffers<double> grads;
    grads.g = {{0.0}, {0.0}};
    sgd_step(params, grads, state, 0);
    CHECK(fp.weight[0] == 1.0);
    CHECK(fp.bias[0] == 1.0);
}

TEST_CASE("weight decay applies to conv weights only") {
    FakeParams fp;
    auto params = fp.refs();
    SgdConfig cfg;
    cfg.lr = 1.0;
    cfg.momentum = 0.0;
    cfg.weight_decay = 0.01;
    SgdState<double> state(cfg);
    GradBuffers<double> grads;
    grads.g = {{0.0}, {0.0}};
    sgd_step(params, grads, state, 0);
    CHECK(fp.weight[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-15));
    CHECK(fp.bias[0] == 1.0);  // biases and BN parameters are not decayed
}
