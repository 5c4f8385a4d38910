#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "etvd/layers.hpp"
#include "etvd/rng.hpp"

using namespace etvd;

namespace {

Tensor<double> random_tensor(Shape s, uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    Tensor<double> t(s);
    for (size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.next_gaussian();
    return t;
}

Tensor<double> scalar_tensor(double v) {
    Tensor<double> t(1, 1, 1, 1);
    t[0] = v;
    return t;
}

}  // namespace

TEST_CASE("elu_forward values") {
    EluParams p(0.1);
    CHECK(elu_forward(scalar_tensor(0.0), p)[0] == 0.0);
    CHECK(elu_forward(scalar_tensor(2.0), p)[0] == 2.0);
    // 0.1 * (e^-1 - 1)
    CHECK(elu_forward(scalar_tensor(-1.0), p)[0] ==
          doctest::Approx(-0.06321205588285577).epsilon(1e-12));
    CHECK(elu_forward(scalar_tensor(-1.0), p)[0] ==
          doctest::Approx(0.1 * (std::exp(-1.0) - 1.0)));
}

TEST_CASE("elu properties: continuity at zero and lower bound") {
    for (double alpha : {0.1, 1.0, 2.5}) {
        EluParams p(alpha);
        CHECK(elu_forward(scalar_tensor(-1e-12), p)[0] == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(elu_forward(scalar_tensor(0.0), p)[0] == 0.0);
        Tensor<double> x = random_tensor({1, 1, 8, 8}, 31, 5.0);
        Tensor<double> y = elu_forward(x, p);
        for (size_t i = 0; i < y.size(); ++i) CHECK(y[i] > -alpha);
    }
    CHECK_THROWS_AS(EluParams(0.0), std::invalid_argument);
    CHECK_THROWS_AS(EluParams(-1.0), std::invalid_argument);
}

TEST_CASE("elu_backward values") {
    EluParams p(0.1);
    Tensor<double> ones = scalar_tensor(1.0);
    // positive side passes through
    CHECK(elu_backward(scalar_tensor(3.0), ones, p)[0] == 1.0);
    // x = 0 resolves to the positive branch
    CHECK(elu_backward(scalar_tensor(0.0), ones, p)[0] == 1.0);
    // negative side: alpha * e^x, and alpha * e^x == elu(x) + alpha
    const double factor = elu_backward(scalar_tensor(-1.0), ones, p)[0];
    CHECK(factor == doctest::Approx(0.036787944117144233).epsilon(1e-12));
    const double elu_val = elu_forward(scalar_tensor(-1.0), p)[0];
    CHECK(factor == doctest::Approx(elu_val + 0.1).epsilon(1e-12));
}

TEST_CASE("elu_backward matches finite differences away from zero") {
    EluParams p(0.3);
    Tensor<double> x = random_tensor({2, 2, 4, 4}, 17, 2.0);
    for (size_t i = 0; i < x.size(); ++i)
        if (std::abs(x[i]) < 0.05) x[i] = x[i] >= 0 ? 0.05 : -0.05;
    Tensor<double> ones = Tensor<double>::full(x.shape(), 1.0);
    Tensor<double> analytic = elu_backward(x, ones, p);
    const double h = 1e-6;
    for (size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        const double hi = elu_forward(x, p)[i];
        x[i] = saved - h;
        const double lo = elu_forward(x, p)[i];
        x[i] = saved;
        const double fd = (hi - lo) / (2 * h);
        CHECK(std::abs(analytic[i] - fd) <= 1e-7 * std::max(std::abs(fd), 1.0));
    }
}

TEST_CASE("relu forward and backward") {
    CHECK(relu_forward(scalar_tensor(-3.0))[0] == 0.0);
    CHECK(relu_forward(scalar_tensor(5.0))[0] == 5.0);
    Tensor<double> mixed(1, 1, 1, 3);
    mixed[0] = -1;
    mixed[1] = 0;
    mixed[2] = 2;
    Tensor<double> out = relu_forward(mixed);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
    CHECK(out[2] == 2.0);
    Tensor<double> g = Tensor<double>::full(mixed.shape(), 1.5);
    Tensor<double> back = relu_backward(mixed, g);
    CHECK(back[0] == 0.0);
    CHECK(back[1] == 0.0);
    CHECK(back[2] == 1.5);
}

TEST_CASE("batchnorm forward: constant channel maps to beta") {
    BatchNormState<double> bn(2);
    bn.beta = {0.25, -0.5};
    Tensor<double> x = Tensor<double>::full({2, 2, 3, 3}, 4.0);
    Tensor<double> out = batchnorm_forward(x, bn, BnMode::kTrain);
    for (int n = 0; n < 2; ++n)
        for (int c = 0; c < 2; ++c)
            for (int i = 0; i < 9; ++i)
                CHECK(out.plane(n, c)[i] == doctest::Approx(bn.beta[c]).epsilon(1e-12));
}

TEST_CASE("batchnorm forward: two-point channel") {
    BatchNormState<double> bn(1);
    Tensor<double> x(2, 1, 1, 1);
    x[0] = -1.0;
    x[1] = 1.0;
    Tensor<double> out = batchnorm_forward(x, bn, BnMode::kTrain);
    const double expected = 1.0 / std::sqrt(1.0 + bn.eps);
    CHECK(out[0] == doctest::Approx(-expected).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("batchnorm eval mode with unit running stats") {
    BatchNormState<double> bn(1);  // gamma=1, beta=0, mean=0, var=1
    Tensor<double> x = random_tensor({2, 1, 3, 3}, 5);
    Tensor<double> out = batchnorm_forward(x, bn, BnMode::kEval);
    const double scale = 1.0 / std::sqrt(1.0 + bn.eps);
    for (size_t i = 0; i < x.size(); ++i)
        CHECK(out[i] == doctest::Approx(x[i] * scale).epsilon(1e-12));
}

TEST_CASE("batchnorm train mode standardizes per channel") {
    BatchNormState<double> bn(3);
    Tensor<double> x = random_tensor({4, 3, 5, 5}, 21, 2.0);
    for (size_t i = 0; i < x.size(); ++i) x[i] += 0.7;  // nonzero mean input
    Tensor<double> out = batchnorm_forward(x, bn, BnMode::kTrain);
    const double m = 4 * 5 * 5;
    for (int c = 0; c < 3; ++c) {
        double sum = 0, sq = 0;
        for (int n = 0; n < 4; ++n)
            for (int i = 0; i < 25; ++i) sum += out.plane(n, c)[i];
        const double mean = sum / m;
        for (int n = 0; n < 4; ++n)
            for (int i = 0; i < 25; ++i) {
                const double d = out.plane(n, c)[i] - mean;
                sq += d * d;
            }
        CHECK(std::abs(mean) <= 1e-6);
        CHECK(std::abs(sq / m - 1.0) <= 1e-4);
    }
}

TEST_CASE("batchnorm train mode rejects degenerate batches") {
    BatchNormState<double> bn(1);
    Tensor<double> x(1, 1, 1, 1);
    CHECK_THROWS_AS(batchnorm_forward(x, bn, BnMode::kTrain), std::invalid_argument);
    // eval mode is fine on a single element
    CHECK_NOTHROW(batchnorm_forward(x, bn, BnMode::kEval));
}

TEST_CASE("batchnorm backward: zero grad_out, zero-sum, finite differences") {
    BatchNormState<double> bn(3);
    Rng grng(33);
    for (int c = 0; c < 3; ++c) {
        bn.gamma[c] = 1.0 + 0.2 * grng.next_gaussian();
        bn.beta[c] = 0.2 * grng.next_gaussian();
    }
    Tensor<double> x = random_tensor({2, 3, 4, 4}, 34);

    BatchNormState<double> scratch = bn;
    BnCache<double> cache;
    batchnorm_forward(x, scratch, BnMode::kTrain, &cache);

    SUBCASE("zero grad_out gives zero gradients") {
        Tensor<double> zeros(x.shape());
        BnGrads<double> g = batchnorm_backward(zeros, cache, bn);
        for (size_t i = 0; i < g.grad_x.size(); ++i) CHECK(g.grad_x[i] == 0.0);
        for (double v : g.grad_gamma) CHECK(v == 0.0);
        for (double v : g.grad_beta) CHECK(v == 0.0);
    }

    SUBCASE("grad_x sums to zero per channel") {
        Tensor<double> gout = random_tensor(x.shape(), 35);
        BnGrads<double> g = batchnorm_backward(gout, cache, bn);
        for (int c = 0; c < 3; ++c) {
            double sum = 0.0;
            for (int n = 0; n < 2; ++n)
                for (int i = 0; i < 16; ++i) sum += g.grad_x.plane(n, c)[i];
            CHECK(std::abs(sum) <= 1e-10);
        }
    }

    SUBCASE("matches finite differences") {
        Tensor<double> gout = random_tensor(x.shape(), 36);
        BnGrads<double> g = batchnorm_backward(gout, cache, bn);
        auto loss = [&] {
            BatchNormState<double> tmp = bn;
            Tensor<double> out = batchnorm_forward(x, tmp, BnMode::kTrain);
            double s = 0.0;
            for (size_t i = 0; i < out.size(); ++i) s += out[i] * gout[i];
            return s;
        };
        const double h = 1e-5;
        double worst = 0.0;
        for (size_t i = 0; i < x.size(); ++i) {
            const double saved = x[i];
            x[i] = saved + h;
            const double hi = loss();
            x[i] = saved - h;
            const double lo = loss();
            x[i] = saved;
            const double fd = (hi - lo) / (2 * h);
            const double denom = std::max({std::abs(fd), std::abs(g.grad_x[i]), 1e-3});
            worst = std::max(worst, std::abs(g.grad_x[i] - fd) / denom);
        }
        CHECK(worst <= 1e-5);
    }

    SUBCASE("rejects an eval-mode cache") {
        BnCache<double> eval_cache;
        BatchNormState<double> tmp = bn;
        batchnorm_forward(x, tmp, BnMode::kEval, &eval_cache);
        Tensor<double> gout = random_tensor(x.shape(), 37);
        CHECK_THROWS_AS(batchnorm_backward(gout, eval_cache, bn), std::invalid_argument);
    }
}

TEST_CASE("msra_init statistics and determinism") {
    // std over 1e5 draws should sit within 2% of sqrt(2/576)
    Filter<double> big = msra_init<double>(200, 64, 3, 123);  // 200*64*9 > 1e5 draws
    double sum = 0.0, sq = 0.0;
    const size_t n = big.weights.size();
    for (size_t i = 0; i < n; ++i) sum += big.weights[i];
    const double mean = sum / static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
        const double d = big.weights[i] - mean;
        sq += d * d;
    }
    const double std_dev = std::sqrt(sq / static_cast<double>(n));
    const double expected = std::sqrt(2.0 / 576.0);
    CHECK(std_dev == doctest::Approx(expected).epsilon(0.02));
    CHECK(std::abs(mean) <= 3 * expected / std::sqrt(static_cast<double>(n)) * 3);

    Filter<double> a = msra_init<double>(4, 3, 3, 99);
    Filter<double> b = msra_init<double>(4, 3, 3, 99);
    CHECK(a.weights == b.weights);
    for (double v : a.bias) CHECK(v == 0.0);

    Filter<double> c = msra_init<double>(4, 3, 3, 100);
    CHECK_FALSE(a.weights == c.weights);
}
