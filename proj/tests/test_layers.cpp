#include "doctest.h"

#include <cmath>

#include "featfilter/checks.hpp"
#include "featfilter/layers.hpp"
#include "featfilter/rng.hpp"

using namespace ff;

namespace {

Tensor rand3(Rng& rng, std::size_t h, std::size_t w, std::size_t c, double lo = -1, double hi = 1) {
    Tensor t({h, w, c});
    for (double& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

}  // namespace

TEST_CASE("batchnorm train mode normalizes with batch statistics") {
    Tensor x({2, 2, 1}, {1.0, 2.0, 3.0, 4.0});
    BatchNormState bn(1);
    BnCache cache;
    const Tensor y = batchnorm_forward(x, bn, Mode::train, &cache);
    const double istd = 1.0 / std::sqrt(1.25 + bn.epsilon);
    CHECK(y[0] == doctest::Approx(-1.5 * istd).epsilon(1e-12));
    CHECK(y[3] == doctest::Approx(1.5 * istd).epsilon(1e-12));
    // running = 0.9 * running + 0.1 * batch, starting from (0, 1)
    CHECK(bn.running_mean[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(bn.running_var[0] == doctest::Approx(0.9 + 0.125).epsilon(1e-12));
    CHECK(cache.xhat.size() == 4);
}

TEST_CASE("batchnorm eval mode uses the running estimates") {
    Tensor x({1, 2, 1}, {3.0, 5.0});
    BatchNormState bn(1);
    bn.running_mean[0] = 4.0;
    bn.running_var[0] = 4.0;
    bn.gamma[0] = 2.0;
    bn.beta[0] = 10.0;
    const Tensor y = batchnorm_forward(x, bn, Mode::eval, nullptr);
    const double istd = 1.0 / std::sqrt(4.0 + bn.epsilon);
    CHECK(y[0] == doctest::Approx(10.0 - 2.0 * istd).epsilon(1e-12));
    CHECK(y[1] == doctest::Approx(10.0 + 2.0 * istd).epsilon(1e-12));
}

TEST_CASE("batchnorm backward matches finite differences") {
    Rng rng(5, "bn");
    const Tensor x = rand3(rng, 3, 3, 2, -2, 2);
    BatchNormState bn(2);
    bn.gamma = Tensor({2}, {1.3, 0.7});
    bn.beta = Tensor({2}, {0.2, -0.4});
    Tensor w = rand3(rng, 3, 3, 2);
    auto project = [&w](const Tensor& out) {
        double s = 0;
        for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * w[i];
        return s;
    };
    BatchNormState state = bn;
    BnCache cache;
    batchnorm_forward(x, state, Mode::train, &cache);
    const BnGrads g = batchnorm_backward(w, cache, bn);
    const Tensor fd = fd_gradient(
        [&](const Tensor& t) {
            BatchNormState s = bn;
            return project(batchnorm_forward(t, s, Mode::train, nullptr));
        },
        x);
    CHECK(max_rel_err(g.grad_input, fd) < 1e-6);
}

TEST_CASE("conv block composes conv, relu and bn in the configured order") {
    Rng rng(7, "bc");
    const Tensor x = rand3(rng, 4, 4, 2, -1.5, 1.5);
    BcState bc;
    bc.conv = ConvKernel(3, 3, 2, 3);
    for (double& v : bc.conv.weights.values()) v = rng.uniform(-0.5, 0.5);
    for (double& v : bc.conv.biases.values()) v = rng.uniform(-0.2, 0.2);
    bc.bn = BatchNormState(3);
    bc.bn.gamma = Tensor({3}, {1.1, 0.9, 1.4});

    SUBCASE("activation first, normalization second") {
        bc.order = BlockOrder::relu_bn;
        BcState s1 = bc, s2 = bc;
        const Tensor got = bc_forward(x, s1, Mode::train, nullptr);
        const Tensor want = batchnorm_forward(relu(conv2d(x, s2.conv, Padding::same)), s2.bn,
                                              Mode::train, nullptr);
        REQUIRE(got.same_dims(want));
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
        CHECK(s1.bn.running_mean[0] == s2.bn.running_mean[0]);
    }
    SUBCASE("normalization first, activation second") {
        bc.order = BlockOrder::bn_relu;
        BcState s1 = bc, s2 = bc;
        const Tensor got = bc_forward(x, s1, Mode::train, nullptr);
        const Tensor want =
            relu(batchnorm_forward(conv2d(x, s2.conv, Padding::same), s2.bn, Mode::train, nullptr));
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
    }
}

TEST_CASE("conv block backward matches finite differences in both orders") {
    Rng rng(8, "bcgrad");
    for (const BlockOrder order : {BlockOrder::relu_bn, BlockOrder::bn_relu}) {
        const Tensor x = rand3(rng, 4, 4, 1, -1, 1);
        BcState bc;
        bc.conv = ConvKernel(3, 3, 1, 2);
        for (double& v : bc.conv.weights.values()) v = rng.uniform(-0.7, 0.7);
        bc.bn = BatchNormState(2);
        bc.order = order;
        Tensor w = rand3(rng, 4, 4, 2);
        auto project = [&w](const Tensor& out) {
            double s = 0;
            for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * w[i];
            return s;
        };
        BcState state = bc;
        BcCache cache;
        bc_forward(x, state, Mode::train, &cache);
        const BcGrads g = bc_backward(w, bc, cache);
        const Tensor fd = fd_gradient(
            [&](const Tensor& t) {
                BcState s = bc;
                return project(bc_forward(t, s, Mode::train, nullptr));
            },
            x);
        CHECK(max_rel_err(g.grad_input, fd) < 1e-5);
        const Tensor fdw = fd_gradient(
            [&](const Tensor& t) {
                BcState s = bc;
                s.conv.weights = t;
                return project(bc_forward(x, s, Mode::train, nullptr));
            },
            bc.conv.weights);
        CHECK(max_rel_err(g.grad_weights, fdw) < 1e-5);
    }
}

TEST_CASE("feature filter with a zero gate halves every feature") {
    Rng rng(9, "cffhalf");
    const Tensor f = rand3(rng, 3, 3, 4, -2, 2);
    CffState cff;
    cff.gate = ConvKernel(1, 1, 4, 4);  // zero weights, zero biases -> sigmoid = 0.5
    const Tensor d = cff_forward(f, cff, nullptr);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(d[i] == 0.5 * f[i]);
}

TEST_CASE("feature filter only attenuates: |d| < |f|, signs preserved, zeros fixed") {
    Rng rng(10, "cffamp");
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t ch = 1 + rng.next_below(5);
        const std::size_t ks = 1 + 2 * rng.next_below(2);
        Tensor f = rand3(rng, 4, 4, ch, -3, 3);
        f[rng.next_below(f.size())] = 0.0;
        CffState cff;
        cff.gate = ConvKernel(ks, ks, ch, ch);
        for (double& v : cff.gate.weights.values()) v = rng.uniform(-2, 2);
        for (double& v : cff.gate.biases.values()) v = rng.uniform(-2, 2);
        const Tensor d = cff_forward(f, cff, nullptr);
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (f[i] == 0.0) {
                CHECK(d[i] == 0.0);
            } else {
                CHECK(std::abs(d[i]) < std::abs(f[i]));
                CHECK(std::signbit(d[i]) == std::signbit(f[i]));
            }
        }
    }
}

TEST_CASE("feature filter saturation bounds") {
    Rng rng(12, "cffsat");
    const Tensor f = rand3(rng, 3, 3, 2, -2, 2);
    CffState cff;
    cff.gate = ConvKernel(1, 1, 2, 2);
    cff.gate.biases.fill(20.0);  // gate ~= 1: d tracks f
    const Tensor open = cff_forward(f, cff, nullptr);
    for (std::size_t i = 0; i < f.size(); ++i)
        CHECK(std::abs(open[i] - f[i]) < 1e-6);
    cff.gate.biases.fill(-20.0);  // gate ~= 0: d vanishes
    const Tensor closed = cff_forward(f, cff, nullptr);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(closed[i]) < 1e-6);
}

TEST_CASE("feature filter rejects gates that change the channel count") {
    CffState cff;
    cff.gate = ConvKernel(1, 1, 4, 3);
    Tensor f({2, 2, 4});
    CHECK_THROWS(cff_forward(f, cff, nullptr));
}

TEST_CASE("feature filter backward matches finite differences") {
    Rng rng(13, "cffgrad");
    const Tensor f = rand3(rng, 4, 4, 3, -2, 2);
    CffState cff;
    cff.gate = ConvKernel(3, 3, 3, 3);
    for (double& v : cff.gate.weights.values()) v = rng.uniform(-1, 1);
    Tensor w = rand3(rng, 4, 4, 3);
    auto project = [&w](const Tensor& out) {
        double s = 0;
        for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * w[i];
        return s;
    };
    CffCache cache;
    cff_forward(f, cff, &cache);
    const CffGrads g = cff_backward(w, cff, cache);
    const Tensor fd_f =
        fd_gradient([&](const Tensor& t) { return project(cff_forward(t, cff, nullptr)); }, f);
    CHECK(max_rel_err(g.grad_f, fd_f) < 1e-6);
    const Tensor fd_w = fd_gradient(
        [&](const Tensor& t) {
            CffState s = cff;
            s.gate.weights = t;
            return project(cff_forward(f, s, nullptr));
        },
        cff.gate.weights);
    CHECK(max_rel_err(g.grad_weights, fd_w) < 1e-6);
}

TEST_CASE("filtered conv block exposes both the raw and the filtered features") {
    Rng rng(14, "fbc");
    const Tensor x = rand3(rng, 4, 4, 1);
    BcState bc;
    bc.conv = ConvKernel(3, 3, 1, 2);
    for (double& v : bc.conv.weights.values()) v = rng.uniform(-0.5, 0.5);
    bc.bn = BatchNormState(2);
    CffState cff;
    cff.gate = ConvKernel(1, 1, 2, 2);
    for (double& v : cff.gate.weights.values()) v = rng.uniform(-1, 1);

    BcState bc2 = bc;
    const FbcOut out = fbc_forward(x, bc, cff, Mode::train, nullptr);
    const Tensor f = bc_forward(x, bc2, Mode::train, nullptr);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(out.f[i] == f[i]);
    const Tensor d = cff_forward(f, cff, nullptr);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(out.d[i] == d[i]);
}

TEST_CASE("softmax cross-entropy on uniform logits is log of the class count") {
    Tensor logits({2, 2, 4});
    LabelMap labels(2, 2, 2);
    const CeLoss ce = softmax_ce_loss(logits, labels);
    CHECK(ce.loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    // gradient rows sum to zero: softmax mass minus the one-hot mass
    for (std::size_t y = 0; y < 2; ++y)
        for (std::size_t x = 0; x < 2; ++x) {
            double row = 0;
            for (std::size_t c = 0; c < 4; ++c) row += ce.grad_logits.at(y, x, c);
            CHECK(row == doctest::Approx(0.0).epsilon(1e-12));
        }
}

TEST_CASE("softmax cross-entropy rewards confident correct predictions") {
    Tensor logits({1, 1, 3}, {20.0, 0.0, 0.0});
    LabelMap right(1, 1, 0), wrong(1, 1, 1);
    CHECK(softmax_ce_loss(logits, right).loss < 1e-8);
    CHECK(softmax_ce_loss(logits, wrong).loss > 10.0);
}

TEST_CASE("softmax cross-entropy matches finite differences and validates labels") {
    Rng rng(15, "ce");
    Tensor logits = rand3(rng, 3, 3, 3, -2, 2);
    LabelMap labels(3, 3);
    for (int& v : labels.values()) v = static_cast<int>(rng.next_below(3));
    const CeLoss ce = softmax_ce_loss(logits, labels);
    const Tensor fd =
        fd_gradient([&](const Tensor& t) { return softmax_ce_loss(t, labels).loss; }, logits);
    CHECK(max_rel_err(ce.grad_logits, fd) < 1e-6);

    LabelMap bad(3, 3, 7);
    CHECK_THROWS(softmax_ce_loss(logits, bad));
    LabelMap mismatched(2, 3, 0);
    CHECK_THROWS(softmax_ce_loss(logits, mismatched));
}
