#include <catch2/catch.hpp>

#include <cmath>

#include "proxcs/discriminator.hpp"
#include "proxcs/generator.hpp"
#include "proxcs/gradcheck.hpp"
#include "proxcs/losses.hpp"
#include "proxcs/mask.hpp"
#include "proxcs/operators.hpp"
#include "proxcs/unrolled.hpp"

using namespace proxcs;

namespace {

GeneratorConfig small_config(int rbs = 1, int F = 6) {
    GeneratorConfig cfg;
    cfg.residual_blocks = rbs;
    cfg.feature_maps = F;
    cfg.in_channels = 2;
    cfg.out_channels = 2;
    return cfg;
}

Tensor<double> random_batch(int B, int C, int H, int W, Rng& rng, double scale = 1.0) {
    Tensor<double> t({B, C, H, W});
    t.fill_normal(rng, scale);
    return t;
}

}  // namespace

TEST_CASE("generator output lies strictly inside (0,1)") {
    Rng rng(1);
    auto g = Generator<double>::make(small_config(2, 8), rng);
    Tensor<double> x = random_batch(2, 2, 16, 16, rng, 2.0);
    auto y = g.forward(x, BatchNormMode::Train);
    REQUIRE(y.shape() == std::vector<int>{2, 2, 16, 16});
    for (std::size_t i = 0; i < y.size(); ++i) {
        REQUIRE(y[i] > 0.0);
        REQUIRE(y[i] < 1.0);
    }
}

TEST_CASE("generator with a zeroed head emits a constant 0.5 image") {
    Rng rng(2);
    auto g = Generator<double>::make(small_config(), rng);
    g.head3.kernels.zero();
    g.head3.bias.zero();
    Tensor<double> x = random_batch(1, 2, 8, 8, rng);
    auto y = g.forward(x, BatchNormMode::Train);
    for (std::size_t i = 0; i < y.size(); ++i) REQUIRE(y[i] == Approx(0.5).margin(1e-12));
}

TEST_CASE("generator forward equals a layer-by-layer composition") {
    Rng rng(3);
    auto g = Generator<double>::make(small_config(2, 6), rng);
    Tensor<double> x = random_batch(2, 2, 8, 8, rng);
    auto got = g.forward(x, BatchNormMode::Train, nullptr, false);

    // independent composition from the individual layer primitives
    auto bn_copy = [&](const BatchNormParams<double>& p) { return p; };
    auto h = conv2d_forward(x, g.stem);
    auto sbn = bn_copy(g.stem_bn);
    h = batchnorm_forward(h, sbn, BatchNormMode::Train, nullptr, false);
    h = activation_forward(h, Activation::Relu);
    for (const auto& rb : g.blocks) {
        auto b1 = bn_copy(rb.bn1);
        auto b2 = bn_copy(rb.bn2);
        auto r = conv2d_forward(h, rb.conv1);
        r = batchnorm_forward(r, b1, BatchNormMode::Train, nullptr, false);
        r = activation_forward(r, Activation::Relu);
        r = conv2d_forward(r, rb.conv2);
        r = batchnorm_forward(r, b2, BatchNormMode::Train, nullptr, false);
        r += h;
        h = activation_forward(r, Activation::Relu);
    }
    auto p = conv2d_forward(h, g.head1);
    p = activation_forward(p, Activation::Relu);
    p = conv2d_forward(p, g.head2);
    p = activation_forward(p, Activation::Relu);
    p = conv2d_forward(p, g.head3);
    p = activation_forward(p, Activation::Sigmoid);

    p -= got;
    REQUIRE(p.max_abs() < 1e-14);
}

TEST_CASE("unrolled recursion with a stub proximal") {
    auto mask = generate_mask(16, 16, 0.4, 3.0, 2, 5);
    MaskedFourierOperator<double> op(mask);
    Rng rng(7);
    Tensor<double> truth({2, 16, 16});
    truth.fill_normal(rng, 1.0);
    auto y = op.forward(truth);

    // K=1, identity proximal, alpha=1: exact k-space consistency on the mask
    Tensor<double> x_tilde = op.adjoint(y);
    auto x_hat = data_consistency(op, x_tilde, y, 1.0);
    auto r = y;
    r -= op.forward(x_hat);
    REQUIRE(r.max_abs() < 1e-10);

    // zero measurements and a zero proximal: output stays zero
    Tensor<double> zero_y(op.output_shape());
    Tensor<double> zero_img(op.input_shape());
    auto out = data_consistency(op, zero_img, zero_y, 1.0);
    REQUIRE(out.max_abs() == 0.0);
}

TEST_CASE("unrolled_forward equals the manually iterated recursion") {
    auto mask = generate_mask(16, 16, 0.4, 3.0, 2, 11);
    MaskedFourierOperator<double> op(mask);
    Rng rng(13);
    auto model = UnrolledModel<double>::make(small_config(), 3, WeightMode::Shared, op, 99);
    model.alpha_raw[1] = 0.8;

    const int B = 2;
    Tensor<double> truth = random_batch(B, 2, 16, 16, rng, 0.3);
    Tensor<double> y({B, op.sample_count(), 2});
    Tensor<double> x_tilde({B, 2, 16, 16});
    Tensor<double> slice(op.input_shape());
    for (int b = 0; b < B; ++b) {
        std::copy(truth.data() + b * slice.size(), truth.data() + (b + 1) * slice.size(), slice.data());
        auto yb = op.forward(slice);
        std::copy(yb.data(), yb.data() + yb.size(), y.data() + b * yb.size());
        auto zb = op.adjoint(yb);
        std::copy(zb.data(), zb.data() + zb.size(), x_tilde.data() + b * zb.size());
    }

    auto frozen = model;  // frozen G: eval mode, no stat updates
    auto got = unrolled_forward(frozen, y, x_tilde, BatchNormMode::Eval, nullptr, false);

    auto manual_model = model;
    Tensor<double> x = x_tilde;
    for (int k = 0; k < 3; ++k) {
        Tensor<double> x_check = manual_model.generator(k).forward(x, BatchNormMode::Eval, nullptr, false);
        Tensor<double> next(x.shape());
        for (int b = 0; b < B; ++b) {
            Tensor<double> xb(op.input_shape());
            std::copy(x_check.data() + b * xb.size(), x_check.data() + (b + 1) * xb.size(), xb.data());
            Tensor<double> yb(op.output_shape());
            std::copy(y.data() + b * yb.size(), y.data() + (b + 1) * yb.size(), yb.data());
            auto nb = data_consistency(op, xb, yb, manual_model.alpha(k));
            std::copy(nb.data(), nb.data() + nb.size(), next.data() + b * nb.size());
        }
        x = next;
    }
    x -= got;
    REQUIRE(x.max_abs() < 1e-12);
}

TEST_CASE("unrolled intermediates keep the sigmoid range") {
    auto mask = generate_mask(16, 16, 0.3, 3.0, 2, 17);
    MaskedFourierOperator<double> op(mask);
    Rng rng(19);
    auto model = UnrolledModel<double>::make(small_config(), 2, WeightMode::Shared, op, 1);
    Tensor<double> y({1, op.sample_count(), 2});
    y.fill_normal(rng, 0.1);
    Tensor<double> x_tilde = random_batch(1, 2, 16, 16, rng, 0.2);
    UnrolledCache<double> cache;
    unrolled_forward(model, y, x_tilde, BatchNormMode::Train, &cache);
    for (const auto& xc : cache.x_check)
        for (std::size_t i = 0; i < xc.size(); ++i) {
            REQUIRE(xc[i] > 0.0);
            REQUIRE(xc[i] < 1.0);
        }
}

TEST_CASE("K=1 with alpha=0 reduces to the plain generator gradient") {
    auto mask = generate_mask(16, 16, 0.4, 3.0, 2, 23);
    MaskedFourierOperator<double> op(mask);
    Rng rng(29);
    auto model = UnrolledModel<double>::make(small_config(), 1, WeightMode::Shared, op, 7);
    model.alpha_raw[0] = 0.0;

    Tensor<double> y({1, op.sample_count(), 2});
    y.fill_normal(rng, 0.1);
    Tensor<double> x_tilde = random_batch(1, 2, 16, 16, rng, 0.3);

    UnrolledCache<double> cache;
    unrolled_forward(model, y, x_tilde, BatchNormMode::Train, &cache);
    Tensor<double> grad_out = random_batch(1, 2, 16, 16, rng);
    auto grads = UnrolledGrads<double>::zeros_like(model);
    unrolled_backward(model, cache, grad_out, nullptr, grads);

    auto plain = model.generators[0];
    GeneratorCache<double> pcache;
    plain.forward(x_tilde, BatchNormMode::Train, &pcache, false);
    auto pgrads = plain.zeros_like();
    plain.backward(pcache, grad_out, pgrads);

    auto a = grads.gen[0].trainable_params();
    auto b = pgrads.trainable_params();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto d = *a[i].value - *b[i].value;
        REQUIRE(d.max_abs() < 1e-13);
    }
}

TEST_CASE("shared gradients equal the sum of per-copy independent gradients") {
    auto mask = generate_mask(16, 16, 0.4, 3.0, 2, 31);
    MaskedFourierOperator<double> op(mask);
    Rng rng(37);
    const int K = 3;
    auto shared = UnrolledModel<double>::make(small_config(), K, WeightMode::Shared, op, 11);
    auto indep = UnrolledModel<double>::make(small_config(), K, WeightMode::Independent, op, 12);
    // make every independent copy numerically equal to the shared weights
    for (int k = 0; k < K; ++k) {
        auto src = shared.generators[0].trainable_params();
        auto dst = indep.generators[static_cast<std::size_t>(k)].trainable_params();
        for (std::size_t i = 0; i < src.size(); ++i) *dst[i].value = *src[i].value;
    }

    Tensor<double> y({2, op.sample_count(), 2});
    y.fill_normal(rng, 0.2);
    Tensor<double> x_tilde = random_batch(2, 2, 16, 16, rng, 0.3);
    Tensor<double> grad_out = random_batch(2, 2, 16, 16, rng);

    UnrolledCache<double> c1, c2;
    auto o1 = unrolled_forward(shared, y, x_tilde, BatchNormMode::Eval, &c1, false);
    auto o2 = unrolled_forward(indep, y, x_tilde, BatchNormMode::Eval, &c2, false);
    auto od = o1 - o2;
    REQUIRE(od.max_abs() < 1e-12);

    auto gs = UnrolledGrads<double>::zeros_like(shared);
    auto gi = UnrolledGrads<double>::zeros_like(indep);
    unrolled_backward(shared, c1, grad_out, nullptr, gs);
    unrolled_backward(indep, c2, grad_out, nullptr, gi);

    auto shared_params = gs.gen[0].trainable_params();
    for (std::size_t i = 0; i < shared_params.size(); ++i) {
        Tensor<double> sum(shared_params[i].value->shape());
        for (int k = 0; k < K; ++k)
            sum += *gi.gen[static_cast<std::size_t>(k)].trainable_params()[i].value;
        sum -= *shared_params[i].value;
        REQUIRE(sum.max_abs() < 1e-10);
    }
}

TEST_CASE("independent mode has exactly K times the shared parameter count") {
    auto mask = generate_mask(16, 16, 0.4, 3.0, 2, 41);
    MaskedFourierOperator<double> op(mask);
    for (int K : {2, 5}) {
        auto shared = UnrolledModel<double>::make(small_config(2, 8), K, WeightMode::Shared, op, 3);
        auto indep = UnrolledModel<double>::make(small_config(2, 8), K, WeightMode::Independent, op, 3);
        const std::size_t shared_gen = shared.parameter_count() - static_cast<std::size_t>(K);
        const std::size_t indep_gen = indep.parameter_count() - static_cast<std::size_t>(K);
        REQUIRE(indep_gen == static_cast<std::size_t>(K) * shared_gen);
    }
}

TEST_CASE("discriminator: determinism, zero last layer, size guard") {
    Rng rng(43);
    DiscriminatorConfig cfg;
    cfg.in_channels = 1;
    auto d = Discriminator<double>::make(cfg, rng);

    Tensor<double> img({2, 1, 16, 16});
    img.fill_uniform(rng, 0.0, 1.0);
    // batch of two identical images
    for (std::size_t i = 0; i < 256; ++i) img[256 + i] = img[i];
    auto dec = d.forward(img, BatchNormMode::Eval);
    REQUIRE(dec.size() == 2);
    REQUIRE(dec[0] == Approx(dec[1]).margin(1e-12));

    auto dz = d;
    dz.convs.back().kernels.zero();
    dz.convs.back().bias.zero();
    Tensor<double> zero({1, 1, 16, 16});
    REQUIRE(dz.forward(zero, BatchNormMode::Eval)[0] == 0.0);

    Tensor<double> small({1, 1, 8, 8});
    REQUIRE_THROWS_WITH(d.forward(small, BatchNormMode::Eval), Catch::Contains("16x16"));
}

TEST_CASE("discriminator responds to brightness (nonzero input gradient)") {
    Rng rng(47);
    DiscriminatorConfig cfg;
    auto d = Discriminator<double>::make(cfg, rng);
    Tensor<double> img({1, 1, 32, 32});
    img.fill_uniform(rng, 0.2, 0.8);
    DiscriminatorCache<double> cache;
    const double base = d.forward(img, BatchNormMode::Eval, &cache)[0];
    auto brighter = img;
    brighter *= 1.2;
    const double bright = d.forward(brighter, BatchNormMode::Eval)[0];
    REQUIRE(base != bright);
    auto grads = d.zeros_like();
    Tensor<double> gd({1}, {1.0});
    auto gin = d.backward(cache, gd, grads);
    REQUIRE(gin.norm2() > 1e-8);
}

TEST_CASE("discriminator backward agrees with finite differences") {
    Rng rng(53);
    DiscriminatorConfig cfg;
    auto d = Discriminator<double>::make(cfg, rng);
    Tensor<double> img({2, 1, 16, 16});
    img.fill_uniform(rng, 0.1, 0.9);

    auto loss = [&](const Tensor<double>& x) {
        auto dc = d;
        auto v = dc.forward(x, BatchNormMode::Train, nullptr, false);
        return v[0] + 2.0 * v[1];
    };
    auto grad = [&](const Tensor<double>& x) {
        auto dc = d;
        DiscriminatorCache<double> cache;
        dc.forward(x, BatchNormMode::Train, &cache, false);
        auto gz = dc.zeros_like();
        return dc.backward(cache, Tensor<double>({2}, {1.0, 2.0}), gz);
    };
    REQUIRE(finite_diff_gradcheck<double>(loss, grad, img) < 1e-4);
}

TEST_CASE("magnitude layer forward/backward") {
    Rng rng(59);
    Tensor<double> x = random_batch(1, 2, 4, 4, rng);
    auto m = magnitude_forward(x);
    REQUIRE(m.at(0, 0, 1, 1) == Approx(std::hypot(x.at(0, 0, 1, 1), x.at(0, 1, 1, 1))));
    Tensor<double> w = random_batch(1, 1, 4, 4, rng);
    auto loss = [&](const Tensor<double>& p) { return magnitude_forward(p).dot(w); };
    auto grad = [&](const Tensor<double>& p) {
        return magnitude_backward(p, magnitude_forward(p), w);
    };
    REQUIRE(finite_diff_gradcheck<double>(loss, grad, x, 1e-6) < 1e-6);
}
