#include <catch2/catch.hpp>

#include <cmath>

#include "proxcs/mask.hpp"
#include "proxcs/metrics.hpp"
#include "proxcs/operators.hpp"
#include "proxcs/rng.hpp"

using namespace proxcs;

namespace {

// Direct per-window double-loop SSIM with explicit 2D Gaussian weights,
// written independently as the reference oracle.
double ssim_reference(const Tensor<double>& a, const Tensor<double>& b) {
    const int H = a.dim(0), W = a.dim(1);
    const int k = 11;
    const double sigma = 1.5, C1 = 1e-4, C2 = 9e-4;
    double w2d[11][11];
    double wsum = 0.0;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            const double di = i - 5.0, dj = j - 5.0;
            w2d[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
            wsum += w2d[i][j];
        }
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) w2d[i][j] /= wsum;

    double acc = 0.0;
    long count = 0;
    for (int y = 0; y + k <= H; ++y)
        for (int x = 0; x + k <= W; ++x) {
            double mu1 = 0, mu2 = 0;
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) {
                    mu1 += w2d[i][j] * a.at(y + i, x + j);
                    mu2 += w2d[i][j] * b.at(y + i, x + j);
                }
            double s11 = 0, s22 = 0, s12 = 0;
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) {
                    s11 += w2d[i][j] * a.at(y + i, x + j) * a.at(y + i, x + j);
                    s22 += w2d[i][j] * b.at(y + i, x + j) * b.at(y + i, x + j);
                    s12 += w2d[i][j] * a.at(y + i, x + j) * b.at(y + i, x + j);
                }
            s11 -= mu1 * mu1;
            s22 -= mu2 * mu2;
            s12 -= mu1 * mu2;
            acc += ((2 * mu1 * mu2 + C1) * (2 * s12 + C2)) /
                   ((mu1 * mu1 + mu2 * mu2 + C1) * (s11 + s22 + C2));
            ++count;
        }
    return acc / static_cast<double>(count);
}

}  // namespace

TEST_CASE("snr: analytic ratios are exact") {
    Rng rng(1);
    Tensor<double> truth({64});
    truth.fill_normal(rng, 1.0);

    auto recon10 = truth;
    recon10 *= 1.1;  // error = 0.1 * truth
    REQUIRE(snr_db(truth, recon10) == Approx(20.0).margin(1e-9));

    auto recon100 = truth;
    recon100 *= 1.01;
    REQUIRE(snr_db(truth, recon100) == Approx(40.0).margin(1e-9));

    REQUIRE(snr_db(truth, truth) == 300.0);
    REQUIRE(snr_db(truth, truth, 250.0) == 250.0);
    Tensor<double> zero({64});
    REQUIRE_THROWS_AS(snr_db(zero, truth), std::invalid_argument);
}

TEST_CASE("snr: noise of a known norm gives the predicted value") {
    Rng rng(2);
    Tensor<double> truth({2, 32, 32});
    truth.fill_normal(rng, 1.0);
    Tensor<double> noise(truth.shape());
    noise.fill_normal(rng, 1.0);
    for (double target_db : {6.0, 17.5, 33.0}) {
        const double scale = truth.norm2() / (noise.norm2() * std::pow(10.0, target_db / 20.0));
        auto recon = truth;
        recon.axpy(scale, noise);
        REQUIRE(snr_db(truth, recon) == Approx(target_db).margin(1e-9));
    }
}

TEST_CASE("snr on complex data uses magnitudes") {
    ComplexImage<double> truth(4, 4), recon(4, 4);
    truth.real.fill(3.0);
    truth.imag.fill(4.0);
    recon.real.fill(3.0);
    recon.imag.fill(4.0);
    REQUIRE(snr_magnitude_db(truth, recon) == 300.0);
    // same magnitude, different phase: magnitude SNR stays capped
    recon.real.fill(4.0);
    recon.imag.fill(3.0);
    REQUIRE(snr_magnitude_db(truth, recon) == 300.0);
}

TEST_CASE("ssim: identical images give exactly one") {
    Rng rng(3);
    Tensor<double> img({32, 32});
    img.fill_uniform(rng, 0.0, 1.0);
    REQUIRE(ssim(img, img) == 1.0);
}

TEST_CASE("ssim: inverted image scores below one") {
    Rng rng(4);
    Tensor<double> img({32, 32});
    img.fill_uniform(rng, 0.0, 1.0);
    Tensor<double> inv(img.shape());
    for (std::size_t i = 0; i < img.size(); ++i) inv[i] = 1.0 - img[i];
    REQUIRE(ssim(img, inv) < 1.0);
}

TEST_CASE("ssim matches the per-window reference") {
    Rng rng(5);
    for (int trial = 0; trial < 3; ++trial) {
        Tensor<double> a({32, 32}), b({32, 32});
        a.fill_uniform(rng, 0.0, 1.0);
        b.fill_uniform(rng, 0.0, 1.0);
        REQUIRE(std::abs(ssim(a, b) - ssim_reference(a, b)) < 1e-10);
    }
}

TEST_CASE("ssim symmetry and window guard") {
    Rng rng(6);
    Tensor<double> a({16, 16}), b({16, 16});
    a.fill_uniform(rng, 0.0, 1.0);
    b.fill_uniform(rng, 0.0, 1.0);
    REQUIRE(std::abs(ssim(a, b) - ssim(b, a)) < 1e-12);
    Tensor<double> small({8, 8});
    REQUIRE_THROWS_WITH(ssim(small, small), Catch::Contains("window"));
}

TEST_CASE("zero-fill baseline") {
    SamplingMask full;
    full.height = 16;
    full.width = 16;
    full.fraction = 1.0;
    full.included.assign(256, 1);
    MaskedFourierOperator<double> op(full);
    Rng rng(7);
    Tensor<double> x({2, 16, 16});
    x.fill_normal(rng, 1.0);
    auto zf = zero_fill_baseline(op, op.forward(x));
    zf -= x;
    REQUIRE(zf.max_abs() < 1e-10);

    Tensor<double> zero_y(op.output_shape());
    REQUIRE(zero_fill_baseline(op, zero_y).max_abs() == 0.0);
}
