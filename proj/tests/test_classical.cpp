#include <catch2/catch.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "proxcs/operators.hpp"
#include "proxcs/rng.hpp"
#include "proxcs/solvers.hpp"
#include "proxcs/tv.hpp"
#include "proxcs/wavelet.hpp"

using namespace proxcs;

namespace {

// Dense Gaussian elimination with partial pivoting; direct-solver oracle.
std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[r];
        for (int c = r + 1; c < n; ++c) acc -= a[r][c] * x[c];
        x[r] = acc / a[r][r];
    }
    return x;
}

SamplingMask mask_1d(int width, double fraction, std::uint64_t seed) {
    return generate_mask(1, width, fraction, 2.0, 1, seed);
}

}  // namespace

TEST_CASE("soft threshold closed form") {
    Tensor<double> x({3}, {2.0, -0.3, 0.0});
    auto y = soft_threshold(x, 0.5);
    REQUIRE(y[0] == Approx(1.5));
    REQUIRE(y[1] == 0.0);
    REQUIRE(y[2] == 0.0);
    auto id = soft_threshold(x, 0.0);
    REQUIRE(id[0] == 2.0);
    REQUIRE(id[1] == -0.3);
}

TEST_CASE("soft threshold is the scalar l1 proximal (grid-search oracle)") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const double z = rng.uniform(-3.0, 3.0);
        const double tau = rng.uniform(0.0, 1.5);
        Tensor<double> zt({1}, {z});
        const double got = soft_threshold(zt, tau)[0];
        double best_t = 0.0, best_val = 1e100;
        for (double t = -4.0; t <= 4.0; t += 1e-4) {
            const double val = 0.5 * (t - z) * (t - z) + tau * std::abs(t);
            if (val < best_val) {
                best_val = val;
                best_t = t;
            }
        }
        REQUIRE(std::abs(got - best_t) < 2e-4);
    }
}

TEST_CASE("complex soft threshold shrinks magnitude and preserves phase") {
    Tensor<double> x({2, 1, 1}, {3.0, 4.0});  // magnitude 5
    auto y = soft_threshold_complex(x, 1.0);
    REQUIRE(std::hypot(y[0], y[1]) == Approx(4.0));
    REQUIRE(y[0] / y[1] == Approx(3.0 / 4.0));
    auto zeroed = soft_threshold_complex(x, 6.0);
    REQUIRE(zeroed.max_abs() == 0.0);
}

TEST_CASE("wavelet: constant image has vanishing details") {
    auto x = Tensor<double>::full({16, 16}, 0.7);
    auto c = wavelet_forward(x, 3);
    // only the 2x2 coarse block survives
    for (int r = 0; r < 16; ++r)
        for (int col = 0; col < 16; ++col)
            if (r >= 2 || col >= 2) REQUIRE(std::abs(c.at(r, col)) < 1e-12);
    REQUIRE(c.at(0, 0) == Approx(0.7 * 8.0));  // 2^levels scaling of the mean
}

TEST_CASE("wavelet: perfect reconstruction and orthonormality") {
    Rng rng(7);
    Tensor<double> x({64, 64});
    x.fill_normal(rng, 1.0);
    auto c = wavelet_forward(x, 4);
    REQUIRE(std::abs(c.norm2() - x.norm2()) < 1e-12 * x.norm2());
    auto back = wavelet_inverse(c, 4);
    back -= x;
    REQUIRE(back.max_abs() < 1e-12);
}

TEST_CASE("wavelet rejects indivisible dimensions") {
    Tensor<double> x({12, 12});
    REQUIRE_THROWS_AS(wavelet_forward(x, 3), std::invalid_argument);
    REQUIRE_NOTHROW(wavelet_forward(x, 2));
}

TEST_CASE("tv_prox: trivial cases") {
    Rng rng(9);
    Tensor<double> z({8, 8});
    z.fill_normal(rng, 1.0);
    auto same = tv_prox(z, 0.0);
    same -= z;
    REQUIRE(same.max_abs() == 0.0);

    auto c = Tensor<double>::full({8, 8}, 1.3);
    auto pc = tv_prox(c, 0.5, 200);
    pc -= c;
    REQUIRE(pc.max_abs() < 1e-10);
}

TEST_CASE("tv_prox: 1D two-segment signal matches the closed form") {
    // periodic two-segment signal: each side moves toward the other by 2w/m
    const int n = 16, m = n / 2;
    const double a = 0.0, b = 1.0, w = 0.1;
    Tensor<double> z({1, n});
    for (int j = 0; j < n; ++j) z.at(0, j) = j < m ? a : b;
    auto x = tv_prox(z, w, 4000);
    const double delta = 2.0 * w / m;
    for (int j = 0; j < n; ++j) {
        const double want = j < m ? a + delta : b - delta;
        REQUIRE(x.at(0, j) == Approx(want).margin(1e-4));
    }
}

TEST_CASE("tv_prox: agrees with a small-step dual projected-gradient oracle") {
    Rng rng(11);
    Tensor<double> z({8, 8});
    z.fill_normal(rng, 1.0);
    const double w = 0.25;
    auto got = tv_prox(z, w, 3000);

    // oracle: plain projected gradient ascent on the dual, step 1/8
    const int H = 8, W = 8;
    const std::size_t plane = 64;
    Tensor<double> p({2, H, W}), gx({2, H, W}), gtp({1, H, W});
    std::vector<double> x(plane);
    for (int it = 0; it < 20000; ++it) {
        detail::tv_gradient_adjoint(p.data(), H, W, gtp.data());
        for (std::size_t i = 0; i < plane; ++i) x[i] = z[i] - w * gtp[i];
        detail::tv_gradient(x.data(), H, W, gx.data());
        for (std::size_t i = 0; i < 2 * plane; ++i)
            p[i] = std::clamp(p[i] + (0.125 / w) * gx[i], -1.0, 1.0);
    }
    detail::tv_gradient_adjoint(p.data(), H, W, gtp.data());
    for (std::size_t i = 0; i < plane; ++i) {
        REQUIRE(got[i] == Approx(z[i] - w * gtp[i]).margin(2e-4));
    }
}

TEST_CASE("tv_prox never increases the objective at the default budget") {
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor<double> z({16, 16});
        z.fill_normal(rng, 1.0);
        const double w = rng.uniform(0.01, 0.6);
        auto x = tv_prox(z, w);
        auto d = x - z;
        const double obj_out = 0.5 * d.dot(d) + w * tv_value(x);
        const double obj_in = w * tv_value(z);
        REQUIRE(obj_out <= obj_in + 1e-12);
    }
}

TEST_CASE("ista: zero regularization and full mask recover in one step") {
    SamplingMask full;
    full.height = 16;
    full.width = 16;
    full.fraction = 1.0;
    full.included.assign(256, 1);
    MaskedFourierOperator<double> op(full);
    Rng rng(17);
    Tensor<double> x_true({2, 16, 16});
    x_true.fill_normal(rng, 1.0);
    auto y = op.forward(x_true);
    SparsityConfig cfg;
    cfg.transform = SparsityTransform::Identity;
    cfg.reg_weight = 0.0;
    auto res = ista(op, y, cfg, 1.0, 1);
    auto err = res.image - x_true;
    REQUIRE(err.max_abs() < 1e-10);
}

TEST_CASE("ista objective is non-increasing on random problems") {
    Rng rng(19);
    for (int trial = 0; trial < 5; ++trial) {
        auto mask = generate_mask(16, 16, 0.4, 3.0, 2, 100 + trial);
        MaskedFourierOperator<double> op(mask);
        Tensor<double> x_true({2, 16, 16});
        x_true.fill_normal(rng, 1.0);
        auto y = op.forward(x_true);
        SparsityConfig cfg;
        cfg.transform = SparsityTransform::Wavelet;
        cfg.wavelet_levels = 3;
        cfg.reg_weight = 0.02;
        auto res = ista(op, y, cfg, 1.0, 60);
        REQUIRE_FALSE(res.trace.diverged);
        for (std::size_t k = 1; k < res.trace.objective.size(); ++k)
            REQUIRE(res.trace.objective[k] <= res.trace.objective[k - 1] + 1e-10);
    }
}

TEST_CASE("ista: 1-sparse support matches brute-force enumeration on 8-dim problems") {
    int tested = 0;
    for (std::uint64_t seed = 0; seed < 30 && tested < 10; ++seed) {
        auto mask = mask_1d(8, 0.5, seed);
        MaskedFourierOperator<double> op(mask);
        REQUIRE(op.sample_count() == 4);
        Rng rng(seed * 7 + 1);
        const int true_idx = rng.uniform_int(8);
        Tensor<double> x_true({2, 1, 8});
        x_true.at(0, 0, true_idx) = 1.0 + rng.uniform();
        auto y = op.forward(x_true);

        // oracle: least squares over all single-atom supports
        std::vector<double> residual(8);
        for (int j = 0; j < 8; ++j) {
            Tensor<double> e({2, 1, 8});
            e.at(0, 0, j) = 1.0;
            auto a = op.forward(e);  // complex atom
            // complex projection coefficient <a,y>/<a,a>
            double ar = 0, ai = 0, aa = 0;
            for (int i = 0; i < 4; ++i) {
                ar += a.at(i, 0) * y.at(i, 0) + a.at(i, 1) * y.at(i, 1);
                ai += a.at(i, 0) * y.at(i, 1) - a.at(i, 1) * y.at(i, 0);
                aa += a.at(i, 0) * a.at(i, 0) + a.at(i, 1) * a.at(i, 1);
            }
            double res2 = 0.0;
            for (int i = 0; i < 4; ++i) {
                const double pr = (ar * a.at(i, 0) - ai * a.at(i, 1)) / aa;
                const double pi = (ar * a.at(i, 1) + ai * a.at(i, 0)) / aa;
                res2 += (y.at(i, 0) - pr) * (y.at(i, 0) - pr) + (y.at(i, 1) - pi) * (y.at(i, 1) - pi);
            }
            residual[static_cast<std::size_t>(j)] = res2;
        }
        int best = 0;
        for (int j = 1; j < 8; ++j)
            if (residual[j] < residual[best]) best = j;
        // require a uniquely identifiable instance
        double second = 1e100;
        for (int j = 0; j < 8; ++j)
            if (j != best) second = std::min(second, residual[j]);
        if (second < 1e-6 || residual[best] > 1e-10) continue;
        REQUIRE(best == true_idx);

        SparsityConfig cfg;
        cfg.transform = SparsityTransform::Identity;
        cfg.reg_weight = 1e-3;
        auto sol = ista(op, y, cfg, 1.0, 400);
        // support of the solution: entries above half the max magnitude
        double maxmag = 0.0;
        std::vector<double> mags(8);
        for (int j = 0; j < 8; ++j) {
            mags[j] = std::hypot(sol.image.at(0, 0, j), sol.image.at(1, 0, j));
            maxmag = std::max(maxmag, mags[j]);
        }
        for (int j = 0; j < 8; ++j) {
            if (j == true_idx)
                REQUIRE(mags[j] == maxmag);
            else
                REQUIRE(mags[j] < 0.5 * maxmag);
        }
        ++tested;
    }
    REQUIRE(tested >= 10);
}

TEST_CASE("fista matches ista at the first iteration") {
    auto mask = generate_mask(16, 16, 0.4, 3.0, 2, 55);
    MaskedFourierOperator<double> op(mask);
    Rng rng(23);
    Tensor<double> x_true({2, 16, 16});
    x_true.fill_normal(rng, 1.0);
    auto y = op.forward(x_true);
    SparsityConfig cfg;
    cfg.transform = SparsityTransform::Wavelet;
    cfg.wavelet_levels = 2;
    cfg.reg_weight = 0.05;
    auto a = ista(op, y, cfg, 1.0, 1);
    auto b = fista(op, y, cfg, 1.0, 1);
    auto d = a.image - b.image;
    REQUIRE(d.max_abs() < 1e-14);
}

TEST_CASE("fista: exact recovery with zero regularization, and long-run ista parity") {
    SamplingMask full;
    full.height = 16;
    full.width = 16;
    full.fraction = 1.0;
    full.included.assign(256, 1);
    MaskedFourierOperator<double> fullop(full);
    Rng rng(29);
    Tensor<double> x_true({2, 16, 16});
    x_true.fill_normal(rng, 1.0);
    auto yfull = fullop.forward(x_true);
    SparsityConfig cfg0;
    cfg0.transform = SparsityTransform::Identity;
    cfg0.reg_weight = 0.0;
    auto rec = fista(fullop, yfull, cfg0, 1.0, 3);
    auto err = rec.image - x_true;
    REQUIRE(err.max_abs() < 1e-10);

    auto mask = generate_mask(16, 16, 0.4, 3.0, 2, 77);
    MaskedFourierOperator<double> op(mask);
    auto y = op.forward(x_true);
    SparsityConfig cfg;
    cfg.transform = SparsityTransform::Wavelet;
    cfg.wavelet_levels = 2;
    cfg.reg_weight = 0.02;
    auto f = fista(op, y, cfg, 1.0, 300);
    auto i10 = ista(op, y, cfg, 1.0, 3000);
    REQUIRE(f.trace.objective.back() <= i10.trace.objective.back() + 1e-6);
    // equal-iteration comparison
    auto i_same = ista(op, y, cfg, 1.0, 300);
    REQUIRE(f.trace.objective.back() <= i_same.trace.objective.back() + 1e-8);
}

TEST_CASE("solver trace exports CSV") {
    auto mask = generate_mask(16, 16, 0.5, 3.0, 2, 88);
    MaskedFourierOperator<double> op(mask);
    Tensor<double> x({2, 16, 16});
    x.at(0, 3, 3) = 1.0;
    auto y = op.forward(x);
    SparsityConfig cfg;
    cfg.transform = SparsityTransform::Identity;
    cfg.reg_weight = 0.01;
    auto res = ista(op, y, cfg, 1.0, 3);
    std::ostringstream os;
    res.trace.to_csv(os);
    const auto text = os.str();
    REQUIRE(text.rfind("iteration,objective,residual\n", 0) == 0);
    REQUIRE(std::count(text.begin(), text.end(), '\n') == 4);
}

TEST_CASE("conjugate gradient: identity, 2x2, and a 50x50 SPD system") {
    {
        Tensor<double> rhs({4}, {1.0, 2.0, 3.0, 4.0});
        auto res = conjugate_gradient<double>([](const Tensor<double>& v) { return v; }, rhs, 10, 1e-14);
        auto d = res.x - rhs;
        REQUIRE(d.max_abs() < 1e-12);
        REQUIRE(res.iterations <= 1);
    }
    {
        // A = [[4,1],[1,3]], b = [1,2]; exact solution (1/11, 7/11)
        auto apply = [](const Tensor<double>& v) {
            return Tensor<double>({2}, {4.0 * v[0] + 1.0 * v[1], 1.0 * v[0] + 3.0 * v[1]});
        };
        Tensor<double> b({2}, {1.0, 2.0});
        auto res = conjugate_gradient<double>(apply, b, 2, 0.0);
        REQUIRE(res.x[0] == Approx(1.0 / 11.0).epsilon(1e-10));
        REQUIRE(res.x[1] == Approx(7.0 / 11.0).epsilon(1e-10));
        REQUIRE(res.iterations <= 2);
    }
    {
        const int n = 50;
        Rng rng(31);
        std::vector<std::vector<double>> m(n, std::vector<double>(n));
        for (auto& row : m)
            for (auto& v : row) v = rng.normal();
        // A = M^T M + I, SPD
        std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                for (int k = 0; k < n; ++k) a[i][j] += m[k][i] * m[k][j];
                if (i == j) a[i][j] += 1.0;
            }
        std::vector<double> b(n);
        for (auto& v : b) v = rng.normal();
        auto direct = solve_dense(a, b);

        auto apply = [&](const Tensor<double>& v) {
            Tensor<double> out({n});
            for (int i = 0; i < n; ++i) {
                double acc = 0.0;
                for (int j = 0; j < n; ++j) acc += a[i][j] * v[j];
                out[i] = acc;
            }
            return out;
        };
        Tensor<double> rhs({n}, std::vector<double>(b));
        auto res = conjugate_gradient<double>(apply, rhs, 2000, 1e-12);
        REQUIRE_FALSE(res.breakdown);
        for (int i = 0; i < n; ++i) REQUIRE(std::abs(res.x[i] - direct[i]) < 1e-8);
    }
}
