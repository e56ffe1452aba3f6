#pragma once

#include <cmath>
#include <stdexcept>

#include "proxcs/tensor.hpp"

namespace proxcs {

namespace detail {

// Forward differences with periodic boundary; g is [2,H,W].
template <typename T>
void tv_gradient(const T* x, int H, int W, T* g) {
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    for (int i = 0; i < H; ++i) {
        const int in = (i + 1) % H;
        for (int j = 0; j < W; ++j) {
            const int jn = (j + 1) % W;
            g[static_cast<std::size_t>(i) * W + j] = x[static_cast<std::size_t>(in) * W + j] - x[static_cast<std::size_t>(i) * W + j];
            g[plane + static_cast<std::size_t>(i) * W + j] = x[static_cast<std::size_t>(i) * W + jn] - x[static_cast<std::size_t>(i) * W + j];
        }
    }
}

// Adjoint of tv_gradient: out = G^T p.
template <typename T>
void tv_gradient_adjoint(const T* p, int H, int W, T* out) {
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    for (int i = 0; i < H; ++i) {
        const int ip = (i - 1 + H) % H;
        for (int j = 0; j < W; ++j) {
            const int jp = (j - 1 + W) % W;
            out[static_cast<std::size_t>(i) * W + j] =
                p[static_cast<std::size_t>(ip) * W + j] - p[static_cast<std::size_t>(i) * W + j] +
                p[plane + static_cast<std::size_t>(i) * W + jp] - p[plane + static_cast<std::size_t>(i) * W + j];
        }
    }
}

}  // namespace detail

/// Anisotropic total variation with forward differences, periodic boundary.
template <typename T>
T tv_value(const Tensor<T>& x) {
    int C = 1, H, W;
    if (x.rank() == 2) {
        H = x.dim(0);
        W = x.dim(1);
    } else if (x.rank() == 3) {
        C = x.dim(0);
        H = x.dim(1);
        W = x.dim(2);
    } else {
        throw std::invalid_argument("tv: expected [H,W] or [C,H,W], got " + shape_string(x.shape()));
    }
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    T acc(0);
    Tensor<T> g({2, H, W});
    for (int c = 0; c < C; ++c) {
        detail::tv_gradient(x.data() + static_cast<std::size_t>(c) * plane, H, W, g.data());
        acc += g.norm1();
    }
    return acc;
}

/// Approximate argmin_x 1/2 ||x - z||^2 + weight * TV(x) by Chambolle's
/// semi-implicit dual iteration (step 0.25), applied per channel.
template <typename T>
Tensor<T> tv_prox(const Tensor<T>& z, T weight, int inner_iters = 50, T step = T(0.25)) {
    if (weight < T(0)) throw std::invalid_argument("tv_prox: negative weight");
    if (weight == T(0) || inner_iters <= 0) return z;
    int C = 1, H, W;
    if (z.rank() == 2) {
        H = z.dim(0);
        W = z.dim(1);
    } else if (z.rank() == 3) {
        C = z.dim(0);
        H = z.dim(1);
        W = z.dim(2);
    } else {
        throw std::invalid_argument("tv_prox: expected [H,W] or [C,H,W], got " + shape_string(z.shape()));
    }
    const std::size_t plane = static_cast<std::size_t>(H) * W;

    Tensor<T> out = z;
    Tensor<T> p({2, H, W});     // dual variable, |p| <= 1 componentwise
    Tensor<T> gx({2, H, W});    // gradient of the current primal image
    Tensor<T> gtp({1, H, W});   // G^T p
    std::vector<T> x(plane);

    for (int c = 0; c < C; ++c) {
        const T* zp = z.data() + static_cast<std::size_t>(c) * plane;
        p.zero();
        const T tau = step / weight;
        for (int it = 0; it < inner_iters; ++it) {
            detail::tv_gradient_adjoint(p.data(), H, W, gtp.data());
            for (std::size_t i = 0; i < plane; ++i) x[i] = zp[i] - weight * gtp[i];
            detail::tv_gradient(x.data(), H, W, gx.data());
            for (std::size_t i = 0; i < 2 * plane; ++i) {
                const T num = p[i] + tau * gx[i];
                p[i] = num / (T(1) + tau * std::abs(gx[i]));
            }
        }
        detail::tv_gradient_adjoint(p.data(), H, W, gtp.data());
        T* op_ = out.data() + static_cast<std::size_t>(c) * plane;
        for (std::size_t i = 0; i < plane; ++i) op_[i] = zp[i] - weight * gtp[i];
    }
    return out;
}

}  // namespace proxcs
