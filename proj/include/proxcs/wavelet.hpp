#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "proxcs/tensor.hpp"

namespace proxcs {

namespace detail {

// One orthonormal Haar split along a length-n stretch (n even):
// first half averages, second half details.
template <typename T>
void haar_split(T* v, int n, int stride, std::vector<T>& scratch) {
    const T inv_sqrt2 = T(0.70710678118654752440084436210485);
    scratch.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n / 2; ++i) {
        const T a = v[(2 * i) * stride];
        const T b = v[(2 * i + 1) * stride];
        scratch[static_cast<std::size_t>(i)] = (a + b) * inv_sqrt2;
        scratch[static_cast<std::size_t>(n / 2 + i)] = (a - b) * inv_sqrt2;
    }
    for (int i = 0; i < n; ++i) v[i * stride] = scratch[static_cast<std::size_t>(i)];
}

template <typename T>
void haar_merge(T* v, int n, int stride, std::vector<T>& scratch) {
    const T inv_sqrt2 = T(0.70710678118654752440084436210485);
    scratch.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n / 2; ++i) {
        const T a = v[i * stride];
        const T d = v[(n / 2 + i) * stride];
        scratch[static_cast<std::size_t>(2 * i)] = (a + d) * inv_sqrt2;
        scratch[static_cast<std::size_t>(2 * i + 1)] = (a - d) * inv_sqrt2;
    }
    for (int i = 0; i < n; ++i) v[i * stride] = scratch[static_cast<std::size_t>(i)];
}

template <typename T>
void check_wavelet_dims(const Tensor<T>& x, int levels, int& channels, int& height, int& width) {
    if (x.rank() == 2) {
        channels = 1;
        height = x.dim(0);
        width = x.dim(1);
    } else if (x.rank() == 3) {
        channels = x.dim(0);
        height = x.dim(1);
        width = x.dim(2);
    } else {
        throw std::invalid_argument("wavelet: expected [H,W] or [C,H,W], got " + shape_string(x.shape()));
    }
    if (levels < 0) throw std::invalid_argument("wavelet: negative level count");
    const int div = 1 << levels;
    if (height % div != 0 || width % div != 0)
        throw std::invalid_argument("wavelet: dimensions " + std::to_string(height) + "x" +
                                    std::to_string(width) + " not divisible by 2^" + std::to_string(levels));
}

}  // namespace detail

/// Orthonormal multilevel 2D Haar transform, Mallat layout ([LL|LH;HL|HH]
/// recursively in the top-left block). Norm-preserving; exact inverse below.
template <typename T>
Tensor<T> wavelet_forward(const Tensor<T>& x, int levels) {
    int C, H, W;
    detail::check_wavelet_dims(x, levels, C, H, W);
    Tensor<T> out = x;
    std::vector<T> scratch;
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    for (int c = 0; c < C; ++c) {
        T* base = out.data() + static_cast<std::size_t>(c) * plane;
        int h = H, w = W;
        for (int l = 0; l < levels; ++l) {
            for (int r = 0; r < h; ++r) detail::haar_split(base + static_cast<std::size_t>(r) * W, w, 1, scratch);
            for (int col = 0; col < w; ++col) detail::haar_split(base + col, h, W, scratch);
            h /= 2;
            w /= 2;
        }
    }
    return out;
}

template <typename T>
Tensor<T> wavelet_inverse(const Tensor<T>& coeffs, int levels) {
    int C, H, W;
    detail::check_wavelet_dims(coeffs, levels, C, H, W);
    Tensor<T> out = coeffs;
    std::vector<T> scratch;
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    for (int c = 0; c < C; ++c) {
        T* base = out.data() + static_cast<std::size_t>(c) * plane;
        for (int l = levels - 1; l >= 0; --l) {
            const int h = H >> l, w = W >> l;
            for (int col = 0; col < w; ++col) detail::haar_merge(base + col, h, W, scratch);
            for (int r = 0; r < h; ++r) detail::haar_merge(base + static_cast<std::size_t>(r) * W, w, 1, scratch);
        }
    }
    return out;
}

}  // namespace proxcs
