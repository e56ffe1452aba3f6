#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace proxcs {

namespace detail {

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 transform over `n` complex values with stride.
/// sign = -1 forward, +1 inverse; no normalization applied here.
template <typename T>
void fft_radix2(std::complex<T>* a, int n, int stride, int sign) {
    // bit-reversal permutation
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i * stride], a[j * stride]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const T ang = static_cast<T>(sign) * T(2) * static_cast<T>(M_PI) / static_cast<T>(len);
        const std::complex<T> wl(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            std::complex<T> w(1);
            for (int j = 0; j < len / 2; ++j) {
                std::complex<T>& u = a[(i + j) * stride];
                std::complex<T>& v = a[(i + j + len / 2) * stride];
                const std::complex<T> t = v * w;
                v = u - t;
                u = u + t;
                w *= wl;
            }
        }
    }
}

}  // namespace detail

/// Unitary 2D FFT of an H x W complex grid stored row-major.
/// Forward and inverse each scale by 1/sqrt(H*W), so both are isometries.
template <typename T>
void fft2_unitary(std::vector<std::complex<T>>& grid, int height, int width, bool inverse = false) {
    if (!detail::is_power_of_two(height) || !detail::is_power_of_two(width))
        throw std::invalid_argument("fft2: dimensions must be powers of two, got " +
                                    std::to_string(height) + "x" + std::to_string(width));
    if (grid.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width))
        throw std::invalid_argument("fft2: grid size does not match dimensions");
    const int sign = inverse ? +1 : -1;
    for (int r = 0; r < height; ++r)
        detail::fft_radix2(grid.data() + static_cast<std::size_t>(r) * width, width, 1, sign);
    for (int c = 0; c < width; ++c)
        detail::fft_radix2(grid.data() + c, height, width, sign);
    const T scale = T(1) / std::sqrt(static_cast<T>(height) * static_cast<T>(width));
    for (auto& v : grid) v *= scale;
}

}  // namespace proxcs
