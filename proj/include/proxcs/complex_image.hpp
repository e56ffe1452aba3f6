#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "proxcs/tensor.hpp"

namespace proxcs {

/// Two-channel (real, imaginary) H x W image.
template <typename T>
struct ComplexImage {
    Tensor<T> real;  // [H,W]
    Tensor<T> imag;  // [H,W]

    ComplexImage() = default;
    ComplexImage(int height, int width) : real({height, width}), imag({height, width}) {}
    ComplexImage(Tensor<T> re, Tensor<T> im) : real(std::move(re)), imag(std::move(im)) {
        if (real.shape() != imag.shape())
            throw std::invalid_argument("complex image: real/imaginary shape mismatch");
    }

    int height() const { return real.dim(0); }
    int width() const { return real.dim(1); }

    /// Magnitude image sqrt(re^2 + im^2), shape [H,W].
    Tensor<T> magnitude() const {
        Tensor<T> m(real.shape());
        for (std::size_t i = 0; i < m.size(); ++i)
            m[i] = std::sqrt(real[i] * real[i] + imag[i] * imag[i]);
        return m;
    }

    /// Pack as a [2,H,W] channel tensor (channel 0 real, channel 1 imaginary).
    Tensor<T> to_channels() const {
        Tensor<T> t({2, height(), width()});
        const std::size_t plane = real.size();
        for (std::size_t i = 0; i < plane; ++i) {
            t[i] = real[i];
            t[plane + i] = imag[i];
        }
        return t;
    }

    static ComplexImage from_channels(const Tensor<T>& t) {
        if (t.rank() != 3 || t.dim(0) != 2)
            throw std::invalid_argument("complex image: expected [2,H,W] tensor, got " +
                                        shape_string(t.shape()));
        ComplexImage img(t.dim(1), t.dim(2));
        const std::size_t plane = img.real.size();
        for (std::size_t i = 0; i < plane; ++i) {
            img.real[i] = t[i];
            img.imag[i] = t[plane + i];
        }
        return img;
    }

    std::vector<std::complex<T>> to_complex() const {
        std::vector<std::complex<T>> v(real.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = {real[i], imag[i]};
        return v;
    }

    static ComplexImage from_complex(const std::vector<std::complex<T>>& v, int height, int width) {
        ComplexImage img(height, width);
        for (std::size_t i = 0; i < v.size(); ++i) {
            img.real[i] = v[i].real();
            img.imag[i] = v[i].imag();
        }
        return img;
    }
};

}  // namespace proxcs
