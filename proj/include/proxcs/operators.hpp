#pragma once

#include <complex>
#include <memory>
#include <stdexcept>
#include <vector>

#include "proxcs/complex_image.hpp"
#include "proxcs/fft.hpp"
#include "proxcs/layers.hpp"
#include "proxcs/mask.hpp"
#include "proxcs/tensor.hpp"

namespace proxcs {

/// Linear measurement map. Images and measurements are plain tensors so the
/// same interface covers the masked-Fourier MRI model ([2,H,W] -> [M,2]) and
/// the box-downsampling superresolution model ([C,H,W] -> [C,H/s,W/s]).
/// Instances are immutable after construction; forward/adjoint are reentrant.
template <typename T>
class LinearOperator {
public:
    virtual ~LinearOperator() = default;
    virtual std::vector<int> input_shape() const = 0;
    virtual std::vector<int> output_shape() const = 0;
    virtual Tensor<T> forward(const Tensor<T>& x) const = 0;
    virtual Tensor<T> adjoint(const Tensor<T>& y) const = 0;

protected:
    void check_input(const Tensor<T>& x, const char* what) const {
        if (x.shape() != input_shape())
            throw std::invalid_argument(std::string(what) + ": image shape " + shape_string(x.shape()) +
                                        " does not match operator geometry " + shape_string(input_shape()));
    }
    void check_output(const Tensor<T>& y, const char* what) const {
        if (y.shape() != output_shape())
            throw std::invalid_argument(std::string(what) + ": measurement shape " + shape_string(y.shape()) +
                                        " does not match operator geometry " + shape_string(output_shape()));
    }
};

/// Unitary 2D FFT restricted to the sampled set: Phi = S o F. Rows are
/// orthonormal, so Phi Phi^H is the identity on the sampled entries.
/// Measurements follow the mask's row-major order (centered layout), stored
/// as [M,2] (real, imaginary) pairs.
template <typename T>
class MaskedFourierOperator final : public LinearOperator<T> {
public:
    explicit MaskedFourierOperator(SamplingMask mask) : mask_(std::move(mask)) {
        const int h = mask_.height, w = mask_.width;
        if (!detail::is_power_of_two(h) || !detail::is_power_of_two(w))
            throw std::invalid_argument("masked-fourier: mask dimensions must be powers of two");
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                if (!mask_.at(r, c)) continue;
                // centered -> unshifted spectrum index (even sizes, self-inverse)
                const int ur = (r + h / 2) % h;
                const int uc = (c + w / 2) % w;
                samples_.push_back(static_cast<std::size_t>(ur) * w + uc);
            }
        }
    }

    const SamplingMask& mask() const { return mask_; }
    int sample_count() const { return static_cast<int>(samples_.size()); }

    std::vector<int> input_shape() const override { return {2, mask_.height, mask_.width}; }
    std::vector<int> output_shape() const override { return {sample_count(), 2}; }

    Tensor<T> forward(const Tensor<T>& x) const override {
        this->check_input(x, "masked-fourier forward");
        std::vector<std::complex<T>> grid = to_grid(x);
        fft2_unitary(grid, mask_.height, mask_.width, false);
        Tensor<T> y({sample_count(), 2});
        for (std::size_t i = 0; i < samples_.size(); ++i) {
            y[2 * i] = grid[samples_[i]].real();
            y[2 * i + 1] = grid[samples_[i]].imag();
        }
        return y;
    }

    Tensor<T> adjoint(const Tensor<T>& y) const override {
        this->check_output(y, "masked-fourier adjoint");
        std::vector<std::complex<T>> grid(static_cast<std::size_t>(mask_.height) * mask_.width);
        for (std::size_t i = 0; i < samples_.size(); ++i)
            grid[samples_[i]] = {y[2 * i], y[2 * i + 1]};
        fft2_unitary(grid, mask_.height, mask_.width, true);
        return from_grid(grid);
    }

private:
    std::vector<std::complex<T>> to_grid(const Tensor<T>& x) const {
        const std::size_t plane = static_cast<std::size_t>(mask_.height) * mask_.width;
        std::vector<std::complex<T>> grid(plane);
        for (std::size_t i = 0; i < plane; ++i) grid[i] = {x[i], x[plane + i]};
        return grid;
    }
    Tensor<T> from_grid(const std::vector<std::complex<T>>& grid) const {
        const std::size_t plane = grid.size();
        Tensor<T> x({2, mask_.height, mask_.width});
        for (std::size_t i = 0; i < plane; ++i) {
            x[i] = grid[i].real();
            x[plane + i] = grid[i].imag();
        }
        return x;
    }

    SamplingMask mask_;
    std::vector<std::size_t> samples_;
};

/// Downsampling by a constant kernel_size x kernel_size averaging kernel with
/// matching stride, applied per channel. A constant image maps to the same
/// constant. Implemented on top of the conv/transpose-conv primitives with a
/// channel-diagonal kernel.
template <typename T>
class BoxDownsampleOperator final : public LinearOperator<T> {
public:
    BoxDownsampleOperator(int channels, int height, int width, int kernel_size = 4)
        : channels_(channels), height_(height), width_(width), k_(kernel_size) {
        if (height % k_ != 0 || width % k_ != 0)
            throw std::invalid_argument("box-downsample: image size must be divisible by the kernel size");
        params_.kernels = Tensor<T>({channels_, channels_, k_, k_});
        const T tap = T(1) / static_cast<T>(k_ * k_);
        for (int c = 0; c < channels_; ++c)
            for (int ky = 0; ky < k_; ++ky)
                for (int kx = 0; kx < k_; ++kx)
                    params_.kernels.at(c, c, ky, kx) = tap;
        params_.stride = k_;
        params_.padding = Padding::Valid;
    }

    int factor() const { return k_; }

    std::vector<int> input_shape() const override { return {channels_, height_, width_}; }
    std::vector<int> output_shape() const override { return {channels_, height_ / k_, width_ / k_}; }

    Tensor<T> forward(const Tensor<T>& x) const override {
        this->check_input(x, "box-downsample forward");
        Tensor<T> batched({1, channels_, height_, width_}, std::vector<T>(x.values()));
        Tensor<T> y = conv2d_forward(batched, params_);
        return Tensor<T>(output_shape(), std::move(y.values()));
    }

    Tensor<T> adjoint(const Tensor<T>& y) const override {
        this->check_output(y, "box-downsample adjoint");
        Tensor<T> batched({1, channels_, height_ / k_, width_ / k_}, std::vector<T>(y.values()));
        Tensor<T> x = transpose_conv2d_forward(batched, params_);
        return Tensor<T>(input_shape(), std::move(x.values()));
    }

private:
    int channels_, height_, width_, k_;
    ConvLayerParams<T> params_;
};

/// P_N(x) = x - alpha * Phi^H(Phi x); projects onto the measurement nullspace
/// when Phi has orthonormal rows and alpha = 1.
template <typename T>
Tensor<T> nullspace_filter(const LinearOperator<T>& op, const Tensor<T>& x, T alpha) {
    if (alpha == T(0)) return x;
    Tensor<T> out = x;
    out.axpy(-alpha, op.adjoint(op.forward(x)));
    return out;
}

/// Gradient step on 1/2 ||y - Phi x||^2: x + alpha * Phi^H(y - Phi x).
/// For the masked-Fourier operator with alpha = 1 this exactly replaces the
/// sampled k-space entries of x by y.
template <typename T>
Tensor<T> data_consistency(const LinearOperator<T>& op, const Tensor<T>& x, const Tensor<T>& y,
                           T alpha) {
    if (alpha == T(0)) return x;
    Tensor<T> residual = y;
    residual -= op.forward(x);
    Tensor<T> out = x;
    out.axpy(alpha, op.adjoint(residual));
    return out;
}

/// Approximate deconvolution for the downsampling model: start from the
/// unbiased spread x0 = adjoint(y) * k^2 and run a few gradient-descent
/// iterations on 1/2 ||y - Phi x||^2.
template <typename T>
Tensor<T> approx_deconvolve(const BoxDownsampleOperator<T>& op, const Tensor<T>& y, int steps = 5,
                            T step_size = T(0.1)) {
    if (steps < 0) throw std::invalid_argument("approx_deconvolve: steps must be >= 0");
    Tensor<T> x = op.adjoint(y);
    x *= static_cast<T>(op.factor() * op.factor());
    for (int i = 0; i < steps; ++i) x = data_consistency(op, x, y, step_size);
    return x;
}

}  // namespace proxcs
