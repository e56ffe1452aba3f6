#pragma once

#include <cmath>
#include <stdexcept>
#include <type_traits>
#include <string>
#include <vector>

#include "proxcs/tensor.hpp"

namespace proxcs {

enum class Padding { SameZero, Valid };

template <typename T>
struct ConvLayerParams {
    Tensor<T> kernels;  // [out_channels, in_channels, kh, kw]
    Tensor<T> bias;     // [out_channels], may be empty
    int stride = 1;
    Padding padding = Padding::SameZero;

    int out_channels() const { return kernels.dim(0); }
    int in_channels() const { return kernels.dim(1); }
    int kh() const { return kernels.dim(2); }
    int kw() const { return kernels.dim(3); }
};

namespace detail {

/// Dot product accumulated into an eight-lane partial-sum block so the
/// compiler can vectorize the reduction without reassociation flags.
template <typename T>
T dot_span(const T* __restrict a, const T* __restrict b, int n) {
    T lanes[8] = {T(0), T(0), T(0), T(0), T(0), T(0), T(0), T(0)};
    int i = 0;
    for (; i + 8 <= n; i += 8)
        for (int j = 0; j < 8; ++j) lanes[j] += a[i + j] * b[i + j];
    T tail(0);
    for (; i < n; ++i) tail += a[i] * b[i];
    return (((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
            ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]))) +
           tail;
}

template <typename T>
T dot_span(const T* __restrict a, const T* __restrict b, int n);

/// Three shifted dot products against the same (cache-hot) row:
/// d[k] += sum_ox r[ox + k - 1] * g[ox] over the in-range part of each shift.
template <typename T>
void dot3_shifted(const T* __restrict r, const T* __restrict g, int w, T* __restrict d) {
    d[0] += dot_span(r, g + 1, w - 1);
    d[1] += dot_span(r, g, w);
    d[2] += dot_span(r + 1, g, w - 1);
}

inline int conv_out_size(int in, int k, int stride, Padding pad) {
    if (pad == Padding::SameZero) return (in + stride - 1) / stride;
    if (in < k) throw std::invalid_argument("conv2d: input smaller than kernel under valid padding");
    return (in - k) / stride + 1;
}

/// Leading pad, TensorFlow SAME convention.
inline int same_pad_begin(int in, int out, int k, int stride) {
    const int total = std::max(0, (out - 1) * stride + k - in);
    return total / 2;
}

template <typename T>
void check_conv_input(const Tensor<T>& input, const ConvLayerParams<T>& p) {
    if (input.rank() != 4)
        throw std::invalid_argument("conv2d: expected [B,C,H,W] input, got " + shape_string(input.shape()));
    if (p.kernels.rank() != 4)
        throw std::invalid_argument("conv2d: expected [Co,Ci,kh,kw] kernels, got " + shape_string(p.kernels.shape()));
    if (input.dim(1) != p.in_channels())
        throw std::invalid_argument("conv2d: input has " + std::to_string(input.dim(1)) +
                                    " channels but kernels expect " + std::to_string(p.in_channels()));
    if (!p.bias.empty() && (p.bias.rank() != 1 || p.bias.dim(0) != p.out_channels()))
        throw std::invalid_argument("conv2d: bias shape " + shape_string(p.bias.shape()) +
                                    " does not match " + std::to_string(p.out_channels()) + " output channels");
    if (p.stride < 1 || p.kh() < 1 || p.kw() < 1)
        throw std::invalid_argument("conv2d: stride and kernel extents must be >= 1");
}

}  // namespace detail

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvLayerParams<T>& p) {
    detail::check_conv_input(input, p);
    const int B = input.dim(0), Ci = input.dim(1), H = input.dim(2), W = input.dim(3);
    const int Co = p.out_channels(), kh = p.kh(), kw = p.kw(), s = p.stride;
    const int Ho = detail::conv_out_size(H, kh, s, p.padding);
    const int Wo = detail::conv_out_size(W, kw, s, p.padding);
    const int ph = p.padding == Padding::SameZero ? detail::same_pad_begin(H, Ho, kh, s) : 0;
    const int pw = p.padding == Padding::SameZero ? detail::same_pad_begin(W, Wo, kw, s) : 0;

    Tensor<T> out({B, Co, Ho, Wo});
    const T* x = input.data();
    const T* k = p.kernels.data();
    T* y = out.data();
    const std::size_t xb = static_cast<std::size_t>(Ci) * H * W;
    const std::size_t yb = static_cast<std::size_t>(Co) * Ho * Wo;

    if (s == 1 && kh == 3 && kw == 3 && p.padding == Padding::SameZero && W >= 2) {
        // fused 3x3 stencil: all nine taps accumulate in one pass per row,
        // with a shared zero row standing in for out-of-range image rows
        std::vector<T> acc(static_cast<std::size_t>(W));
        std::vector<T> zero_row(static_cast<std::size_t>(W), T(0));
        for (int b = 0; b < B; ++b) {
            for (int co = 0; co < Co; ++co) {
                T* yp = y + b * yb + static_cast<std::size_t>(co) * Ho * Wo;
                const T bias = p.bias.empty() ? T(0) : p.bias[static_cast<std::size_t>(co)];
                for (int oy = 0; oy < H; ++oy) {
                    T* __restrict a = acc.data();
                    for (int i = 0; i < W; ++i) a[i] = bias;
                    for (int ci = 0; ci < Ci; ++ci) {
                        const T* xp = x + b * xb + static_cast<std::size_t>(ci) * H * W;
                        const T* kp = k + ((static_cast<std::size_t>(co) * Ci + ci) * 3) * 3;
                        const T* __restrict r0 =
                            oy > 0 ? xp + static_cast<std::size_t>(oy - 1) * W : zero_row.data();
                        const T* __restrict r1 = xp + static_cast<std::size_t>(oy) * W;
                        const T* __restrict r2 =
                            oy + 1 < H ? xp + static_cast<std::size_t>(oy + 1) * W : zero_row.data();
                        const T k00 = kp[0], k01 = kp[1], k02 = kp[2];
                        const T k10 = kp[3], k11 = kp[4], k12 = kp[5];
                        const T k20 = kp[6], k21 = kp[7], k22 = kp[8];
                        a[0] += k01 * r0[0] + k02 * r0[1] + k11 * r1[0] + k12 * r1[1] +
                                k21 * r2[0] + k22 * r2[1];
                        for (int ox = 1; ox < W - 1; ++ox) {
                            a[ox] += k00 * r0[ox - 1] + k01 * r0[ox] + k02 * r0[ox + 1] +
                                     k10 * r1[ox - 1] + k11 * r1[ox] + k12 * r1[ox + 1] +
                                     k20 * r2[ox - 1] + k21 * r2[ox] + k22 * r2[ox + 1];
                        }
                        a[W - 1] += k00 * r0[W - 2] + k01 * r0[W - 1] + k10 * r1[W - 2] +
                                    k11 * r1[W - 1] + k20 * r2[W - 2] + k21 * r2[W - 1];
                    }
                    std::copy(acc.begin(), acc.end(), yp + static_cast<std::size_t>(oy) * W);
                }
            }
        }
        return out;
    }

    if (s == 1) {
        // row-accumulator path: one output row held locally across all input
        // channels and taps before storing
        std::vector<T> acc(static_cast<std::size_t>(Wo));
        for (int b = 0; b < B; ++b) {
            for (int co = 0; co < Co; ++co) {
                T* yp = y + b * yb + static_cast<std::size_t>(co) * Ho * Wo;
                const T bias = p.bias.empty() ? T(0) : p.bias[static_cast<std::size_t>(co)];
                for (int oy = 0; oy < Ho; ++oy) {
                    T* __restrict a = acc.data();
                    for (int i = 0; i < Wo; ++i) a[i] = bias;
                    for (int ci = 0; ci < Ci; ++ci) {
                        const T* xp = x + b * xb + static_cast<std::size_t>(ci) * H * W;
                        const T* kp = k + ((static_cast<std::size_t>(co) * Ci + ci) * kh) * kw;
                        for (int ky = 0; ky < kh; ++ky) {
                            const int iy = oy - ph + ky;
                            if (iy < 0 || iy >= H) continue;
                            const T* __restrict xrow = xp + static_cast<std::size_t>(iy) * W;
                            for (int kx = 0; kx < kw; ++kx) {
                                const T w = kp[ky * kw + kx];
                                const int dx = kx - pw;
                                const int ox0 = std::max(0, -dx);
                                const int ox1 = std::min(Wo, W - dx);
                                const T* __restrict xs = xrow + dx;
                                for (int ox = ox0; ox < ox1; ++ox) a[ox] += w * xs[ox];
                            }
                        }
                    }
                    std::copy(acc.begin(), acc.end(), yp + static_cast<std::size_t>(oy) * Wo);
                }
            }
        }
        return out;
    }

    for (int b = 0; b < B; ++b) {
        for (int co = 0; co < Co; ++co) {
            T* yp = y + b * yb + static_cast<std::size_t>(co) * Ho * Wo;
            const T bias = p.bias.empty() ? T(0) : p.bias[static_cast<std::size_t>(co)];
            for (int i = 0; i < Ho * Wo; ++i) yp[i] = bias;
            for (int ci = 0; ci < Ci; ++ci) {
                const T* xp = x + b * xb + static_cast<std::size_t>(ci) * H * W;
                const T* kp = k + ((static_cast<std::size_t>(co) * Ci + ci) * kh) * kw;
                for (int ky = 0; ky < kh; ++ky) {
                    for (int kx = 0; kx < kw; ++kx) {
                        const T w = kp[ky * kw + kx];
                        if (w == T(0)) continue;
                        for (int oy = 0; oy < Ho; ++oy) {
                            const int iy = oy * s - ph + ky;
                            if (iy < 0 || iy >= H) continue;
                            // ox range with ix = ox*s - pw + kx inside [0, W)
                            int ox0 = 0, ox1 = Wo;
                            while (ox0 < Wo && ox0 * s - pw + kx < 0) ++ox0;
                            while (ox1 > ox0 && (ox1 - 1) * s - pw + kx >= W) --ox1;
                            const T* row = xp + static_cast<std::size_t>(iy) * W - pw + kx;
                            T* yrow = yp + static_cast<std::size_t>(oy) * Wo;
                            for (int ox = ox0; ox < ox1; ++ox) yrow[ox] += w * row[ox * s];
                        }
                    }
                }
            }
        }
    }
    return out;
}

template <typename T>
struct ConvGrads {
    Tensor<T> input;    // dL/dx
    Tensor<T> kernels;  // dL/dk
    Tensor<T> bias;     // dL/db (empty when layer has no bias)
};

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const ConvLayerParams<T>& p,
                             const Tensor<T>& grad_out) {
    detail::check_conv_input(input, p);
    const int B = input.dim(0), Ci = input.dim(1), H = input.dim(2), W = input.dim(3);
    const int Co = p.out_channels(), kh = p.kh(), kw = p.kw(), s = p.stride;
    const int Ho = detail::conv_out_size(H, kh, s, p.padding);
    const int Wo = detail::conv_out_size(W, kw, s, p.padding);
    if (grad_out.shape() != std::vector<int>{B, Co, Ho, Wo})
        throw std::invalid_argument("conv2d_backward: grad_out shape " + shape_string(grad_out.shape()) +
                                    " does not match forward output [" + std::to_string(B) + "," +
                                    std::to_string(Co) + "," + std::to_string(Ho) + "," + std::to_string(Wo) + "]");
    const int ph = p.padding == Padding::SameZero ? detail::same_pad_begin(H, Ho, kh, s) : 0;
    const int pw = p.padding == Padding::SameZero ? detail::same_pad_begin(W, Wo, kw, s) : 0;

    ConvGrads<T> g;
    g.kernels = Tensor<T>(p.kernels.shape());
    if (!p.bias.empty()) g.bias = Tensor<T>({Co});

    // For stride-1 same-zero convolutions with odd kernels the input gradient
    // is itself a same-zero convolution of grad_out with the 180-degree
    // flipped, channel-swapped kernels.
    const bool fast_gx = s == 1 && p.padding == Padding::SameZero && kh % 2 == 1 && kw % 2 == 1;
    if (fast_gx) {
        ConvLayerParams<T> flipped;
        flipped.kernels = Tensor<T>({Ci, Co, kh, kw});
        for (int co = 0; co < Co; ++co)
            for (int ci = 0; ci < Ci; ++ci)
                for (int ky = 0; ky < kh; ++ky)
                    for (int kx = 0; kx < kw; ++kx)
                        flipped.kernels.at(ci, co, kh - 1 - ky, kw - 1 - kx) = p.kernels.at(co, ci, ky, kx);
        flipped.stride = 1;
        flipped.padding = Padding::SameZero;
        g.input = conv2d_forward(grad_out, flipped);
    } else {
        g.input = Tensor<T>({B, Ci, H, W});
    }

    const T* x = input.data();
    const T* k = p.kernels.data();
    const T* gy = grad_out.data();
    const std::size_t xb = static_cast<std::size_t>(Ci) * H * W;
    const std::size_t yb = static_cast<std::size_t>(Co) * Ho * Wo;

    for (int b = 0; b < B; ++b) {
        for (int co = 0; co < Co; ++co) {
            const T* gyp = gy + b * yb + static_cast<std::size_t>(co) * Ho * Wo;
            if (!p.bias.empty()) {
                T acc(0);
                for (int i = 0; i < Ho * Wo; ++i) acc += gyp[i];
                g.bias[static_cast<std::size_t>(co)] += acc;
            }
            if (fast_gx && kh == 3 && kw == 3) {
                // fused kernel-gradient pass: all nine taps per (co, ci) in
                // one sweep over the rows
                for (int ci = 0; ci < Ci; ++ci) {
                    const T* xp = x + b * xb + static_cast<std::size_t>(ci) * H * W;
                    T* gkp = g.kernels.data() + ((static_cast<std::size_t>(co) * Ci + ci) * 3) * 3;
                    T acc[9] = {};
                    for (int oy = 0; oy < Ho; ++oy) {
                        const T* grow = gyp + static_cast<std::size_t>(oy) * Wo;
                        for (int ky = 0; ky < 3; ++ky) {
                            const int iy = oy - 1 + ky;
                            if (iy < 0 || iy >= H) continue;
                            detail::dot3_shifted(xp + static_cast<std::size_t>(iy) * W, grow, W,
                                                 acc + 3 * ky);
                        }
                    }
                    for (int t = 0; t < 9; ++t) gkp[t] += acc[t];
                }
                continue;
            }
            for (int ci = 0; ci < Ci; ++ci) {
                const T* xp = x + b * xb + static_cast<std::size_t>(ci) * H * W;
                T* gxp = g.input.data() + b * xb + static_cast<std::size_t>(ci) * H * W;
                const T* kp = k + ((static_cast<std::size_t>(co) * Ci + ci) * kh) * kw;
                T* gkp = g.kernels.data() + ((static_cast<std::size_t>(co) * Ci + ci) * kh) * kw;
                for (int ky = 0; ky < kh; ++ky) {
                    for (int kx = 0; kx < kw; ++kx) {
                        const T w = kp[ky * kw + kx];
                        T gw(0);
                        for (int oy = 0; oy < Ho; ++oy) {
                            const int iy = oy * s - ph + ky;
                            if (iy < 0 || iy >= H) continue;
                            int ox0 = 0, ox1 = Wo;
                            while (ox0 < Wo && ox0 * s - pw + kx < 0) ++ox0;
                            while (ox1 > ox0 && (ox1 - 1) * s - pw + kx >= W) --ox1;
                            const T* __restrict xrow = xp + static_cast<std::size_t>(iy) * W - pw + kx;
                            T* __restrict gxrow = gxp + static_cast<std::size_t>(iy) * W - pw + kx;
                            const T* __restrict gyrow = gyp + static_cast<std::size_t>(oy) * Wo;
                            if (s == 1) {
                                gw += detail::dot_span(xrow + ox0, gyrow + ox0, ox1 - ox0);
                                if (!fast_gx && w != T(0))
                                    for (int ox = ox0; ox < ox1; ++ox) gxrow[ox] += w * gyrow[ox];
                            } else {
                                for (int ox = ox0; ox < ox1; ++ox) {
                                    gw += xrow[ox * s] * gyrow[ox];
                                    gxrow[ox * s] += w * gyrow[ox];
                                }
                            }
                        }
                        gkp[ky * kw + kx] += gw;
                    }
                }
            }
        }
    }
    return g;
}

/// Adjoint of the valid, strided convolution with the same kernels:
/// <conv(x), u> == <x, transpose_conv(u)> when both biases are zero.
/// Input is [B,Co,Ho,Wo]; output is [B,Ci,(Ho-1)*s+kh,(Wo-1)*s+kw].
template <typename T>
Tensor<T> transpose_conv2d_forward(const Tensor<T>& input, const ConvLayerParams<T>& p) {
    if (input.rank() != 4)
        throw std::invalid_argument("transpose_conv2d: expected [B,Co,H,W] input, got " +
                                    shape_string(input.shape()));
    if (input.dim(1) != p.out_channels())
        throw std::invalid_argument("transpose_conv2d: input has " + std::to_string(input.dim(1)) +
                                    " channels but kernels expect " + std::to_string(p.out_channels()));
    if (!p.bias.empty() && (p.bias.rank() != 1 || p.bias.dim(0) != p.in_channels()))
        throw std::invalid_argument("transpose_conv2d: bias must have in_channels entries");
    const int B = input.dim(0), Co = input.dim(1), Ho = input.dim(2), Wo = input.dim(3);
    const int Ci = p.in_channels(), kh = p.kh(), kw = p.kw(), s = p.stride;
    const int H = (Ho - 1) * s + kh;
    const int W = (Wo - 1) * s + kw;

    Tensor<T> out({B, Ci, H, W});
    for (int b = 0; b < B; ++b) {
        for (int ci = 0; ci < Ci; ++ci) {
            T* yp = out.data() + (static_cast<std::size_t>(b) * Ci + ci) * H * W;
            if (!p.bias.empty()) {
                const T bias = p.bias[static_cast<std::size_t>(ci)];
                for (int i = 0; i < H * W; ++i) yp[i] = bias;
            }
            for (int co = 0; co < Co; ++co) {
                const T* up = input.data() + (static_cast<std::size_t>(b) * Co + co) * Ho * Wo;
                const T* kp = p.kernels.data() + ((static_cast<std::size_t>(co) * Ci + ci) * kh) * kw;
                for (int oy = 0; oy < Ho; ++oy) {
                    for (int ox = 0; ox < Wo; ++ox) {
                        const T u = up[oy * Wo + ox];
                        if (u == T(0)) continue;
                        T* block = yp + static_cast<std::size_t>(oy * s) * W + ox * s;
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx)
                                block[ky * W + kx] += u * kp[ky * kw + kx];
                    }
                }
            }
        }
    }
    return out;
}

template <typename T>
ConvGrads<T> transpose_conv2d_backward(const Tensor<T>& input, const ConvLayerParams<T>& p,
                                       const Tensor<T>& grad_out) {
    const int B = input.dim(0), Co = input.dim(1), Ho = input.dim(2), Wo = input.dim(3);
    const int Ci = p.in_channels(), kh = p.kh(), kw = p.kw(), s = p.stride;
    const int H = (Ho - 1) * s + kh;
    const int W = (Wo - 1) * s + kw;
    if (grad_out.shape() != std::vector<int>{B, Ci, H, W})
        throw std::invalid_argument("transpose_conv2d_backward: grad_out shape mismatch");

    ConvGrads<T> g;
    g.input = Tensor<T>({B, Co, Ho, Wo});
    g.kernels = Tensor<T>(p.kernels.shape());
    if (!p.bias.empty()) g.bias = Tensor<T>({Ci});

    for (int b = 0; b < B; ++b) {
        for (int ci = 0; ci < Ci; ++ci) {
            const T* gyp = grad_out.data() + (static_cast<std::size_t>(b) * Ci + ci) * H * W;
            if (!p.bias.empty()) {
                T acc(0);
                for (int i = 0; i < H * W; ++i) acc += gyp[i];
                g.bias[static_cast<std::size_t>(ci)] += acc;
            }
            for (int co = 0; co < Co; ++co) {
                const T* up = input.data() + (static_cast<std::size_t>(b) * Co + co) * Ho * Wo;
                T* gup = g.input.data() + (static_cast<std::size_t>(b) * Co + co) * Ho * Wo;
                const T* kp = p.kernels.data() + ((static_cast<std::size_t>(co) * Ci + ci) * kh) * kw;
                T* gkp = g.kernels.data() + ((static_cast<std::size_t>(co) * Ci + ci) * kh) * kw;
                for (int oy = 0; oy < Ho; ++oy) {
                    for (int ox = 0; ox < Wo; ++ox) {
                        const T* block = gyp + static_cast<std::size_t>(oy * s) * W + ox * s;
                        const T u = up[oy * Wo + ox];
                        T acc(0);
                        for (int ky = 0; ky < kh; ++ky) {
                            for (int kx = 0; kx < kw; ++kx) {
                                acc += block[ky * W + kx] * kp[ky * kw + kx];
                                gkp[ky * kw + kx] += u * block[ky * W + kx];
                            }
                        }
                        gup[oy * Wo + ox] += acc;
                    }
                }
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Batch normalization
// ---------------------------------------------------------------------------

enum class BatchNormMode { Train, Eval };

template <typename T>
struct BatchNormParams {
    Tensor<T> scale;         // [C]
    Tensor<T> shift;         // [C]
    Tensor<T> running_mean;  // [C]
    Tensor<T> running_var;   // [C]
    T epsilon = T(1e-5);
    T momentum = T(0.9);  // kept fraction of the old running statistic

    static BatchNormParams make(int channels) {
        BatchNormParams p;
        p.scale = Tensor<T>::full({channels}, T(1));
        p.shift = Tensor<T>({channels});
        p.running_mean = Tensor<T>({channels});
        p.running_var = Tensor<T>::full({channels}, T(1));
        return p;
    }
};

template <typename T>
struct BatchNormCache {
    Tensor<T> x_hat;    // normalized input
    std::vector<T> inv_std;
    std::vector<T> mean;
    BatchNormMode mode = BatchNormMode::Train;
};

/// Train mode normalizes with batch statistics and updates running stats
/// (set update_running=false to leave them untouched, e.g. during the
/// discriminator's extra generator pass). Eval mode uses running statistics.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& input, BatchNormParams<T>& p, BatchNormMode mode,
                            std::type_identity_t<BatchNormCache<T>>* cache = nullptr,
                            bool update_running = true) {
    if (input.rank() != 4)
        throw std::invalid_argument("batchnorm: expected [B,C,H,W] input, got " + shape_string(input.shape()));
    const int B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    if (B < 1) throw std::invalid_argument("batchnorm: empty batch");
    if (C != p.scale.dim(0))
        throw std::invalid_argument("batchnorm: input has " + std::to_string(C) +
                                    " channels, params have " + std::to_string(p.scale.dim(0)));
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    const std::size_t n = static_cast<std::size_t>(B) * plane;

    Tensor<T> out(input.shape());
    if (cache) {
        cache->x_hat = Tensor<T>(input.shape());
        cache->inv_std.assign(static_cast<std::size_t>(C), T(0));
        cache->mean.assign(static_cast<std::size_t>(C), T(0));
        cache->mode = mode;
    }

    for (int c = 0; c < C; ++c) {
        T mean, var;
        if (mode == BatchNormMode::Train) {
            T acc(0);
            for (int b = 0; b < B; ++b) {
                const T* xp = input.data() + (static_cast<std::size_t>(b) * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) acc += xp[i];
            }
            mean = acc / static_cast<T>(n);
            T vacc(0);
            for (int b = 0; b < B; ++b) {
                const T* xp = input.data() + (static_cast<std::size_t>(b) * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    const T d = xp[i] - mean;
                    vacc += d * d;
                }
            }
            var = vacc / static_cast<T>(n);
            if (update_running) {
                const T unbiased = n > 1 ? vacc / static_cast<T>(n - 1) : var;
                p.running_mean[c] = p.momentum * p.running_mean[c] + (T(1) - p.momentum) * mean;
                p.running_var[c] = p.momentum * p.running_var[c] + (T(1) - p.momentum) * unbiased;
            }
        } else {
            mean = p.running_mean[c];
            var = p.running_var[c];
        }
        const T inv_std = T(1) / std::sqrt(var + p.epsilon);
        const T sc = p.scale[c], sh = p.shift[c];
        for (int b = 0; b < B; ++b) {
            const T* xp = input.data() + (static_cast<std::size_t>(b) * C + c) * plane;
            T* yp = out.data() + (static_cast<std::size_t>(b) * C + c) * plane;
            T* hp = cache ? cache->x_hat.data() + (static_cast<std::size_t>(b) * C + c) * plane : nullptr;
            for (std::size_t i = 0; i < plane; ++i) {
                const T xh = (xp[i] - mean) * inv_std;
                if (hp) hp[i] = xh;
                yp[i] = sc * xh + sh;
            }
        }
        if (cache) {
            cache->inv_std[static_cast<std::size_t>(c)] = inv_std;
            cache->mean[static_cast<std::size_t>(c)] = mean;
        }
    }
    return out;
}

template <typename T>
struct BatchNormGrads {
    Tensor<T> input;
    Tensor<T> scale;
    Tensor<T> shift;
};

template <typename T>
BatchNormGrads<T> batchnorm_backward(const BatchNormParams<T>& p, const BatchNormCache<T>& cache,
                                     const Tensor<T>& grad_out) {
    const int B = grad_out.dim(0), C = grad_out.dim(1), H = grad_out.dim(2), W = grad_out.dim(3);
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    const T n = static_cast<T>(static_cast<std::size_t>(B) * plane);

    BatchNormGrads<T> g;
    g.input = Tensor<T>(grad_out.shape());
    g.scale = Tensor<T>({C});
    g.shift = Tensor<T>({C});

    for (int c = 0; c < C; ++c) {
        const T inv_std = cache.inv_std[static_cast<std::size_t>(c)];
        const T sc = p.scale[c];
        T sum_gy(0), sum_gy_xhat(0);
        for (int b = 0; b < B; ++b) {
            const T* gyp = grad_out.data() + (static_cast<std::size_t>(b) * C + c) * plane;
            const T* hp = cache.x_hat.data() + (static_cast<std::size_t>(b) * C + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                sum_gy += gyp[i];
                sum_gy_xhat += gyp[i] * hp[i];
            }
        }
        g.scale[c] = sum_gy_xhat;
        g.shift[c] = sum_gy;
        for (int b = 0; b < B; ++b) {
            const T* gyp = grad_out.data() + (static_cast<std::size_t>(b) * C + c) * plane;
            const T* hp = cache.x_hat.data() + (static_cast<std::size_t>(b) * C + c) * plane;
            T* gxp = g.input.data() + (static_cast<std::size_t>(b) * C + c) * plane;
            if (cache.mode == BatchNormMode::Train) {
                for (std::size_t i = 0; i < plane; ++i)
                    gxp[i] = sc * inv_std * (gyp[i] - sum_gy / n - hp[i] * sum_gy_xhat / n);
            } else {
                for (std::size_t i = 0; i < plane; ++i) gxp[i] = sc * inv_std * gyp[i];
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

enum class Activation { Relu, Sigmoid };

template <typename T>
Tensor<T> activation_forward(const Tensor<T>& input, Activation kind) {
    Tensor<T> out(input.shape());
    if (kind == Activation::Relu) {
        for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > T(0) ? input[i] : T(0);
    } else {
        for (std::size_t i = 0; i < input.size(); ++i) out[i] = T(1) / (T(1) + std::exp(-input[i]));
    }
    return out;
}

/// `output` must be the activation_forward result for the same input.
template <typename T>
Tensor<T> activation_backward(const Tensor<T>& output, Activation kind, const Tensor<T>& grad_out) {
    Tensor<T> g(grad_out.shape());
    if (kind == Activation::Relu) {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = output[i] > T(0) ? grad_out[i] : T(0);
    } else {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = grad_out[i] * output[i] * (T(1) - output[i]);
    }
    return g;
}

}  // namespace proxcs
