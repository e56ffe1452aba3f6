#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "proxcs/generator.hpp"
#include "proxcs/layers.hpp"

namespace proxcs {

struct DiscriminatorConfig {
    int in_channels = 1;  // magnitude image for MRI, 3 for RGB
};

template <typename T>
struct DiscriminatorCache {
    std::vector<Tensor<T>> inputs;  // input of every conv layer
    std::vector<BatchNormCache<T>> bn;
    std::vector<Tensor<T>> relu;  // post-activation of layers 0..6
    Tensor<T> last;               // raw output of layer 7
};

/// Eight-layer CNN critic. The first four layers double the feature count
/// 8 -> 16 -> 32 -> 64 with stride 2; layers 5-6 stay at 64 (3x3), layers 7-8
/// use 1x1 kernels mapping 64 -> 32 -> 1. No pooling; every layer except the
/// last is followed by BN and ReLU. The final feature map is averaged
/// spatially into one unbounded decision value per batch element.
template <typename T>
struct Discriminator {
    DiscriminatorConfig config;
    std::vector<ConvLayerParams<T>> convs;   // 8 layers
    std::vector<BatchNormParams<T>> bns;     // 7 entries (layers 0..6)

    static constexpr int kLayers = 8;

    static Discriminator make(const DiscriminatorConfig& cfg, Rng& rng) {
        static const int widths[kLayers] = {8, 16, 32, 64, 64, 64, 32, 1};
        static const int ksize[kLayers] = {3, 3, 3, 3, 3, 3, 1, 1};
        static const int strides[kLayers] = {2, 2, 2, 2, 1, 1, 1, 1};
        Discriminator d;
        d.config = cfg;
        int in_ch = cfg.in_channels;
        for (int l = 0; l < kLayers; ++l) {
            d.convs.push_back(detail::make_conv<T>(widths[l], in_ch, ksize[l], rng, strides[l]));
            if (l < kLayers - 1) d.bns.push_back(BatchNormParams<T>::make(widths[l]));
            in_ch = widths[l];
        }
        return d;
    }

    Discriminator zeros_like() const {
        Discriminator z;
        z.config = config;
        for (const auto& c : convs) z.convs.push_back(detail::zeros_like(c));
        for (const auto& b : bns) z.bns.push_back(detail::zeros_like(b));
        return z;
    }

    /// Returns one real decision value per batch element, shape [B].
    Tensor<T> forward(const Tensor<T>& x, BatchNormMode mode, DiscriminatorCache<T>* cache = nullptr,
                      bool update_running = true) {
        if (x.rank() != 4 || x.dim(1) != config.in_channels)
            throw std::invalid_argument("discriminator: expected [B," + std::to_string(config.in_channels) +
                                        ",H,W] input, got " + shape_string(x.shape()));
        if (x.dim(2) < 16 || x.dim(3) < 16)
            throw std::invalid_argument("discriminator: input below the 16x16 minimum for the stride-2 pyramid");
        if (cache) {
            cache->inputs.clear();
            cache->bn.assign(static_cast<std::size_t>(kLayers - 1), {});
            cache->relu.assign(static_cast<std::size_t>(kLayers - 1), {});
        }
        Tensor<T> h = x;
        for (int l = 0; l < kLayers; ++l) {
            if (cache) cache->inputs.push_back(h);
            h = conv2d_forward(h, convs[static_cast<std::size_t>(l)]);
            if (l < kLayers - 1) {
                h = batchnorm_forward(h, bns[static_cast<std::size_t>(l)], mode,
                                      cache ? &cache->bn[static_cast<std::size_t>(l)] : nullptr, update_running);
                h = activation_forward(h, Activation::Relu);
                if (cache) cache->relu[static_cast<std::size_t>(l)] = h;
            }
        }
        if (cache) cache->last = h;
        const int B = h.dim(0), hh = h.dim(2), ww = h.dim(3);
        Tensor<T> decision({B});
        const std::size_t plane = static_cast<std::size_t>(hh) * ww;
        for (int b = 0; b < B; ++b) {
            T acc(0);
            const T* p = h.data() + static_cast<std::size_t>(b) * plane;
            for (std::size_t i = 0; i < plane; ++i) acc += p[i];
            decision[static_cast<std::size_t>(b)] = acc / static_cast<T>(plane);
        }
        return decision;
    }

    /// grad_decision has shape [B]; accumulates parameter gradients into
    /// `grads` and returns the gradient with respect to the input image.
    Tensor<T> backward(const DiscriminatorCache<T>& cache, const Tensor<T>& grad_decision,
                       Discriminator& grads) const {
        const Tensor<T>& last = cache.last;
        const int B = last.dim(0), hh = last.dim(2), ww = last.dim(3);
        if (grad_decision.shape() != std::vector<int>{B})
            throw std::invalid_argument("discriminator backward: grad must be [B]");
        Tensor<T> g(last.shape());
        const std::size_t plane = static_cast<std::size_t>(hh) * ww;
        for (int b = 0; b < B; ++b) {
            const T v = grad_decision[static_cast<std::size_t>(b)] / static_cast<T>(plane);
            T* p = g.data() + static_cast<std::size_t>(b) * plane;
            for (std::size_t i = 0; i < plane; ++i) p[i] = v;
        }
        for (int l = kLayers - 1; l >= 0; --l) {
            if (l < kLayers - 1) {
                g = activation_backward(cache.relu[static_cast<std::size_t>(l)], Activation::Relu, g);
                auto bng = batchnorm_backward(bns[static_cast<std::size_t>(l)],
                                              cache.bn[static_cast<std::size_t>(l)], g);
                grads.bns[static_cast<std::size_t>(l)].scale += bng.scale;
                grads.bns[static_cast<std::size_t>(l)].shift += bng.shift;
                g = std::move(bng.input);
            }
            auto cg = conv2d_backward(cache.inputs[static_cast<std::size_t>(l)],
                                      convs[static_cast<std::size_t>(l)], g);
            grads.convs[static_cast<std::size_t>(l)].kernels += cg.kernels;
            grads.convs[static_cast<std::size_t>(l)].bias += cg.bias;
            g = std::move(cg.input);
        }
        return g;
    }

    std::vector<ParamRef<T>> trainable_params(const std::string& prefix = "") {
        std::vector<ParamRef<T>> out;
        for (int l = 0; l < kLayers; ++l) {
            const std::string n = prefix + "conv" + std::to_string(l);
            out.push_back({n + ".kernels", &convs[static_cast<std::size_t>(l)].kernels});
            out.push_back({n + ".bias", &convs[static_cast<std::size_t>(l)].bias});
            if (l < kLayers - 1) {
                out.push_back({n + ".bn.scale", &bns[static_cast<std::size_t>(l)].scale});
                out.push_back({n + ".bn.shift", &bns[static_cast<std::size_t>(l)].shift});
            }
        }
        return out;
    }

    std::vector<ParamRef<T>> state_tensors(const std::string& prefix = "") {
        auto out = trainable_params(prefix);
        for (int l = 0; l < kLayers - 1; ++l) {
            const std::string n = prefix + "conv" + std::to_string(l);
            out.push_back({n + ".bn.running_mean", &bns[static_cast<std::size_t>(l)].running_mean});
            out.push_back({n + ".bn.running_var", &bns[static_cast<std::size_t>(l)].running_var});
        }
        return out;
    }
};

/// Differentiable magnitude image sqrt(re^2 + im^2): [B,2,H,W] -> [B,1,H,W].
template <typename T>
Tensor<T> magnitude_forward(const Tensor<T>& x) {
    if (x.rank() != 4 || x.dim(1) != 2)
        throw std::invalid_argument("magnitude: expected [B,2,H,W], got " + shape_string(x.shape()));
    const int B = x.dim(0), H = x.dim(2), W = x.dim(3);
    Tensor<T> m({B, 1, H, W});
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    for (int b = 0; b < B; ++b) {
        const T* re = x.data() + static_cast<std::size_t>(b) * 2 * plane;
        const T* im = re + plane;
        T* mp = m.data() + static_cast<std::size_t>(b) * plane;
        for (std::size_t i = 0; i < plane; ++i) mp[i] = std::sqrt(re[i] * re[i] + im[i] * im[i]);
    }
    return m;
}

template <typename T>
Tensor<T> magnitude_backward(const Tensor<T>& x, const Tensor<T>& mag, const Tensor<T>& grad_out) {
    const int B = x.dim(0), H = x.dim(2), W = x.dim(3);
    Tensor<T> g(x.shape());
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    for (int b = 0; b < B; ++b) {
        const T* re = x.data() + static_cast<std::size_t>(b) * 2 * plane;
        const T* im = re + plane;
        const T* mp = mag.data() + static_cast<std::size_t>(b) * plane;
        const T* gp = grad_out.data() + static_cast<std::size_t>(b) * plane;
        T* gre = g.data() + static_cast<std::size_t>(b) * 2 * plane;
        T* gim = gre + plane;
        for (std::size_t i = 0; i < plane; ++i) {
            const T denom = std::max(mp[i], T(1e-12));
            gre[i] = gp[i] * re[i] / denom;
            gim[i] = gp[i] * im[i] / denom;
        }
    }
    return g;
}

}  // namespace proxcs
