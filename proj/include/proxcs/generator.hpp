#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxcs/layers.hpp"
#include "proxcs/rng.hpp"
#include "proxcs/tensor.hpp"

namespace proxcs {

struct GeneratorConfig {
    int residual_blocks = 1;
    int feature_maps = 16;  // 128 in the full-size configuration
    int in_channels = 2;
    int out_channels = 2;
};

/// Reference to a named parameter tensor, used to pair parameters with
/// gradients and optimizer state, and to serialize checkpoints.
template <typename T>
struct ParamRef {
    std::string name;
    Tensor<T>* value;
};

namespace detail {

template <typename T>
ConvLayerParams<T> make_conv(int out_ch, int in_ch, int k, Rng& rng, int stride = 1,
                             Padding padding = Padding::SameZero) {
    ConvLayerParams<T> p;
    p.kernels = Tensor<T>({out_ch, in_ch, k, k});
    const T stddev = std::sqrt(T(2) / static_cast<T>(in_ch * k * k));
    p.kernels.fill_normal(rng, stddev);
    p.bias = Tensor<T>({out_ch});
    p.stride = stride;
    p.padding = padding;
    return p;
}

template <typename T>
ConvLayerParams<T> zeros_like(const ConvLayerParams<T>& p) {
    ConvLayerParams<T> z;
    z.kernels = Tensor<T>(p.kernels.shape());
    if (!p.bias.empty()) z.bias = Tensor<T>(p.bias.shape());
    z.stride = p.stride;
    z.padding = p.padding;
    return z;
}

template <typename T>
BatchNormParams<T> zeros_like(const BatchNormParams<T>& p) {
    BatchNormParams<T> z;
    z.scale = Tensor<T>(p.scale.shape());
    z.shift = Tensor<T>(p.shift.shape());
    z.running_mean = Tensor<T>(p.running_mean.shape());
    z.running_var = Tensor<T>(p.running_var.shape());
    z.epsilon = p.epsilon;
    z.momentum = p.momentum;
    return z;
}

}  // namespace detail

template <typename T>
struct GeneratorCache {
    Tensor<T> input;
    Tensor<T> stem_out;  // post-relu
    BatchNormCache<T> stem_bn;
    struct RbCache {
        Tensor<T> in;
        Tensor<T> relu1;
        BatchNormCache<T> bn1, bn2;
        Tensor<T> out;  // post-skip, post-relu
    };
    std::vector<RbCache> blocks;
    Tensor<T> head1_relu, head2_relu;
    Tensor<T> output;  // sigmoid output
};

/// Proximal generator: a 3x3 stem conv lifting the image channels to the
/// feature width, a chain of residual blocks (conv3x3-BN-ReLU-conv3x3-BN with
/// an identity skip and ReLU after the addition), then three 1x1 convs with
/// widths F -> F/2 -> out_channels (ReLU, ReLU, sigmoid). The sigmoid head
/// keeps every output pixel in (0,1).
template <typename T>
struct Generator {
    GeneratorConfig config;
    ConvLayerParams<T> stem;
    BatchNormParams<T> stem_bn;
    struct ResBlock {
        ConvLayerParams<T> conv1;
        BatchNormParams<T> bn1;
        ConvLayerParams<T> conv2;
        BatchNormParams<T> bn2;
    };
    std::vector<ResBlock> blocks;
    ConvLayerParams<T> head1, head2, head3;

    static Generator make(const GeneratorConfig& cfg, Rng& rng) {
        if (cfg.residual_blocks < 1) throw std::invalid_argument("generator: needs at least one residual block");
        if (cfg.feature_maps < 2) throw std::invalid_argument("generator: feature_maps must be >= 2");
        Generator g;
        g.config = cfg;
        const int F = cfg.feature_maps;
        g.stem = detail::make_conv<T>(F, cfg.in_channels, 3, rng);
        g.stem_bn = BatchNormParams<T>::make(F);
        g.blocks.resize(static_cast<std::size_t>(cfg.residual_blocks));
        for (auto& rb : g.blocks) {
            rb.conv1 = detail::make_conv<T>(F, F, 3, rng);
            rb.bn1 = BatchNormParams<T>::make(F);
            rb.conv2 = detail::make_conv<T>(F, F, 3, rng);
            rb.bn2 = BatchNormParams<T>::make(F);
        }
        g.head1 = detail::make_conv<T>(F, F, 1, rng);
        g.head2 = detail::make_conv<T>(F / 2, F, 1, rng);
        g.head3 = detail::make_conv<T>(cfg.out_channels, F / 2, 1, rng);
        return g;
    }

    /// Zero-valued twin used as a gradient accumulator; trainable_params()
    /// enumerates both in the same order.
    Generator zeros_like() const {
        Generator z;
        z.config = config;
        z.stem = detail::zeros_like(stem);
        z.stem_bn = detail::zeros_like(stem_bn);
        z.blocks.resize(blocks.size());
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            z.blocks[i].conv1 = detail::zeros_like(blocks[i].conv1);
            z.blocks[i].bn1 = detail::zeros_like(blocks[i].bn1);
            z.blocks[i].conv2 = detail::zeros_like(blocks[i].conv2);
            z.blocks[i].bn2 = detail::zeros_like(blocks[i].bn2);
        }
        z.head1 = detail::zeros_like(head1);
        z.head2 = detail::zeros_like(head2);
        z.head3 = detail::zeros_like(head3);
        return z;
    }

    Tensor<T> forward(const Tensor<T>& x, BatchNormMode mode, GeneratorCache<T>* cache = nullptr,
                      bool update_running = true) {
        if (x.rank() != 4 || x.dim(1) != config.in_channels)
            throw std::invalid_argument("generator: expected [B," + std::to_string(config.in_channels) +
                                        ",H,W] input, got " + shape_string(x.shape()));
        if (cache) cache->input = x;
        Tensor<T> h = conv2d_forward(x, stem);
        h = batchnorm_forward(h, stem_bn, mode, cache ? &cache->stem_bn : nullptr, update_running);
        h = activation_forward(h, Activation::Relu);
        if (cache) {
            cache->stem_out = h;
            cache->blocks.resize(blocks.size());
        }
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            auto& rb = blocks[i];
            auto* bc = cache ? &cache->blocks[i] : nullptr;
            if (bc) bc->in = h;
            Tensor<T> r = conv2d_forward(h, rb.conv1);
            r = batchnorm_forward(r, rb.bn1, mode, bc ? &bc->bn1 : nullptr, update_running);
            r = activation_forward(r, Activation::Relu);
            if (bc) bc->relu1 = r;
            r = conv2d_forward(r, rb.conv2);
            r = batchnorm_forward(r, rb.bn2, mode, bc ? &bc->bn2 : nullptr, update_running);
            r += h;
            h = activation_forward(r, Activation::Relu);
            if (bc) bc->out = h;
        }
        Tensor<T> g = conv2d_forward(h, head1);
        g = activation_forward(g, Activation::Relu);
        if (cache) cache->head1_relu = g;
        g = conv2d_forward(g, head2);
        g = activation_forward(g, Activation::Relu);
        if (cache) cache->head2_relu = g;
        g = conv2d_forward(g, head3);
        g = activation_forward(g, Activation::Sigmoid);
        if (cache) cache->output = g;
        return g;
    }

    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// with respect to the input. Requires the cache of the matching forward.
    Tensor<T> backward(const GeneratorCache<T>& cache, const Tensor<T>& grad_out, Generator& grads) const {
        if (cache.output.shape() != grad_out.shape())
            throw std::invalid_argument("generator backward: stale cache or wrong grad shape");
        Tensor<T> g = activation_backward(cache.output, Activation::Sigmoid, grad_out);

        const Tensor<T>& last = blocks.empty() ? cache.stem_out : cache.blocks.back().out;
        {
            auto cg = conv2d_backward(cache.head2_relu, head3, g);
            grads.head3.kernels += cg.kernels;
            grads.head3.bias += cg.bias;
            g = activation_backward(cache.head2_relu, Activation::Relu, cg.input);
        }
        {
            auto cg = conv2d_backward(cache.head1_relu, head2, g);
            grads.head2.kernels += cg.kernels;
            grads.head2.bias += cg.bias;
            g = activation_backward(cache.head1_relu, Activation::Relu, cg.input);
        }
        {
            auto cg = conv2d_backward(last, head1, g);
            grads.head1.kernels += cg.kernels;
            grads.head1.bias += cg.bias;
            g = cg.input;
        }
        for (int i = static_cast<int>(blocks.size()) - 1; i >= 0; --i) {
            const auto& rb = blocks[static_cast<std::size_t>(i)];
            auto& rbg = grads.blocks[static_cast<std::size_t>(i)];
            const auto& bc = cache.blocks[static_cast<std::size_t>(i)];
            g = activation_backward(bc.out, Activation::Relu, g);
            Tensor<T> skip = g;  // identity branch
            auto bn2g = batchnorm_backward(rb.bn2, bc.bn2, g);
            rbg.bn2.scale += bn2g.scale;
            rbg.bn2.shift += bn2g.shift;
            auto c2g = conv2d_backward(bc.relu1, rb.conv2, bn2g.input);
            rbg.conv2.kernels += c2g.kernels;
            rbg.conv2.bias += c2g.bias;
            Tensor<T> r = activation_backward(bc.relu1, Activation::Relu, c2g.input);
            auto bn1g = batchnorm_backward(rb.bn1, bc.bn1, r);
            rbg.bn1.scale += bn1g.scale;
            rbg.bn1.shift += bn1g.shift;
            auto c1g = conv2d_backward(bc.in, rb.conv1, bn1g.input);
            rbg.conv1.kernels += c1g.kernels;
            rbg.conv1.bias += c1g.bias;
            g = c1g.input;
            g += skip;
        }
        g = activation_backward(cache.stem_out, Activation::Relu, g);
        auto sbn = batchnorm_backward(stem_bn, cache.stem_bn, g);
        grads.stem_bn.scale += sbn.scale;
        grads.stem_bn.shift += sbn.shift;
        auto sg = conv2d_backward(cache.input, stem, sbn.input);
        grads.stem.kernels += sg.kernels;
        grads.stem.bias += sg.bias;
        return sg.input;
    }

    std::vector<ParamRef<T>> trainable_params(const std::string& prefix = "") {
        std::vector<ParamRef<T>> out;
        auto add_conv = [&](const std::string& n, ConvLayerParams<T>& c) {
            out.push_back({prefix + n + ".kernels", &c.kernels});
            out.push_back({prefix + n + ".bias", &c.bias});
        };
        auto add_bn = [&](const std::string& n, BatchNormParams<T>& b) {
            out.push_back({prefix + n + ".scale", &b.scale});
            out.push_back({prefix + n + ".shift", &b.shift});
        };
        add_conv("stem", stem);
        add_bn("stem_bn", stem_bn);
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            const std::string b = "rb" + std::to_string(i);
            add_conv(b + ".conv1", blocks[i].conv1);
            add_bn(b + ".bn1", blocks[i].bn1);
            add_conv(b + ".conv2", blocks[i].conv2);
            add_bn(b + ".bn2", blocks[i].bn2);
        }
        add_conv("head1", head1);
        add_conv("head2", head2);
        add_conv("head3", head3);
        return out;
    }

    /// trainable parameters plus batch-norm running statistics; everything a
    /// checkpoint must capture to reproduce eval-mode behavior.
    std::vector<ParamRef<T>> state_tensors(const std::string& prefix = "") {
        auto out = trainable_params(prefix);
        auto add_bn_state = [&](const std::string& n, BatchNormParams<T>& b) {
            out.push_back({prefix + n + ".running_mean", &b.running_mean});
            out.push_back({prefix + n + ".running_var", &b.running_var});
        };
        add_bn_state("stem_bn", stem_bn);
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            const std::string b = "rb" + std::to_string(i);
            add_bn_state(b + ".bn1", blocks[i].bn1);
            add_bn_state(b + ".bn2", blocks[i].bn2);
        }
        return out;
    }

    std::size_t parameter_count() {
        std::size_t n = 0;
        for (const auto& p : trainable_params()) n += p.value->size();
        return n;
    }
};

}  // namespace proxcs
