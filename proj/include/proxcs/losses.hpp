#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "proxcs/operators.hpp"
#include "proxcs/tensor.hpp"

namespace proxcs {

template <typename T>
struct LossWeights {
    T lambda = T(0);  // GAN weight
    T eta = T(1);     // pixel-cost weight
    T gamma = T(0);   // l1 share of the mixed pixel norm
    long warmup_batches = 1000;
};

/// gamma * ||x||_1 + (1-gamma) * ||x||_2 (the l2 factor is the plain norm,
/// not its square).
template <typename T>
T mixed_norm(const Tensor<T>& x, T gamma) {
    if (gamma < T(0) || gamma > T(1)) throw std::invalid_argument("mixed_norm: gamma must be in [0,1]");
    return gamma * x.norm1() + (T(1) - gamma) * x.norm2();
}

template <typename T>
Tensor<T> mixed_norm_grad(const Tensor<T>& x, T gamma) {
    Tensor<T> g(x.shape());
    const T n2 = x.norm2();
    const T inv = n2 > T(0) ? (T(1) - gamma) / n2 : T(0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const T s = x[i] > T(0) ? T(1) : (x[i] < T(0) ? T(-1) : T(0));
        g[i] = gamma * s + inv * x[i];
    }
    return g;
}

/// Mean over the batch of (1 - d_real)^2 + d_fake^2.
template <typename T>
T discriminator_loss(const Tensor<T>& d_real, const Tensor<T>& d_fake) {
    if (d_real.shape() != d_fake.shape())
        throw std::invalid_argument("discriminator_loss: batch shapes differ");
    T acc(0);
    for (std::size_t i = 0; i < d_real.size(); ++i) {
        const T a = T(1) - d_real[i];
        acc += a * a + d_fake[i] * d_fake[i];
    }
    return acc / static_cast<T>(d_real.size());
}

/// Linear GAN warm-up: lambda * min(1, batch_index / warmup_batches).
template <typename T>
T gan_warmup(long batch_index, const LossWeights<T>& weights) {
    if (batch_index < 0) throw std::invalid_argument("gan_warmup: negative batch index");
    if (weights.warmup_batches <= 0) return weights.lambda;
    const T ramp = std::min(T(1), static_cast<T>(batch_index) / static_cast<T>(weights.warmup_batches));
    return weights.lambda * ramp;
}

template <typename T>
struct GeneratorLossTerms {
    T fidelity = T(0);  // sum_k ||y - Phi x_check_k||^2, batch mean
    T gan = T(0);       // lambda_eff (1 - D(x_hat))^2, batch mean
    T pixel = T(0);     // eta * ||x - x_hat||_{gamma;1,2}, batch mean
    T total = T(0);
};

/// Generator cost of the unrolled model. `x_check` holds the K pre-DC copy
/// outputs (batched), `d_of_xhat` the discriminator decisions for x_hat (pass
/// an empty tensor when no GAN term is active). Every term is retrievable.
template <typename T>
GeneratorLossTerms<T> generator_loss(const LinearOperator<T>& op, const Tensor<T>& y,
                                     const std::vector<Tensor<T>>& x_check, const Tensor<T>& x_hat,
                                     const Tensor<T>& x_truth, const Tensor<T>& d_of_xhat,
                                     T lambda_eff, const LossWeights<T>& weights) {
    const int B = x_hat.dim(0);
    const std::size_t img_n = x_hat.size() / static_cast<std::size_t>(B);
    const std::size_t meas_n = y.size() / static_cast<std::size_t>(B);
    GeneratorLossTerms<T> terms;

    Tensor<T> img_slice(op.input_shape());
    Tensor<T> meas_slice(op.output_shape());
    for (const auto& xc : x_check) {
        for (int b = 0; b < B; ++b) {
            std::copy(xc.data() + b * img_n, xc.data() + (b + 1) * img_n, img_slice.data());
            std::copy(y.data() + b * meas_n, y.data() + (b + 1) * meas_n, meas_slice.data());
            meas_slice -= op.forward(img_slice);
            terms.fidelity += meas_slice.dot(meas_slice);
        }
    }
    terms.fidelity /= static_cast<T>(B);

    if (!d_of_xhat.empty()) {
        T acc(0);
        for (std::size_t i = 0; i < d_of_xhat.size(); ++i) {
            const T a = T(1) - d_of_xhat[i];
            acc += a * a;
        }
        terms.gan = lambda_eff * acc / static_cast<T>(B);
    }

    Tensor<T> err(op.input_shape());
    for (int b = 0; b < B; ++b) {
        for (std::size_t i = 0; i < img_n; ++i)
            err[i] = x_truth[b * img_n + i] - x_hat[b * img_n + i];
        terms.pixel += mixed_norm(err, weights.gamma);
    }
    terms.pixel = weights.eta * terms.pixel / static_cast<T>(B);

    terms.total = terms.fidelity + terms.gan + terms.pixel;
    return terms;
}

/// Global-norm gradient clipping: if the joint norm exceeds the threshold,
/// every tensor is scaled by threshold/norm. Returns the pre-clip norm.
template <typename T>
T clip_gradients(const std::vector<Tensor<T>*>& grads, T threshold) {
    if (threshold <= T(0)) throw std::invalid_argument("clip_gradients: threshold must be positive");
    T sq(0);
    for (const auto* g : grads)
        for (std::size_t i = 0; i < g->size(); ++i) sq += (*g)[i] * (*g)[i];
    const T norm = std::sqrt(sq);
    if (norm > threshold) {
        const T s = threshold / norm;
        for (auto* g : grads) *g *= s;
    }
    return norm;
}

template <typename T>
T gradient_norm(const std::vector<Tensor<T>*>& grads) {
    T sq(0);
    for (const auto* g : grads)
        for (std::size_t i = 0; i < g->size(); ++i) sq += (*g)[i] * (*g)[i];
    return std::sqrt(sq);
}

}  // namespace proxcs
