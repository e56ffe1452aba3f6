#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "proxcs/adam.hpp"
#include "proxcs/discriminator.hpp"
#include "proxcs/losses.hpp"
#include "proxcs/normalization.hpp"
#include "proxcs/unrolled.hpp"

namespace proxcs {

enum class TaskKind { Mri, Superres };

template <typename T>
struct TrainSample {
    Tensor<T> y;        // measurements, operator output shape
    Tensor<T> x_tilde;  // initial image (zero-filled / approximate deconvolution)
    Tensor<T> x_truth;  // ground truth, operator input shape
};

template <typename T>
struct TrainDataset {
    std::vector<TrainSample<T>> samples;
};

template <typename T>
struct TrainConfig {
    int batch_size = 2;
    T learning_rate = T(1e-4);
    T beta1 = T(0.9);
    int epochs = 1;
    T clip_threshold = T(0);  // <= 0 disables clipping
    std::uint64_t seed = 0;
    long checkpoint_interval = 0;  // batches; 0 disables
};

struct TrainLogRow {
    long batch = 0;
    double fidelity_loss = 0.0;
    double pixel_loss = 0.0;
    double gan_g_loss = 0.0;
    double gan_d_loss = 0.0;
    double lambda_eff = 0.0;
    double grad_norm = 0.0;
};

inline void write_training_log(const std::vector<TrainLogRow>& rows, std::ostream& os) {
    os << "batch,fidelity_loss,pixel_loss,gan_g_loss,gan_d_loss,lambda_eff,grad_norm\n";
    for (const auto& r : rows) {
        char line[192];
        std::snprintf(line, sizeof(line), "%ld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.batch,
                      r.fidelity_loss, r.pixel_loss, r.gan_g_loss, r.gan_d_loss, r.lambda_eff,
                      r.grad_norm);
        os << line;
    }
}

namespace detail {

template <typename T>
Tensor<T> stack_batch(const std::vector<const Tensor<T>*>& items) {
    std::vector<int> shape = {static_cast<int>(items.size())};
    shape.insert(shape.end(), items[0]->shape().begin(), items[0]->shape().end());
    Tensor<T> out(shape);
    const std::size_t n = items[0]->size();
    for (std::size_t b = 0; b < items.size(); ++b)
        std::copy(items[b]->data(), items[b]->data() + n, out.data() + b * n);
    return out;
}

/// Discriminator input for a batched model-domain image: the physical-domain
/// magnitude for MRI, the image itself for RGB tasks.
template <typename T>
struct DInput {
    Tensor<T> value;
    Tensor<T> phys;  // cached for the magnitude backward (MRI only)
    Tensor<T> mag;
};

template <typename T>
DInput<T> discriminator_input(const Tensor<T>& x_net, TaskKind task, const ImageNormalization<T>& norm) {
    DInput<T> r;
    if (task == TaskKind::Mri) {
        r.phys = norm.is_identity() ? x_net : [&] {
            Tensor<T> p(x_net.shape());
            const T inv = T(1) / norm.scale;
            for (std::size_t i = 0; i < x_net.size(); ++i) p[i] = (x_net[i] - norm.offset) * inv;
            return p;
        }();
        r.mag = magnitude_forward(r.phys);
        r.value = r.mag;
    } else {
        r.value = x_net;
    }
    return r;
}

template <typename T>
Tensor<T> discriminator_input_backward(const DInput<T>& din, const Tensor<T>& grad_value,
                                       TaskKind task, const ImageNormalization<T>& norm) {
    if (task != TaskKind::Mri) return grad_value;
    Tensor<T> g = magnitude_backward(din.phys, din.mag, grad_value);
    if (!norm.is_identity()) g *= T(1) / norm.scale;
    return g;
}

}  // namespace detail

/// One generator-cost evaluation on a batch: forward through the unrolled
/// model, assemble all loss terms, and (when grads is non-null) accumulate
/// the full parameter gradient. This is the exact computation the training
/// loop performs, shared with the finite-difference verification suite.
template <typename T>
GeneratorLossTerms<T> generator_step(UnrolledModel<T>& model,
                                     std::type_identity_t<Discriminator<T>>* disc, const Tensor<T>& y,
                                     const Tensor<T>& x_tilde, const Tensor<T>& x_truth,
                                     const LossWeights<T>& weights, T lambda_eff, TaskKind task,
                                     const ImageNormalization<T>& norm, UnrolledGrads<T>* grads,
                                     bool update_running = true) {
    const auto& op = *model.op;
    const int B = x_truth.dim(0);
    const std::size_t img_n = x_truth.size() / static_cast<std::size_t>(B);

    UnrolledCache<T> cache;
    Tensor<T> x_hat = unrolled_forward(model, y, x_tilde, BatchNormMode::Train, &cache, update_running);

    Tensor<T> d_of_xhat;
    detail::DInput<T> gan_in;
    DiscriminatorCache<T> gan_cache;
    if (disc && lambda_eff > T(0)) {
        gan_in = detail::discriminator_input(x_hat, task, norm);
        d_of_xhat = disc->forward(gan_in.value, BatchNormMode::Train, &gan_cache,
                                  /*update_running=*/false);
    }
    // identical to generator_loss, with the fidelity term taken from the
    // residuals the forward pass already computed
    GeneratorLossTerms<T> terms;
    for (const T rsq : cache.residual_sq) terms.fidelity += rsq;
    terms.fidelity /= static_cast<T>(B);
    if (!d_of_xhat.empty()) {
        T acc(0);
        for (std::size_t i = 0; i < d_of_xhat.size(); ++i) {
            const T a = T(1) - d_of_xhat[i];
            acc += a * a;
        }
        terms.gan = lambda_eff * acc / static_cast<T>(B);
    }
    {
        Tensor<T> err(op.input_shape());
        for (int b = 0; b < B; ++b) {
            for (std::size_t i = 0; i < img_n; ++i)
                err[i] = x_truth[b * img_n + i] - x_hat[b * img_n + i];
            terms.pixel += mixed_norm(err, weights.gamma);
        }
        terms.pixel = weights.eta * terms.pixel / static_cast<T>(B);
    }
    terms.total = terms.fidelity + terms.gan + terms.pixel;
    if (!grads) return terms;

    // gradient at x_hat: pixel term, plus the GAN term through D
    Tensor<T> grad_x_hat(x_hat.shape());
    Tensor<T> err(op.input_shape());
    for (int b = 0; b < B; ++b) {
        for (std::size_t i = 0; i < img_n; ++i)
            err[i] = x_truth[b * img_n + i] - x_hat[b * img_n + i];
        Tensor<T> ge = mixed_norm_grad(err, weights.gamma);
        const T s = -weights.eta / static_cast<T>(B);
        for (std::size_t i = 0; i < img_n; ++i) grad_x_hat[b * img_n + i] = s * ge[i];
    }
    if (disc && !d_of_xhat.empty()) {
        Tensor<T> gd({B});
        for (int b = 0; b < B; ++b)
            gd[static_cast<std::size_t>(b)] =
                -T(2) * lambda_eff * (T(1) - d_of_xhat[static_cast<std::size_t>(b)]) / static_cast<T>(B);
        Discriminator<T> scratch = disc->zeros_like();
        Tensor<T> g_val = disc->backward(gan_cache, gd, scratch);
        grad_x_hat += detail::discriminator_input_backward(gan_in, g_val, task, norm);
    }

    // per-copy fidelity gradients reuse the cached adjoint residuals
    std::vector<Tensor<T>> grad_direct(static_cast<std::size_t>(model.copies));
    for (int k = 0; k < model.copies; ++k) {
        grad_direct[static_cast<std::size_t>(k)] = cache.adjoint_residual[static_cast<std::size_t>(k)];
        grad_direct[static_cast<std::size_t>(k)] *= -T(2) / static_cast<T>(B);
    }
    unrolled_backward(model, cache, grad_x_hat, &grad_direct, *grads);
    return terms;
}

/// Alternating optimization of the discriminator and generator costs, one D
/// step then one G step per mini-batch. When weights.lambda == 0 the
/// discriminator is never evaluated (it may be null). Deterministic given
/// config.seed. A non-finite loss aborts with the offending batch index.
template <typename T>
std::vector<TrainLogRow> train(UnrolledModel<T>& model, std::type_identity_t<Discriminator<T>>* disc,
                               const TrainDataset<T>& dataset, const TrainConfig<T>& config,
                               const LossWeights<T>& weights, TaskKind task,
                               const ImageNormalization<T>& norm,
                               const std::function<void(long)>& checkpoint_fn = {}) {
    const long n = static_cast<long>(dataset.samples.size());
    if (n < config.batch_size || config.batch_size < 1)
        throw std::invalid_argument("train: dataset smaller than one batch");
    const bool use_gan = weights.lambda > T(0) && disc != nullptr;
    if (weights.lambda > T(0) && disc == nullptr)
        throw std::invalid_argument("train: lambda > 0 requires a discriminator");

    // parameter/grad/optimizer plumbing
    std::vector<ParamRef<T>> g_params;
    UnrolledGrads<T> g_grads = UnrolledGrads<T>::zeros_like(model);
    std::vector<ParamRef<T>> g_grad_refs;
    for (std::size_t s = 0; s < model.generators.size(); ++s) {
        const std::string prefix = "g" + std::to_string(s) + ".";
        for (auto& p : model.generators[s].trainable_params(prefix)) g_params.push_back(p);
        for (auto& p : g_grads.gen[s].trainable_params(prefix)) g_grad_refs.push_back(p);
    }
    g_params.push_back({"alpha_raw", &model.alpha_raw});
    g_grad_refs.push_back({"alpha_raw", &g_grads.alpha_raw});
    std::vector<AdamState<T>> g_opt;
    for (auto& p : g_params)
        g_opt.push_back(AdamState<T>::make(p.value->shape(), config.learning_rate, config.beta1));

    std::vector<ParamRef<T>> d_params, d_grad_refs;
    Discriminator<T> d_grads;
    std::vector<AdamState<T>> d_opt;
    if (use_gan) {
        d_grads = disc->zeros_like();
        d_params = disc->trainable_params();
        d_grad_refs = d_grads.trainable_params();
        for (auto& p : d_params)
            d_opt.push_back(AdamState<T>::make(p.value->shape(), config.learning_rate, config.beta1));
    }

    const auto& op = *model.op;
    const long batches_per_epoch = n / config.batch_size;
    std::vector<TrainLogRow> log;
    Rng shuffle_rng(config.seed, 0x73687566ull);  // "shuf"
    std::vector<long> order(static_cast<std::size_t>(n));
    long global_batch = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (long i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        for (long i = n - 1; i > 0; --i)
            std::swap(order[static_cast<std::size_t>(i)],
                      order[static_cast<std::size_t>(shuffle_rng.uniform_int(static_cast<int>(i + 1)))]);

        for (long bi = 0; bi < batches_per_epoch; ++bi, ++global_batch) {
            std::vector<const Tensor<T>*> ys, xts, trs;
            for (int j = 0; j < config.batch_size; ++j) {
                const auto& s = dataset.samples[static_cast<std::size_t>(
                    order[static_cast<std::size_t>(bi * config.batch_size + j)])];
                ys.push_back(&s.y);
                xts.push_back(&s.x_tilde);
                trs.push_back(&s.x_truth);
            }
            Tensor<T> y = detail::stack_batch(ys);
            Tensor<T> x_tilde = detail::stack_batch(xts);
            Tensor<T> x_truth = detail::stack_batch(trs);
            const int B = config.batch_size;

            const T lambda_eff = gan_warmup(global_batch, weights);
            TrainLogRow row;
            row.batch = global_batch;
            row.lambda_eff = static_cast<double>(lambda_eff);

            // --- discriminator step ---
            if (use_gan) {
                Tensor<T> x_fake = unrolled_forward(model, y, x_tilde, BatchNormMode::Train, nullptr,
                                                    /*update_running=*/false);
                auto real_in = detail::discriminator_input(x_truth, task, norm);
                auto fake_in = detail::discriminator_input(x_fake, task, norm);
                DiscriminatorCache<T> real_cache, fake_cache;
                Tensor<T> d_real = disc->forward(real_in.value, BatchNormMode::Train, &real_cache);
                Tensor<T> d_fake = disc->forward(fake_in.value, BatchNormMode::Train, &fake_cache);
                const T d_loss = discriminator_loss(d_real, d_fake);
                row.gan_d_loss = static_cast<double>(d_loss);
                if (!std::isfinite(static_cast<double>(d_loss)))
                    throw std::runtime_error("train: non-finite discriminator loss at batch " +
                                             std::to_string(global_batch));
                for (auto& p : d_grad_refs) p.value->zero();
                Tensor<T> gr({B}), gf({B});
                for (int b = 0; b < B; ++b) {
                    gr[static_cast<std::size_t>(b)] = T(2) * (d_real[static_cast<std::size_t>(b)] - T(1)) / static_cast<T>(B);
                    gf[static_cast<std::size_t>(b)] = T(2) * d_fake[static_cast<std::size_t>(b)] / static_cast<T>(B);
                }
                disc->backward(real_cache, gr, d_grads);
                disc->backward(fake_cache, gf, d_grads);
                try {
                    for (std::size_t k = 0; k < d_params.size(); ++k)
                        adam_step(*d_params[k].value, *d_grad_refs[k].value, d_opt[k]);
                } catch (const std::runtime_error& e) {
                    throw std::runtime_error(std::string(e.what()) + " (discriminator, batch " +
                                             std::to_string(global_batch) + ")");
                }
            }

            // --- generator step ---
            for (auto& p : g_grad_refs) p.value->zero();
            const auto terms = generator_step(model, use_gan ? disc : nullptr, y, x_tilde, x_truth,
                                              weights, lambda_eff, task, norm, &g_grads);
            row.fidelity_loss = static_cast<double>(terms.fidelity);
            row.pixel_loss = static_cast<double>(terms.pixel);
            row.gan_g_loss = static_cast<double>(terms.gan);
            if (!std::isfinite(static_cast<double>(terms.total)))
                throw std::runtime_error("train: non-finite generator loss at batch " +
                                         std::to_string(global_batch));

            std::vector<Tensor<T>*> grad_ptrs;
            for (auto& p : g_grad_refs) grad_ptrs.push_back(p.value);
            if (config.clip_threshold > T(0))
                row.grad_norm = static_cast<double>(clip_gradients(grad_ptrs, config.clip_threshold));
            else
                row.grad_norm = static_cast<double>(gradient_norm(grad_ptrs));

            try {
                for (std::size_t k = 0; k < g_params.size(); ++k)
                    adam_step(*g_params[k].value, *g_grad_refs[k].value, g_opt[k]);
            } catch (const std::runtime_error& e) {
                throw std::runtime_error(std::string(e.what()) + " (generator, batch " +
                                         std::to_string(global_batch) + ")");
            }

            log.push_back(row);
            if (config.checkpoint_interval > 0 && checkpoint_fn &&
                (global_batch + 1) % config.checkpoint_interval == 0)
                checkpoint_fn(global_batch + 1);
        }
    }
    return log;
}

}  // namespace proxcs
