#pragma once

#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "proxcs/generator.hpp"
#include "proxcs/operators.hpp"

namespace proxcs {

enum class WeightMode { Shared, Independent };

inline std::string weight_mode_name(WeightMode m) {
    return m == WeightMode::Shared ? "shared" : "independent";
}

inline WeightMode parse_weight_mode(const std::string& s) {
    if (s == "shared") return WeightMode::Shared;
    if (s == "independent") return WeightMode::Independent;
    throw std::invalid_argument("unknown weight mode: " + s);
}

/// K unrolled copies of the proximal generator, each followed by a
/// data-consistency step with its own trainable step size alpha_k = raw_k^2.
/// Shared mode keeps a single parameter set for all copies.
template <typename T>
struct UnrolledModel {
    WeightMode mode = WeightMode::Shared;
    int copies = 1;
    std::vector<Generator<T>> generators;  // 1 (shared) or copies (independent)
    Tensor<T> alpha_raw;                   // [copies]
    const LinearOperator<T>* op = nullptr;

    static UnrolledModel make(const GeneratorConfig& cfg, int copies, WeightMode mode,
                              const LinearOperator<T>& op, std::uint64_t seed) {
        if (copies < 1) throw std::invalid_argument("unrolled model: needs at least one copy");
        UnrolledModel m;
        m.mode = mode;
        m.copies = copies;
        m.op = &op;
        const int sets = mode == WeightMode::Shared ? 1 : copies;
        for (int k = 0; k < sets; ++k) {
            Rng rng(seed, 0x67656e00ull + static_cast<std::uint64_t>(k));  // "gen" + k
            m.generators.push_back(Generator<T>::make(cfg, rng));
        }
        m.alpha_raw = Tensor<T>::full({copies}, T(1));
        return m;
    }

    Generator<T>& generator(int copy) {
        return generators[mode == WeightMode::Shared ? 0 : static_cast<std::size_t>(copy)];
    }
    const Generator<T>& generator(int copy) const {
        return generators[mode == WeightMode::Shared ? 0 : static_cast<std::size_t>(copy)];
    }
    T alpha(int copy) const {
        const T r = alpha_raw[static_cast<std::size_t>(copy)];
        return r * r;
    }

    std::size_t parameter_count() {
        std::size_t n = alpha_raw.size();
        for (auto& g : generators) n += g.parameter_count();
        return n;
    }
};

template <typename T>
struct UnrolledCache {
    std::vector<GeneratorCache<T>> gen;       // per copy
    std::vector<Tensor<T>> x_check;           // generator outputs, pre-DC
    std::vector<Tensor<T>> adjoint_residual;  // Phi^H(y - Phi x_check_k), batched
    std::vector<T> residual_sq;               // sum_b ||y_b - Phi x_check_kb||^2 per copy
    Tensor<T> x_hat;                          // final post-DC image
};

/// Runs the unrolled recursion x_check_k = G_k(x_{k-1}),
/// x_k = x_check_k + alpha_k Phi^H(y - Phi x_check_k), starting at x_tilde.
/// y and x_tilde are batched ([B]+operator shapes).
template <typename T>
Tensor<T> unrolled_forward(UnrolledModel<T>& model, const Tensor<T>& y, const Tensor<T>& x_tilde,
                           BatchNormMode bn_mode, std::type_identity_t<UnrolledCache<T>>* cache = nullptr,
                           bool update_running = true) {
    if (model.copies < 1) throw std::invalid_argument("unrolled_forward: model has no copies");
    const auto& op = *model.op;
    const int B = x_tilde.dim(0);
    const std::size_t img_n = x_tilde.size() / static_cast<std::size_t>(B);
    const std::size_t meas_n = y.size() / static_cast<std::size_t>(B);

    if (cache) {
        cache->gen.assign(static_cast<std::size_t>(model.copies), {});
        cache->x_check.assign(static_cast<std::size_t>(model.copies), {});
        cache->adjoint_residual.assign(static_cast<std::size_t>(model.copies), {});
        cache->residual_sq.assign(static_cast<std::size_t>(model.copies), T(0));
    }

    Tensor<T> x = x_tilde;
    Tensor<T> img_slice(op.input_shape());
    Tensor<T> meas_slice(op.output_shape());
    for (int k = 0; k < model.copies; ++k) {
        Tensor<T> x_check = model.generator(k).forward(x, bn_mode, cache ? &cache->gen[k] : nullptr,
                                                       update_running);
        // adjoint residual a = Phi^H(y - Phi x_check) per batch element
        Tensor<T> adj(x.shape());
        for (int b = 0; b < B; ++b) {
            std::copy(x_check.data() + b * img_n, x_check.data() + (b + 1) * img_n, img_slice.data());
            Tensor<T> r(op.output_shape());
            std::copy(y.data() + b * meas_n, y.data() + (b + 1) * meas_n, r.data());
            r -= op.forward(img_slice);
            if (cache) cache->residual_sq[static_cast<std::size_t>(k)] += r.dot(r);
            Tensor<T> a = op.adjoint(r);
            std::copy(a.data(), a.data() + img_n, adj.data() + b * img_n);
        }
        x = x_check;
        x.axpy(model.alpha(k), adj);
        if (cache) {
            cache->x_check[static_cast<std::size_t>(k)] = std::move(x_check);
            cache->adjoint_residual[static_cast<std::size_t>(k)] = std::move(adj);
        }
    }
    if (cache) cache->x_hat = x;
    return x;
}

template <typename T>
struct UnrolledGrads {
    std::vector<Generator<T>> gen;  // one per parameter set
    Tensor<T> alpha_raw;            // [copies]

    static UnrolledGrads zeros_like(const UnrolledModel<T>& model) {
        UnrolledGrads g;
        for (const auto& gen : model.generators) g.gen.push_back(gen.zeros_like());
        g.alpha_raw = Tensor<T>({model.copies});
        return g;
    }

    Generator<T>& generator_grads(const UnrolledModel<T>& model, int copy) {
        return gen[model.mode == WeightMode::Shared ? 0 : static_cast<std::size_t>(copy)];
    }
};

/// Back-propagates grad_x_hat (gradient at the final image) plus optional
/// direct per-copy gradients at the generator outputs (used by the per-copy
/// data-fidelity loss term). In shared mode the per-copy contributions
/// accumulate into the single parameter set. Returns the gradient at x_tilde.
template <typename T>
Tensor<T> unrolled_backward(const UnrolledModel<T>& model, const UnrolledCache<T>& cache,
                            const Tensor<T>& grad_x_hat,
                            const std::vector<std::type_identity_t<Tensor<T>>>* grad_x_check_direct,
                            UnrolledGrads<T>& grads) {
    if (cache.gen.size() != static_cast<std::size_t>(model.copies))
        throw std::invalid_argument("unrolled_backward: stale cache");
    const auto& op = *model.op;
    const int B = grad_x_hat.dim(0);
    const std::size_t img_n = grad_x_hat.size() / static_cast<std::size_t>(B);

    Tensor<T> g = grad_x_hat;
    Tensor<T> img_slice(op.input_shape());
    for (int k = model.copies - 1; k >= 0; --k) {
        const auto& adj = cache.adjoint_residual[static_cast<std::size_t>(k)];
        // d x_k / d alpha = adjoint residual
        const T raw = model.alpha_raw[static_cast<std::size_t>(k)];
        grads.alpha_raw[static_cast<std::size_t>(k)] += T(2) * raw * adj.dot(g);
        // d x_k / d x_check = I - alpha Phi^H Phi (self-adjoint)
        Tensor<T> g_check = g;
        const T alpha = model.alpha(k);
        if (alpha != T(0)) {
            for (int b = 0; b < B; ++b) {
                std::copy(g.data() + b * img_n, g.data() + (b + 1) * img_n, img_slice.data());
                Tensor<T> pn = op.adjoint(op.forward(img_slice));
                for (std::size_t i = 0; i < img_n; ++i)
                    g_check[b * img_n + i] -= alpha * pn[i];
            }
        }
        if (grad_x_check_direct && !(*grad_x_check_direct)[static_cast<std::size_t>(k)].empty())
            g_check += (*grad_x_check_direct)[static_cast<std::size_t>(k)];
        g = model.generator(k).backward(cache.gen[static_cast<std::size_t>(k)], g_check,
                                        grads.generator_grads(model, k));
    }
    return g;
}

}  // namespace proxcs
