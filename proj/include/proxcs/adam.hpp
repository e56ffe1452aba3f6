#pragma once

#include <cmath>
#include <stdexcept>

#include "proxcs/tensor.hpp"

namespace proxcs {

/// Per-parameter Adam state with the usual bias-corrected update.
template <typename T>
struct AdamState {
    Tensor<T> first_moment;
    Tensor<T> second_moment;
    long step_count = 0;
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T learning_rate = T(1e-4);
    T epsilon = T(1e-8);

    static AdamState make(const std::vector<int>& shape, T learning_rate, T beta1 = T(0.9)) {
        AdamState s;
        s.first_moment = Tensor<T>(shape);
        s.second_moment = Tensor<T>(shape);
        s.learning_rate = learning_rate;
        s.beta1 = beta1;
        return s;
    }
};

template <typename T>
void adam_step(Tensor<T>& params, const Tensor<T>& grads, AdamState<T>& state) {
    if (params.shape() != grads.shape() || params.shape() != state.first_moment.shape())
        throw std::invalid_argument("adam_step: parameter/gradient/state shape mismatch");
    if (!grads.all_finite())
        throw std::runtime_error("adam_step: non-finite gradient, step rejected");

    state.step_count += 1;
    const T b1 = state.beta1, b2 = state.beta2;
    const T bc1 = T(1) - std::pow(b1, static_cast<T>(state.step_count));
    const T bc2 = T(1) - std::pow(b2, static_cast<T>(state.step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const T g = grads[i];
        state.first_moment[i] = b1 * state.first_moment[i] + (T(1) - b1) * g;
        state.second_moment[i] = b2 * state.second_moment[i] + (T(1) - b2) * g * g;
        const T m_hat = state.first_moment[i] / bc1;
        const T v_hat = state.second_moment[i] / bc2;
        params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

}  // namespace proxcs
