#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "proxcs/tensor.hpp"

namespace proxcs {

/// Compares the analytic gradient of a scalar-valued function against central
/// finite differences, elementwise, and returns the maximum relative error.
///
/// Relative error uses max(|fd| + |an|, floor) in the denominator so that
/// near-zero gradient entries do not dominate the report.
template <typename T>
T finite_diff_gradcheck(const std::function<T(const Tensor<T>&)>& fn,
                        const std::function<Tensor<T>(const Tensor<T>&)>& analytic_grad,
                        const Tensor<T>& point, T h = T(1e-5), T denom_floor = T(1e-3)) {
    const Tensor<T> an = analytic_grad(point);
    Tensor<T> x = point;
    T worst(0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const T orig = x[i];
        const T hi = h * std::max(T(1), std::abs(orig));
        x[i] = orig + hi;
        const T fp = fn(x);
        x[i] = orig - hi;
        const T fm = fn(x);
        x[i] = orig;
        const T fd = (fp - fm) / (T(2) * hi);
        const T denom = std::max(std::abs(fd) + std::abs(an[i]), denom_floor);
        worst = std::max(worst, std::abs(fd - an[i]) / denom);
    }
    return worst;
}

}  // namespace proxcs
