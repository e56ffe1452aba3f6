#pragma once

#include "proxcs/tensor.hpp"

namespace proxcs {

/// Affine map between physical image values and the network's sigmoid range:
/// net = scale * phys + offset. MRI real/imaginary parts in [-1,1] use
/// scale 0.45, offset 0.5 so they land in [0.05, 0.95]; tasks whose values
/// already sit inside (0,1) use the identity.
template <typename T>
struct ImageNormalization {
    T scale = T(1);
    T offset = T(0);

    static ImageNormalization identity() { return {T(1), T(0)}; }
    static ImageNormalization mri() { return {T(0.45), T(0.5)}; }

    bool is_identity() const { return scale == T(1) && offset == T(0); }

    Tensor<T> to_net(const Tensor<T>& phys) const {
        Tensor<T> out(phys.shape());
        for (std::size_t i = 0; i < phys.size(); ++i) out[i] = scale * phys[i] + offset;
        return out;
    }

    Tensor<T> to_phys(const Tensor<T>& net) const {
        Tensor<T> out(net.shape());
        const T inv = T(1) / scale;
        for (std::size_t i = 0; i < net.size(); ++i) out[i] = (net[i] - offset) * inv;
        return out;
    }
};

}  // namespace proxcs
