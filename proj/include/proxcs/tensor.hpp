#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxcs/rng.hpp"

namespace proxcs {

inline std::string shape_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

/// Dense row-major N-d array. The single value type used for images,
/// feature maps, parameters and gradients throughout the library.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(count(shape_), T(0));
    }

    Tensor(std::vector<int> shape, std::vector<T> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != count(shape_)) {
            throw std::invalid_argument("tensor: data length " + std::to_string(data_.size()) +
                                        " does not match shape " + shape_string(shape_));
        }
    }

    static Tensor full(std::vector<int> shape, T value) {
        Tensor t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), value);
        return t;
    }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& values() { return data_; }
    const std::vector<T>& values() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    template <typename... Ix>
    T& at(Ix... ix) { return data_[offset(ix...)]; }
    template <typename... Ix>
    const T& at(Ix... ix) const { return data_[offset(ix...)]; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
    void zero() { fill(T(0)); }

    Tensor& operator+=(const Tensor& o) {
        check_same_shape(o, "+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Tensor& operator-=(const Tensor& o) {
        check_same_shape(o, "-=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Tensor& operator*=(T s) {
        for (auto& v : data_) v *= s;
        return *this;
    }
    friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
    friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
    friend Tensor operator*(Tensor a, T s) { return a *= s; }

    /// a += s * b
    void axpy(T s, const Tensor& b) {
        check_same_shape(b, "axpy");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * b.data_[i];
    }

    T dot(const Tensor& o) const {
        check_same_shape(o, "dot");
        T acc(0);
        for (std::size_t i = 0; i < data_.size(); ++i) acc += data_[i] * o.data_[i];
        return acc;
    }

    T sum() const { return std::accumulate(data_.begin(), data_.end(), T(0)); }

    T norm2() const {
        T acc(0);
        for (const auto& v : data_) acc += v * v;
        return std::sqrt(acc);
    }

    T norm1() const {
        T acc(0);
        for (const auto& v : data_) acc += std::abs(v);
        return acc;
    }

    T max_abs() const {
        T acc(0);
        for (const auto& v : data_) acc = std::max(acc, std::abs(v));
        return acc;
    }

    bool all_finite() const {
        for (const auto& v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void fill_normal(Rng& rng, T stddev) {
        for (auto& v : data_) v = static_cast<T>(rng.normal()) * stddev;
    }

    void fill_uniform(Rng& rng, T lo, T hi) {
        for (auto& v : data_) v = static_cast<T>(rng.uniform(lo, hi));
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape_);
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

    static std::size_t count(const std::vector<int>& shape) {
        std::size_t n = 1;
        for (int d : shape) {
            if (d < 0) throw std::invalid_argument("tensor: negative dimension in " + shape_string(shape));
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

private:
    template <typename... Ix>
    std::size_t offset(Ix... ix) const {
        const int idx[] = {static_cast<int>(ix)...};
        constexpr std::size_t n = sizeof...(Ix);
        std::size_t off = 0;
        for (std::size_t k = 0; k < n; ++k)
            off = off * static_cast<std::size_t>(shape_[k]) + static_cast<std::size_t>(idx[k]);
        return off;
    }

    void check_same_shape(const Tensor& o, const char* what) const {
        if (shape_ != o.shape_) {
            throw std::invalid_argument(std::string("tensor ") + what + ": shape mismatch " +
                                        shape_string(shape_) + " vs " + shape_string(o.shape_));
        }
    }

    std::vector<int> shape_;
    std::vector<T> data_;
};

}  // namespace proxcs
