#pragma once

#include <cmath>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxcs/operators.hpp"
#include "proxcs/tensor.hpp"
#include "proxcs/tv.hpp"
#include "proxcs/wavelet.hpp"

namespace proxcs {

/// sign(x) * max(|x| - tau, 0), elementwise.
template <typename T>
Tensor<T> soft_threshold(const Tensor<T>& x, T tau) {
    if (tau < T(0)) throw std::invalid_argument("soft_threshold: negative threshold");
    Tensor<T> out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const T m = std::abs(x[i]) - tau;
        out[i] = m > T(0) ? (x[i] > T(0) ? m : -m) : T(0);
    }
    return out;
}

/// Magnitude shrinkage for channel-pair complex data [2,...]: shrinks
/// sqrt(re^2+im^2) by tau, preserving phase.
template <typename T>
Tensor<T> soft_threshold_complex(const Tensor<T>& x, T tau) {
    if (x.rank() < 1 || x.dim(0) != 2)
        throw std::invalid_argument("soft_threshold_complex: expected leading pair dimension of 2");
    Tensor<T> out(x.shape());
    const std::size_t plane = x.size() / 2;
    for (std::size_t i = 0; i < plane; ++i) {
        const T re = x[i], im = x[plane + i];
        const T mag = std::sqrt(re * re + im * im);
        const T keep = mag > tau ? (mag - tau) / mag : T(0);
        out[i] = re * keep;
        out[plane + i] = im * keep;
    }
    return out;
}

enum class SparsityTransform { Wavelet, Tv, Identity };

inline SparsityTransform parse_transform(const std::string& name) {
    if (name == "wavelet") return SparsityTransform::Wavelet;
    if (name == "tv") return SparsityTransform::Tv;
    if (name == "identity") return SparsityTransform::Identity;
    throw std::invalid_argument("unknown sparsity transform: " + name);
}

struct SparsityConfig {
    SparsityTransform transform = SparsityTransform::Wavelet;
    double reg_weight = 1e-3;
    int wavelet_levels = 3;
    int tv_inner_iters = 50;
    bool complex_pairs = true;  // leading dim of 2 treated as (re, im)
};

struct SolverTrace {
    std::vector<double> objective;
    std::vector<double> residual;
    std::vector<Tensor<double>> snapshots;  // optional
    bool diverged = false;

    void to_csv(std::ostream& os) const {
        os << "iteration,objective,residual\n";
        for (std::size_t i = 0; i < objective.size(); ++i) {
            char line[96];
            std::snprintf(line, sizeof(line), "%zu,%.12g,%.12g\n", i + 1, objective[i], residual[i]);
            os << line;
        }
    }
};

namespace detail {

template <typename T>
Tensor<T> sparse_prox(const Tensor<T>& z, const SparsityConfig& cfg, T tau) {
    switch (cfg.transform) {
        case SparsityTransform::Identity: {
            if (cfg.complex_pairs && z.rank() == 3 && z.dim(0) == 2)
                return soft_threshold_complex(z, tau);
            return soft_threshold(z, tau);
        }
        case SparsityTransform::Wavelet: {
            Tensor<T> c = wavelet_forward(z, cfg.wavelet_levels);
            if (cfg.complex_pairs && z.rank() == 3 && z.dim(0) == 2)
                c = soft_threshold_complex(c, tau);
            else
                c = soft_threshold(c, tau);
            return wavelet_inverse(c, cfg.wavelet_levels);
        }
        case SparsityTransform::Tv:
            return tv_prox(z, tau, cfg.tv_inner_iters);
    }
    throw std::logic_error("sparse_prox: unreachable");
}

template <typename T>
T regularizer_value(const Tensor<T>& x, const SparsityConfig& cfg) {
    switch (cfg.transform) {
        case SparsityTransform::Identity: {
            if (cfg.complex_pairs && x.rank() == 3 && x.dim(0) == 2) {
                T acc(0);
                const std::size_t plane = x.size() / 2;
                for (std::size_t i = 0; i < plane; ++i)
                    acc += std::sqrt(x[i] * x[i] + x[plane + i] * x[plane + i]);
                return acc;
            }
            return x.norm1();
        }
        case SparsityTransform::Wavelet: {
            Tensor<T> c = wavelet_forward(x, cfg.wavelet_levels);
            if (cfg.complex_pairs && x.rank() == 3 && x.dim(0) == 2) {
                T acc(0);
                const std::size_t plane = c.size() / 2;
                for (std::size_t i = 0; i < plane; ++i)
                    acc += std::sqrt(c[i] * c[i] + c[plane + i] * c[plane + i]);
                return acc;
            }
            return c.norm1();
        }
        case SparsityTransform::Tv:
            return tv_value(x);
    }
    throw std::logic_error("regularizer_value: unreachable");
}

/// Objective of the regularized least-squares program:
/// 1/2 ||y - Phi x||^2 + reg_weight * psi(x).
template <typename T>
double solver_objective(const LinearOperator<T>& op, const Tensor<T>& y, const Tensor<T>& x,
                        const SparsityConfig& cfg) {
    Tensor<T> r = y;
    r -= op.forward(x);
    const double fid = 0.5 * static_cast<double>(r.dot(r));
    return fid + cfg.reg_weight * static_cast<double>(regularizer_value(x, cfg));
}

}  // namespace detail

template <typename T>
struct SolveResult {
    Tensor<T> image;
    SolverTrace trace;
};

/// Iterative soft-thresholding: alternates a data-consistency gradient step
/// with the configured sparsity proximal. step must satisfy step <= 1/||Phi||^2
/// for the objective to be non-increasing (the masked-Fourier operator has
/// unit norm).
template <typename T>
SolveResult<T> ista(const LinearOperator<T>& op, const Tensor<T>& y, const SparsityConfig& cfg,
                    T step = T(1), int iters = 100, bool keep_snapshots = false) {
    SolveResult<T> res;
    res.image = Tensor<T>(op.input_shape());
    double prev = detail::solver_objective(op, y, res.image, cfg);
    for (int k = 0; k < iters; ++k) {
        Tensor<T> z = data_consistency(op, res.image, y, step);
        res.image = detail::sparse_prox(z, cfg, static_cast<T>(step * cfg.reg_weight));
        Tensor<T> r = y;
        r -= op.forward(res.image);
        const double obj = detail::solver_objective(op, y, res.image, cfg);
        res.trace.objective.push_back(obj);
        res.trace.residual.push_back(static_cast<double>(r.norm2()));
        if (obj > prev + 1e-9 * (1.0 + std::abs(prev))) res.trace.diverged = true;
        prev = obj;
        if (keep_snapshots) res.trace.snapshots.push_back(res.image.template cast<double>());
    }
    return res;
}

/// FISTA: ISTA with the Nesterov momentum sequence
/// t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2. With adaptive_restart the momentum
/// is reset whenever the objective increases (function-value restart), which
/// restores linear convergence on well-conditioned problems; the default
/// keeps the plain sequence.
template <typename T>
SolveResult<T> fista(const LinearOperator<T>& op, const Tensor<T>& y, const SparsityConfig& cfg,
                     T step = T(1), int iters = 100, bool keep_snapshots = false,
                     bool adaptive_restart = false) {
    SolveResult<T> res;
    res.image = Tensor<T>(op.input_shape());
    Tensor<T> momentum_point = res.image;
    double t = 1.0;
    const double initial_obj = detail::solver_objective(op, y, res.image, cfg);
    double prev_obj = initial_obj;
    for (int k = 0; k < iters; ++k) {
        Tensor<T> z = data_consistency(op, momentum_point, y, step);
        Tensor<T> x_next = detail::sparse_prox(z, cfg, static_cast<T>(step * cfg.reg_weight));
        double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));

        Tensor<T> r = y;
        r -= op.forward(x_next);
        const double obj = detail::solver_objective(op, y, x_next, cfg);
        if (adaptive_restart && obj > prev_obj) t = 1.0, t_next = 1.0;
        prev_obj = obj;

        momentum_point = x_next;
        momentum_point.axpy(static_cast<T>((t - 1.0) / t_next), x_next - res.image);
        res.image = std::move(x_next);
        t = t_next;

        res.trace.objective.push_back(obj);
        res.trace.residual.push_back(static_cast<double>(r.norm2()));
        if (obj > 10.0 * (initial_obj + 1e-12)) res.trace.diverged = true;
        if (keep_snapshots) res.trace.snapshots.push_back(res.image.template cast<double>());
    }
    return res;
}

template <typename T>
struct CgResult {
    Tensor<T> x;
    int iterations = 0;
    double residual_norm = 0.0;
    bool breakdown = false;
};

/// Conjugate gradient for S.P.D. systems given as a matrix-free apply.
template <typename T>
CgResult<T> conjugate_gradient(const std::function<Tensor<T>(const Tensor<T>&)>& apply,
                               const Tensor<T>& rhs, int iters, double tol) {
    CgResult<T> res;
    res.x = Tensor<T>(rhs.shape());
    Tensor<T> r = rhs;  // b - A*0
    Tensor<T> p = r;
    T rr = r.dot(r);
    res.residual_norm = std::sqrt(static_cast<double>(rr));
    for (int k = 0; k < iters; ++k) {
        if (res.residual_norm <= tol) break;
        Tensor<T> ap = apply(p);
        const T pap = p.dot(ap);
        if (!(pap > T(0))) {
            res.breakdown = true;
            break;
        }
        const T alpha = rr / pap;
        res.x.axpy(alpha, p);
        r.axpy(-alpha, ap);
        const T rr_next = r.dot(r);
        p *= rr_next / rr;
        p += r;
        rr = rr_next;
        res.residual_norm = std::sqrt(static_cast<double>(rr));
        res.iterations = k + 1;
    }
    return res;
}

}  // namespace proxcs
