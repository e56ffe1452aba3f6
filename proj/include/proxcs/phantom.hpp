#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "proxcs/complex_image.hpp"
#include "proxcs/rng.hpp"
#include "proxcs/tensor.hpp"

namespace proxcs {

struct PhantomSpec {
    int size = 64;            // H = W, power of two, >= 16
    int min_ellipses = 5;
    int max_ellipses = 12;
    double min_intensity = 0.15;
    double max_intensity = 0.55;
    double texture_amplitude = 0.15;
    double texture_cycles = 12.0;  // highest spatial frequency of the texture field
    double edge_width = 0.08;      // boundary softness in normalized radius units
    double phase_amplitude = 0.7;  // radians
    std::uint64_t seed = 0;
};

namespace detail {

struct Ellipse {
    double cy, cx, ay, ax, cos_t, sin_t, intensity, ramp;
};

inline double smoothstep01(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

}  // namespace detail

/// Random sum-of-ellipses magnitude image with smooth interior ramps, a
/// low-amplitude sinusoidal texture, and a smooth random phase map, so the
/// result is genuinely complex. Magnitude is clamped to [0,1]; deterministic
/// per seed.
inline ComplexImage<double> generate_phantom(const PhantomSpec& spec) {
    const int n = spec.size;
    if (n < 16 || (n & (n - 1)) != 0)
        throw std::invalid_argument("generate_phantom: size must be a power of two >= 16");
    Rng rng(spec.seed, 0x7068616eull);  // "phan"

    const int count = spec.min_ellipses +
                      (spec.max_ellipses > spec.min_ellipses
                           ? rng.uniform_int(spec.max_ellipses - spec.min_ellipses + 1)
                           : 0);
    std::vector<detail::Ellipse> ellipses;
    for (int e = 0; e < count; ++e) {
        detail::Ellipse el;
        el.cy = rng.uniform(0.2, 0.8) * n;
        el.cx = rng.uniform(0.2, 0.8) * n;
        el.ay = rng.uniform(0.08, 0.32) * n;
        el.ax = rng.uniform(0.08, 0.32) * n;
        const double theta = rng.uniform(0.0, 3.14159265358979323846);
        el.cos_t = std::cos(theta);
        el.sin_t = std::sin(theta);
        el.intensity = rng.uniform(spec.min_intensity, spec.max_intensity);
        el.ramp = rng.uniform(0.0, 0.5);
        ellipses.push_back(el);
    }

    // low-frequency sinusoids for texture and phase
    struct Wave {
        double ky, kx, phase, amp;
    };
    auto draw_waves = [&](int m, double max_cycles) {
        std::vector<Wave> waves;
        for (int i = 0; i < m; ++i) {
            Wave w;
            const double cycles = rng.uniform(1.0, max_cycles);
            const double dir = rng.uniform(0.0, 6.283185307179586);
            w.ky = 6.283185307179586 * cycles * std::sin(dir) / n;
            w.kx = 6.283185307179586 * cycles * std::cos(dir) / n;
            w.phase = rng.uniform(0.0, 6.283185307179586);
            w.amp = rng.uniform(0.5, 1.0);
            waves.push_back(w);
        }
        return waves;
    };
    const auto texture = draw_waves(4, spec.texture_cycles);
    const auto phase = draw_waves(2, 2.0);

    ComplexImage<double> img(n, n);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            double m = 0.0;
            for (const auto& el : ellipses) {
                const double dy = y - el.cy, dx = x - el.cx;
                const double u = (dx * el.cos_t + dy * el.sin_t) / el.ax;
                const double v = (-dx * el.sin_t + dy * el.cos_t) / el.ay;
                const double q = u * u + v * v;
                if (q >= 1.69) continue;
                const double edge = detail::smoothstep01((1.0 + spec.edge_width - std::sqrt(q)) / spec.edge_width);
                m += el.intensity * edge * (1.0 - el.ramp * std::min(1.0, q));
            }
            if (m > 0.0 && spec.texture_amplitude > 0.0) {
                double t = 0.0;
                for (const auto& w : texture) t += w.amp * std::sin(w.ky * y + w.kx * x + w.phase);
                m *= 1.0 + spec.texture_amplitude * t / 2.0;
            }
            m = std::clamp(m, 0.0, 1.0);
            double ph = 0.0;
            for (const auto& w : phase) ph += w.amp * std::sin(w.ky * y + w.kx * x + w.phase);
            ph *= spec.phase_amplitude / 2.0;
            img.real.at(y, x) = m * std::cos(ph);
            img.imag.at(y, x) = m * std::sin(ph);
        }
    }
    return img;
}

/// RGB shape texture for the superresolution task: a smooth per-channel
/// background gradient with soft-edged ellipses and rectangles on top.
/// Values stay inside [0.05, 0.95]; deterministic per seed.
inline Tensor<double> generate_rgb_texture(int size, std::uint64_t seed) {
    const int n = size;
    if (n < 16 || (n & (n - 1)) != 0)
        throw std::invalid_argument("generate_rgb_texture: size must be a power of two >= 16");
    Rng rng(seed, 0x72676274ull);  // "rgbt"
    Tensor<double> img({3, n, n});

    double base[3], gy[3], gx[3];
    for (int c = 0; c < 3; ++c) {
        base[c] = rng.uniform(0.25, 0.75);
        gy[c] = rng.uniform(-0.25, 0.25) / n;
        gx[c] = rng.uniform(-0.25, 0.25) / n;
    }
    struct Shape {
        bool rect;
        double cy, cx, ay, ax, cos_t, sin_t;
        double color[3];
    };
    const int count = 3 + rng.uniform_int(4);
    std::vector<Shape> shapes;
    for (int s = 0; s < count; ++s) {
        Shape sh;
        sh.rect = rng.uniform() < 0.4;
        sh.cy = rng.uniform(0.15, 0.85) * n;
        sh.cx = rng.uniform(0.15, 0.85) * n;
        sh.ay = rng.uniform(0.08, 0.3) * n;
        sh.ax = rng.uniform(0.08, 0.3) * n;
        const double theta = rng.uniform(0.0, 3.14159265358979323846);
        sh.cos_t = std::cos(theta);
        sh.sin_t = std::sin(theta);
        for (int c = 0; c < 3; ++c) sh.color[c] = rng.uniform(-0.4, 0.4);
        shapes.push_back(sh);
    }
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            double v[3];
            for (int c = 0; c < 3; ++c) v[c] = base[c] + gy[c] * (y - n / 2.0) + gx[c] * (x - n / 2.0);
            for (const auto& sh : shapes) {
                const double dy = y - sh.cy, dx = x - sh.cx;
                const double u = (dx * sh.cos_t + dy * sh.sin_t) / sh.ax;
                const double w = (-dx * sh.sin_t + dy * sh.cos_t) / sh.ay;
                double edge;
                if (sh.rect) {
                    const double d = std::max(std::abs(u), std::abs(w));
                    edge = detail::smoothstep01((1.0 - d) / 0.05);
                } else {
                    edge = detail::smoothstep01((1.0 - std::sqrt(u * u + w * w)) / 0.05);
                }
                if (edge <= 0.0) continue;
                for (int c = 0; c < 3; ++c) v[c] += sh.color[c] * edge;
            }
            for (int c = 0; c < 3; ++c) img.at(c, y, x) = std::clamp(v[c], 0.05, 0.95);
        }
    }
    return img;
}

}  // namespace proxcs
