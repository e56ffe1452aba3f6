#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "proxcs/complex_image.hpp"
#include "proxcs/operators.hpp"
#include "proxcs/tensor.hpp"

namespace proxcs {

/// 20 log10(||truth|| / ||truth - recon||), capped for (near-)exact
/// reconstructions.
template <typename T>
double snr_db(const Tensor<T>& truth, const Tensor<T>& recon, double cap = 300.0) {
    if (truth.shape() != recon.shape())
        throw std::invalid_argument("snr: shape mismatch " + shape_string(truth.shape()) + " vs " +
                                    shape_string(recon.shape()));
    double tn = 0.0, en = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double t = static_cast<double>(truth[i]);
        const double e = t - static_cast<double>(recon[i]);
        tn += t * t;
        en += e * e;
    }
    if (tn == 0.0) throw std::invalid_argument("snr: zero truth norm");
    if (en == 0.0) return cap;
    return std::min(cap, 10.0 * std::log10(tn / en));
}

/// SNR on magnitude images, the convention for complex MRI data.
template <typename T>
double snr_magnitude_db(const ComplexImage<T>& truth, const ComplexImage<T>& recon, double cap = 300.0) {
    return snr_db(truth.magnitude(), recon.magnitude(), cap);
}

namespace detail {

inline std::vector<double> gaussian_window_1d(int size, double sigma) {
    std::vector<double> w(static_cast<std::size_t>(size));
    const double c = (size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        w[static_cast<std::size_t>(i)] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
        sum += w[static_cast<std::size_t>(i)];
    }
    for (auto& v : w) v /= sum;
    return w;
}

/// Separable valid-mode Gaussian filtering; output is (H-size+1)x(W-size+1).
template <typename T>
std::vector<double> gaussian_filter_valid(const Tensor<T>& img, const std::vector<double>& w) {
    const int H = img.dim(0), W = img.dim(1);
    const int k = static_cast<int>(w.size());
    const int Ho = H - k + 1, Wo = W - k + 1;
    std::vector<double> rows(static_cast<std::size_t>(H) * Wo);
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < Wo; ++j) {
            double acc = 0.0;
            for (int t = 0; t < k; ++t) acc += w[static_cast<std::size_t>(t)] * static_cast<double>(img.at(i, j + t));
            rows[static_cast<std::size_t>(i) * Wo + j] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(Ho) * Wo);
    for (int i = 0; i < Ho; ++i)
        for (int j = 0; j < Wo; ++j) {
            double acc = 0.0;
            for (int t = 0; t < k; ++t) acc += w[static_cast<std::size_t>(t)] * rows[static_cast<std::size_t>(i + t) * Wo + j];
            out[static_cast<std::size_t>(i) * Wo + j] = acc;
        }
    return out;
}

}  // namespace detail

/// Mean local SSIM over an 11x11 Gaussian window (sigma 1.5), constants
/// C1=(0.01)^2 and C2=(0.03)^2 at unit dynamic range. Inputs are
/// single-channel images with values in [0,1].
template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, int window = 11, double sigma = 1.5) {
    if (a.rank() != 2 || b.rank() != 2 || a.shape() != b.shape())
        throw std::invalid_argument("ssim: expects two equal-shape [H,W] images");
    if (a.dim(0) < window || a.dim(1) < window)
        throw std::invalid_argument("ssim: image smaller than the " + std::to_string(window) + "-pixel window");
    const double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;
    const auto w = detail::gaussian_window_1d(window, sigma);

    Tensor<double> aa(a.shape()), bb(a.shape()), a2(a.shape()), b2(a.shape()), ab(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = static_cast<double>(a[i]);
        const double y = static_cast<double>(b[i]);
        aa[i] = x;
        bb[i] = y;
        a2[i] = x * x;
        b2[i] = y * y;
        ab[i] = x * y;
    }
    const auto mu1 = detail::gaussian_filter_valid(aa, w);
    const auto mu2 = detail::gaussian_filter_valid(bb, w);
    const auto m11 = detail::gaussian_filter_valid(a2, w);
    const auto m22 = detail::gaussian_filter_valid(b2, w);
    const auto m12 = detail::gaussian_filter_valid(ab, w);

    double acc = 0.0;
    for (std::size_t i = 0; i < mu1.size(); ++i) {
        const double s11 = m11[i] - mu1[i] * mu1[i];
        const double s22 = m22[i] - mu2[i] * mu2[i];
        const double s12 = m12[i] - mu1[i] * mu2[i];
        const double num = (2.0 * mu1[i] * mu2[i] + C1) * (2.0 * s12 + C2);
        const double den = (mu1[i] * mu1[i] + mu2[i] * mu2[i] + C1) * (s11 + s22 + C2);
        acc += num / den;
    }
    return acc / static_cast<double>(mu1.size());
}

/// Per-image metric values plus their mean and standard deviation.
struct MetricReport {
    std::vector<double> snr_values;
    std::vector<double> ssim_values;

    void add(double snr, double ssim_value) {
        snr_values.push_back(snr);
        ssim_values.push_back(ssim_value);
    }
    static double mean(const std::vector<double>& v) {
        double acc = 0.0;
        for (double x : v) acc += x;
        return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
    }
    static double stddev(const std::vector<double>& v) {
        if (v.size() < 2) return 0.0;
        const double m = mean(v);
        double acc = 0.0;
        for (double x : v) acc += (x - m) * (x - m);
        return std::sqrt(acc / static_cast<double>(v.size() - 1));
    }
    double mean_snr() const { return mean(snr_values); }
    double mean_ssim() const { return mean(ssim_values); }
    double std_snr() const { return stddev(snr_values); }
    double std_ssim() const { return stddev(ssim_values); }
};

/// Inverse transform with the missing measurements set to zero: the weakest
/// baseline and the network's initial image.
template <typename T>
Tensor<T> zero_fill_baseline(const LinearOperator<T>& op, const Tensor<T>& y) {
    return op.adjoint(y);
}

}  // namespace proxcs
