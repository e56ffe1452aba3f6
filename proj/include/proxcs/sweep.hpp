#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "proxcs/dataset.hpp"
#include "proxcs/metrics.hpp"
#include "proxcs/solvers.hpp"
#include "proxcs/train.hpp"

namespace proxcs {

struct SweepCell {
    int copies = 1;
    int residual_blocks = 1;
    WeightMode mode = WeightMode::Shared;
};

template <typename T>
struct SweepSpec {
    std::vector<SweepCell> cells;
    GeneratorConfig base_config;   // feature width and channels; RBs come from the cell
    TrainConfig<T> train_config;   // identical budget for every cell
    LossWeights<T> weights;
    bool include_cs_rows = true;
    int fista_iters = 300;
    int cs_tuning_images = 4;
    bool measure_time = true;  // wall-clock columns; disable for byte-reproducible CSVs
    std::uint64_t seed = 0;
};

struct SweepRow {
    std::string copies;
    std::string rbs;
    std::string weight_mode;
    double mean_snr = 0.0;
    double mean_ssim = 0.0;
    double train_seconds = 0.0;
    double inference_ms = 0.0;
};

inline void sweep_to_csv(const std::vector<SweepRow>& rows, std::ostream& os) {
    os << "copies,rbs,weight_mode,mean_snr_db,mean_ssim,train_seconds,inference_ms\n";
    for (const auto& r : rows) {
        char line[256];
        std::snprintf(line, sizeof(line), "%s,%s,%s,%.4f,%.6f,%.3f,%.4f\n", r.copies.c_str(),
                      r.rbs.c_str(), r.weight_mode.c_str(), r.mean_snr, r.mean_ssim,
                      r.train_seconds, r.inference_ms);
        os << line;
    }
}

namespace detail {

template <typename T>
Tensor<T> clamp01_magnitude(const Tensor<T>& channels) {
    ComplexImage<T> img = ComplexImage<T>::from_channels(channels);
    Tensor<T> m = img.magnitude();
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::clamp(m[i], T(0), T(1));
    return m;
}

}  // namespace detail

/// SNR (on magnitudes) and SSIM of physical-domain reconstructions against
/// the stored truths.
template <typename T>
MetricReport evaluate_mri_reconstructions(const std::vector<Tensor<T>>& recon_phys,
                                          const std::vector<EvalSample<T>>& test) {
    MetricReport report;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto truth_mag = detail::clamp01_magnitude(test[i].truth_phys);
        ComplexImage<T> rec = ComplexImage<T>::from_channels(recon_phys[i]);
        const double s = snr_db(ComplexImage<T>::from_channels(test[i].truth_phys).magnitude(),
                                rec.magnitude());
        Tensor<T> rec_mag = rec.magnitude();
        for (std::size_t j = 0; j < rec_mag.size(); ++j) rec_mag[j] = std::clamp(rec_mag[j], T(0), T(1));
        report.add(s, ssim(truth_mag, rec_mag));
    }
    return report;
}

/// Runs the trained model over the test split (eval-mode batch norm) and
/// returns physical-domain reconstructions.
template <typename T>
std::vector<Tensor<T>> reconstruct_mri_test(UnrolledModel<T>& model,
                                            const std::vector<EvalSample<T>>& test,
                                            const ImageNormalization<T>& norm) {
    std::vector<Tensor<T>> out;
    for (const auto& s : test) {
        std::vector<int> bshape = {1};
        for (int d : s.net.x_tilde.shape()) bshape.push_back(d);
        Tensor<T> y({1}), xt({1});
        y = Tensor<T>(std::vector<int>{1, s.net.y.dim(0), s.net.y.dim(1)}, std::vector<T>(s.net.y.values()));
        xt = Tensor<T>(bshape, std::vector<T>(s.net.x_tilde.values()));
        Tensor<T> x_hat = unrolled_forward(model, y, xt, BatchNormMode::Eval, nullptr, false);
        out.push_back(norm.to_phys(Tensor<T>(s.net.x_tilde.shape(), std::vector<T>(x_hat.values()))));
    }
    return out;
}

template <typename T>
MetricReport evaluate_mri_model(UnrolledModel<T>& model, const std::vector<EvalSample<T>>& test,
                                const ImageNormalization<T>& norm) {
    return evaluate_mri_reconstructions(reconstruct_mri_test(model, test, norm), test);
}

/// Physical-domain measurements for classical solvers (no normalization).
template <typename T>
std::vector<Tensor<T>> physical_measurements(const MaskedFourierOperator<T>& op,
                                             const std::vector<EvalSample<T>>& samples,
                                             double noise_sigma) {
    std::vector<Tensor<T>> out;
    std::uint64_t i = 0;
    for (const auto& s : samples)
        out.push_back(synthesize_measurements(s.truth_phys, op, static_cast<T>(noise_sigma), i++));
    return out;
}

/// Mean SNR of a FISTA reconstruction with the given transform and weight.
template <typename T>
double cs_mean_snr(const MaskedFourierOperator<T>& op, const std::vector<EvalSample<T>>& samples,
                   SparsityTransform transform, double weight, int iters) {
    SparsityConfig cfg;
    cfg.transform = transform;
    cfg.reg_weight = weight;
    cfg.wavelet_levels = 3;
    double acc = 0.0;
    for (const auto& s : samples) {
        Tensor<T> y = op.forward(s.truth_phys);
        auto res = fista(op, y, cfg, T(1), iters);
        acc += snr_db(ComplexImage<T>::from_channels(s.truth_phys).magnitude(),
                      ComplexImage<T>::from_channels(res.image).magnitude());
    }
    return acc / static_cast<double>(samples.size());
}

/// Golden-section search over log10(weight) maximizing the mean SNR on
/// held-out phantoms.
template <typename T>
double tune_cs_weight(const MaskedFourierOperator<T>& op, const std::vector<EvalSample<T>>& val,
                      SparsityTransform transform, int iters, double log_lo = -5.0,
                      double log_hi = -0.5, int evals = 12) {
    const double phi = 0.6180339887498949;
    double a = log_lo, b = log_hi;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = cs_mean_snr(op, val, transform, std::pow(10.0, c), iters);
    double fd = cs_mean_snr(op, val, transform, std::pow(10.0, d), iters);
    for (int i = 0; i < evals; ++i) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = cs_mean_snr(op, val, transform, std::pow(10.0, c), iters);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = cs_mean_snr(op, val, transform, std::pow(10.0, d), iters);
        }
    }
    return std::pow(10.0, 0.5 * (a + b));
}

/// Reconstructs the test split with FISTA at the given weight and reports
/// metrics, physical domain throughout.
template <typename T>
MetricReport evaluate_cs(const MaskedFourierOperator<T>& op, const std::vector<EvalSample<T>>& test,
                         SparsityTransform transform, double weight, int iters) {
    SparsityConfig cfg;
    cfg.transform = transform;
    cfg.reg_weight = weight;
    cfg.wavelet_levels = 3;
    std::vector<Tensor<T>> recon;
    for (const auto& s : test) {
        Tensor<T> y = op.forward(s.truth_phys);
        recon.push_back(fista(op, y, cfg, T(1), iters).image);
    }
    return evaluate_mri_reconstructions(recon, test);
}

/// Table-style benchmark: trains one model per cell with an identical budget
/// on the manifest's train split, evaluates on the held-out test split, and
/// appends tuned CS-WV / CS-TV rows. Cells use derived seeds, so the output
/// is order-independent.
template <typename T>
std::vector<SweepRow> run_sweep(const MaskedFourierOperator<T>& op, const DatasetManifest& manifest,
                                const PhantomSpec& phantom_template, const SweepSpec<T>& spec,
                                std::ostream* progress = nullptr) {
    const auto norm = ImageNormalization<T>::mri();
    auto data = build_mri_dataset(op, manifest, norm, phantom_template);
    if (data.test.empty()) throw std::runtime_error("run_sweep: manifest has no test entries");

    std::vector<SweepRow> rows;
    for (const auto& cell : spec.cells) {
        GeneratorConfig gc = spec.base_config;
        gc.residual_blocks = cell.residual_blocks;
        const std::uint64_t cell_seed =
            Rng::mix(spec.seed, (static_cast<std::uint64_t>(cell.copies) << 20) ^
                                    (static_cast<std::uint64_t>(cell.residual_blocks) << 8) ^
                                    (cell.mode == WeightMode::Shared ? 0u : 1u));
        auto model = UnrolledModel<T>::make(gc, cell.copies, cell.mode, op, cell_seed);
        TrainConfig<T> tc = spec.train_config;
        tc.seed = cell_seed;

        const auto t0 = std::chrono::steady_clock::now();
        train(model, nullptr, data.train, tc, spec.weights, TaskKind::Mri,
              ImageNormalization<T>::identity());
        const double train_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        auto report = evaluate_mri_model(model, data.test, norm);

        double inference_ms = 0.0;
        if (spec.measure_time) {
            const auto& s0 = data.test.front();
            Tensor<T> y1({1, s0.net.y.dim(0), s0.net.y.dim(1)}, std::vector<T>(s0.net.y.values()));
            std::vector<int> bshape = {1};
            for (int d : s0.net.x_tilde.shape()) bshape.push_back(d);
            Tensor<T> x1(bshape, std::vector<T>(s0.net.x_tilde.values()));
            std::vector<double> times;
            for (int rep = 0; rep < 23; ++rep) {
                const auto w0 = std::chrono::steady_clock::now();
                unrolled_forward(model, y1, x1, BatchNormMode::Eval, nullptr, false);
                const double ms =
                    std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - w0).count();
                if (rep >= 3) times.push_back(ms);
            }
            std::sort(times.begin(), times.end());
            inference_ms = times[times.size() / 2];
        }

        SweepRow row;
        row.copies = std::to_string(cell.copies);
        row.rbs = std::to_string(cell.residual_blocks);
        row.weight_mode = weight_mode_name(cell.mode);
        row.mean_snr = report.mean_snr();
        row.mean_ssim = report.mean_ssim();
        row.train_seconds = spec.measure_time ? train_seconds : 0.0;
        row.inference_ms = inference_ms;
        rows.push_back(row);
        if (progress) {
            *progress << "cell " << row.copies << " copies / " << row.rbs << " RBs / "
                      << row.weight_mode << ": SNR " << row.mean_snr << " dB, SSIM "
                      << row.mean_ssim << "\n";
        }
    }

    if (spec.include_cs_rows) {
        // held-out validation phantoms for weight tuning, disjoint of both splits
        std::vector<EvalSample<T>> val;
        for (int i = 0; i < spec.cs_tuning_images; ++i) {
            PhantomSpec ps = phantom_template;
            ps.size = manifest.image_size;
            ps.seed = Rng::mix(spec.seed, 0x76616cull + static_cast<std::uint64_t>(i));  // "val"
            EvalSample<T> s;
            s.truth_phys = generate_phantom(ps).to_channels().template cast<T>();
            val.push_back(std::move(s));
        }
        for (auto transform : {SparsityTransform::Wavelet, SparsityTransform::Tv}) {
            const double weight = tune_cs_weight(op, val, transform, spec.fista_iters);
            const auto t0 = std::chrono::steady_clock::now();
            auto report = evaluate_cs(op, data.test, transform, weight, spec.fista_iters);
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            SweepRow row;
            row.copies = transform == SparsityTransform::Wavelet ? "CS-WV" : "CS-TV";
            row.rbs = "n/a";
            row.weight_mode = "n/a";
            row.mean_snr = report.mean_snr();
            row.mean_ssim = report.mean_ssim();
            row.train_seconds = 0.0;
            row.inference_ms = spec.measure_time
                                   ? 1000.0 * secs / static_cast<double>(data.test.size())
                                   : 0.0;
            rows.push_back(row);
            if (progress)
                *progress << row.copies << " (weight " << weight << "): SNR " << row.mean_snr
                          << " dB, SSIM " << row.mean_ssim << "\n";
        }
    }
    return rows;
}

}  // namespace proxcs
