// proxcs: compressive image recovery with unrolled proximal-gradient
// networks and classical sparse-coding baselines.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "proxcs/checkpoint.hpp"
#include "proxcs/config_file.hpp"
#include "proxcs/dataset.hpp"
#include "proxcs/gradcheck_suite.hpp"
#include "proxcs/image_io.hpp"
#include "proxcs/measurement_io.hpp"
#include "proxcs/metrics.hpp"
#include "proxcs/solvers.hpp"
#include "proxcs/sweep.hpp"
#include "proxcs/train.hpp"

namespace {

using proxcs::ConfigFile;
using proxcs::Tensor;
using Real = float;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitVerification = 3;

ConfigFile load_config_opt(const std::string& path) {
    if (path.empty()) return ConfigFile();
    return ConfigFile::load(path);
}

proxcs::SamplingMask load_mask_any(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open mask file " + path);
    char magic[4] = {0, 0, 0, 0};
    f.read(magic, 4);
    f.close();
    if (std::string(magic, 4) == "PXMK") return proxcs::load_mask_bitset(path);
    return proxcs::load_mask_pgm(path);
}

proxcs::PhantomSpec phantom_from_config(const ConfigFile& cfg, int size) {
    proxcs::PhantomSpec spec;
    spec.size = size;
    spec.min_ellipses = cfg.get_int("phantom_min_ellipses", spec.min_ellipses);
    spec.max_ellipses = cfg.get_int("phantom_max_ellipses", spec.max_ellipses);
    spec.min_intensity = cfg.get_double("phantom_min_intensity", spec.min_intensity);
    spec.max_intensity = cfg.get_double("phantom_max_intensity", spec.max_intensity);
    spec.texture_amplitude = cfg.get_double("phantom_texture", spec.texture_amplitude);
    spec.texture_cycles = cfg.get_double("phantom_texture_cycles", spec.texture_cycles);
    spec.edge_width = cfg.get_double("phantom_edge_width", spec.edge_width);
    spec.phase_amplitude = cfg.get_double("phantom_phase", spec.phase_amplitude);
    return spec;
}

proxcs::TrainConfig<Real> train_config_from(const ConfigFile& cfg, std::uint64_t seed) {
    proxcs::TrainConfig<Real> tc;
    tc.batch_size = cfg.get_int("batch_size", 2);
    tc.learning_rate = static_cast<Real>(cfg.get_double("learning_rate", 1e-4));
    tc.beta1 = static_cast<Real>(cfg.get_double("beta1", 0.9));
    tc.epochs = cfg.get_int("epochs", 1);
    tc.clip_threshold = static_cast<Real>(cfg.get_double("clip_threshold", 0.0));
    tc.checkpoint_interval = cfg.get_long("checkpoint_interval", 0);
    tc.seed = seed;
    return tc;
}

proxcs::LossWeights<Real> loss_weights_from(const ConfigFile& cfg) {
    proxcs::LossWeights<Real> w;
    w.lambda = static_cast<Real>(cfg.get_double("lambda", 0.0));
    w.eta = static_cast<Real>(cfg.get_double("eta", 1.0));
    w.gamma = static_cast<Real>(cfg.get_double("gamma", 0.0));
    w.warmup_batches = cfg.get_long("warmup_batches", 1000);
    return w;
}

int cmd_mask_gen(const std::string& config_path, int height, int width, double fraction,
                 double decay, int calib, std::uint64_t seed, const std::string& out,
                 const std::string& pgm_out) {
    const auto cfg = load_config_opt(config_path);
    height = height > 0 ? height : cfg.get_int("height", 64);
    width = width > 0 ? width : cfg.get_int("width", 64);
    fraction = fraction > 0 ? fraction : cfg.get_double("fraction", 0.2);
    decay = decay >= 0 ? decay : cfg.get_double("decay_power", 3.0);
    calib = calib >= 0 ? calib : cfg.get_int("calib_size", std::min(height, width) / 8);
    auto mask = proxcs::generate_mask(height, width, fraction, decay, calib, seed);
    if (!out.empty()) proxcs::save_mask_bitset(mask, out);
    if (!pgm_out.empty()) proxcs::save_mask_pgm(mask, pgm_out);
    std::printf("mask %dx%d: %ld of %d samples (%.2f%%)\n", height, width, mask.count(),
                height * width, 100.0 * static_cast<double>(mask.count()) / (height * width));
    return kExitOk;
}

int cmd_phantom_gen(const std::string& config_path, int size, std::uint64_t seed, int count,
                    const std::string& out, const std::string& mask_path, double noise_sigma,
                    const std::string& measurements_out) {
    const auto cfg = load_config_opt(config_path);
    size = size > 0 ? size : cfg.get_int("image_size", 64);
    auto spec = phantom_from_config(cfg, size);

    std::optional<proxcs::MaskedFourierOperator<Real>> op;
    if (!mask_path.empty()) op.emplace(load_mask_any(mask_path));

    auto numbered = [&](const std::string& base, int i) {
        if (count <= 1) return base;
        const auto dot = base.rfind('.');
        if (dot == std::string::npos) return base + "_" + std::to_string(i);
        return base.substr(0, dot) + "_" + std::to_string(i) + base.substr(dot);
    };

    for (int i = 0; i < count; ++i) {
        spec.seed = seed + static_cast<std::uint64_t>(i);
        auto phantom = proxcs::generate_phantom(spec);
        const std::string path = numbered(out, i);
        proxcs::save_image(path, phantom.magnitude(), proxcs::format_from_path(path), 16);
        if (op) {
            proxcs::MeasurementFile m;
            m.height = size;
            m.width = size;
            m.mask_id = mask_path;
            m.noise_sigma = static_cast<float>(noise_sigma);
            auto phys = phantom.to_channels().cast<Real>();
            m.values =
                proxcs::synthesize_measurements(phys, *op, static_cast<Real>(noise_sigma), spec.seed);
            const std::string mpath =
                measurements_out.empty() ? path + ".meas" : numbered(measurements_out, i);
            proxcs::save_measurements(mpath, m);
        }
    }
    std::printf("wrote %d phantom(s) to %s\n", count, out.c_str());
    return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& out, const std::string& log_path,
              std::uint64_t seed) {
    const auto cfg = ConfigFile::load(config_path);
    const std::string task = cfg.get_string("task", "mri");
    const int size = cfg.get_int("image_size", 64);
    const int train_count = cfg.get_int("train_count", 64);
    const int test_count = cfg.get_int("test_count", 0);
    const double noise_sigma = cfg.get_double("noise_sigma", 0.0);
    const std::uint64_t data_seed = cfg.get_long("data_seed", 7);

    proxcs::GeneratorConfig gc;
    gc.residual_blocks = cfg.get_int("residual_blocks", 1);
    gc.feature_maps = cfg.get_int("feature_maps", 16);
    auto tc = train_config_from(cfg, seed);
    auto weights = loss_weights_from(cfg);
    const auto mode = proxcs::parse_weight_mode(cfg.get_string("weight_mode", "shared"));
    const int copies = cfg.get_int("copies", 3);
    const std::uint64_t model_seed = cfg.get_long("model_seed", static_cast<long>(seed) + 1);

    auto t0 = std::chrono::steady_clock::now();
    if (task == "mri") {
        auto mask = proxcs::generate_mask(size, size, cfg.get_double("mask_fraction", 0.2),
                                          cfg.get_double("mask_decay", 3.0),
                                          cfg.get_int("mask_calib", size / 8),
                                          cfg.get_long("mask_seed", 42));
        proxcs::MaskedFourierOperator<Real> op(mask);
        const auto norm = proxcs::ImageNormalization<Real>::mri();
        auto manifest = proxcs::DatasetManifest::for_phantoms(size, train_count, test_count,
                                                              data_seed, "generated", noise_sigma);
        auto ds = proxcs::build_mri_dataset(op, manifest, norm, phantom_from_config(cfg, size));
        gc.in_channels = gc.out_channels = 2;
        auto model = proxcs::UnrolledModel<Real>::make(gc, copies, mode, op, model_seed);

        proxcs::Discriminator<Real> disc;
        proxcs::Discriminator<Real>* disc_ptr = nullptr;
        if (weights.lambda > 0) {
            proxcs::Rng drng(model_seed, 0x64697363ull);
            proxcs::DiscriminatorConfig dc;
            dc.in_channels = 1;
            disc = proxcs::Discriminator<Real>::make(dc, drng);
            disc_ptr = &disc;
        }
        auto log = proxcs::train(model, disc_ptr, ds.train, tc, weights, proxcs::TaskKind::Mri,
                                 proxcs::ImageNormalization<Real>::identity(), [&](long batch) {
                                     proxcs::save_model(out + "." + std::to_string(batch), model);
                                 });
        proxcs::save_model(out, model);
        if (!log_path.empty()) {
            std::ofstream lf(log_path);
            proxcs::write_training_log(log, lf);
        }
        std::printf("trained %zu batches in %.1f s\n", log.size(),
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        if (!ds.test.empty()) {
            auto report = proxcs::evaluate_mri_model(model, ds.test, norm);
            std::printf("test: mean SNR %.2f dB (std %.2f), mean SSIM %.4f (std %.4f) on %zu images\n",
                        report.mean_snr(), report.std_snr(), report.mean_ssim(), report.std_ssim(),
                        report.snr_values.size());
        }
    } else if (task == "superres") {
        proxcs::BoxDownsampleOperator<Real> op(3, size, size);
        proxcs::DatasetManifest manifest;
        manifest.image_size = size;
        manifest.noise_sigma = noise_sigma;
        for (int i = 0; i < train_count; ++i)
            manifest.entries.push_back(
                {"texture", proxcs::Rng::mix(data_seed, 0x10000u + static_cast<std::uint64_t>(i)),
                 "train"});
        for (int i = 0; i < test_count; ++i)
            manifest.entries.push_back(
                {"texture", proxcs::Rng::mix(data_seed, 0x20000u + static_cast<std::uint64_t>(i)),
                 "test"});
        auto ds = proxcs::build_superres_dataset(op, manifest);
        gc.in_channels = gc.out_channels = 3;
        auto model = proxcs::UnrolledModel<Real>::make(gc, copies, mode, op, model_seed);

        proxcs::Discriminator<Real> disc;
        proxcs::Discriminator<Real>* disc_ptr = nullptr;
        if (weights.lambda > 0) {
            proxcs::Rng drng(model_seed, 0x64697363ull);
            proxcs::DiscriminatorConfig dc;
            dc.in_channels = 3;
            disc = proxcs::Discriminator<Real>::make(dc, drng);
            disc_ptr = &disc;
        }
        if (!cfg.has("clip_threshold")) tc.clip_threshold = Real(1);  // superres default
        auto log = proxcs::train(model, disc_ptr, ds.train, tc, weights, proxcs::TaskKind::Superres,
                                 proxcs::ImageNormalization<Real>::identity(), [&](long batch) {
                                     proxcs::save_model(out + "." + std::to_string(batch), model);
                                 });
        proxcs::save_model(out, model);
        if (!log_path.empty()) {
            std::ofstream lf(log_path);
            proxcs::write_training_log(log, lf);
        }
        std::printf("trained %zu batches in %.1f s\n", log.size(),
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        if (!ds.test.empty()) {
            double snr_acc = 0.0, base_acc = 0.0;
            for (const auto& s : ds.test) {
                Tensor<Real> y({1, 3, size / 4, size / 4}, std::vector<Real>(s.net.y.values()));
                Tensor<Real> xt({1, 3, size, size}, std::vector<Real>(s.net.x_tilde.values()));
                auto x_hat = proxcs::unrolled_forward(model, y, xt, proxcs::BatchNormMode::Eval,
                                                      nullptr, false);
                Tensor<Real> rec({3, size, size}, std::vector<Real>(x_hat.values()));
                snr_acc += proxcs::snr_db(s.truth_phys, rec);
                base_acc += proxcs::snr_db(s.truth_phys, s.net.x_tilde);
            }
            std::printf("test: mean SNR %.2f dB (deconvolution baseline %.2f dB) on %zu images\n",
                        snr_acc / ds.test.size(), base_acc / ds.test.size(), ds.test.size());
        }
    } else {
        std::fprintf(stderr, "unknown task '%s' (expected mri or superres)\n", task.c_str());
        return kExitUsage;
    }
    return kExitOk;
}

int cmd_reconstruct(const std::string& measurements_path, const std::string& mask_path,
                    const std::string& model_path, const std::string& out,
                    const std::string& truth_path, const std::string& report_path) {
    auto meas = proxcs::load_measurements(measurements_path);
    auto mask = load_mask_any(mask_path);
    if (mask.height != meas.height || mask.width != meas.width)
        throw std::runtime_error("mask and measurement grids disagree");
    proxcs::MaskedFourierOperator<Real> op(mask);
    if (op.sample_count() != meas.values.dim(0))
        throw std::runtime_error("mask sample count does not match the measurement file");
    auto model = proxcs::load_model<Real>(model_path, op);

    const auto norm = proxcs::ImageNormalization<Real>::mri();
    Tensor<Real> y_net = meas.values;
    y_net *= norm.scale;
    y_net += proxcs::mri_measurement_offset(op, norm);
    auto x_tilde = op.adjoint(y_net);

    Tensor<Real> yb({1, op.sample_count(), 2}, std::vector<Real>(y_net.values()));
    Tensor<Real> xb({1, 2, mask.height, mask.width}, std::vector<Real>(x_tilde.values()));
    auto x_hat = proxcs::unrolled_forward(model, yb, xb, proxcs::BatchNormMode::Eval, nullptr, false);
    auto recon =
        norm.to_phys(Tensor<Real>({2, mask.height, mask.width}, std::vector<Real>(x_hat.values())));

    auto mag = proxcs::ComplexImage<Real>::from_channels(recon).magnitude().cast<double>();
    for (auto& v : mag.values()) v = std::clamp(v, 0.0, 1.0);
    proxcs::save_image(out, mag, proxcs::format_from_path(out), 16);
    std::printf("wrote reconstruction to %s\n", out.c_str());

    if (!truth_path.empty()) {
        auto truth = proxcs::load_image(truth_path);
        if (truth.shape() != mag.shape())
            throw std::runtime_error("truth image shape does not match the reconstruction");
        const double snr = proxcs::snr_db(truth, mag);
        const double ssim_v = proxcs::ssim(truth, mag);
        std::printf("SNR %.2f dB, SSIM %.4f\n", snr, ssim_v);
        if (!report_path.empty()) {
            std::ofstream rf(report_path);
            rf << "image,snr_db,ssim\n";
            char line[160];
            std::snprintf(line, sizeof(line), "%s,%.4f,%.6f\n", out.c_str(), snr, ssim_v);
            rf << line;
        }
    }
    return kExitOk;
}

int cmd_cs_solve(const std::string& algo, const std::string& transform,
                 const std::string& measurements_path, const std::string& mask_path, double reg,
                 int iters, int levels, const std::string& out, const std::string& trace_path) {
    auto meas = proxcs::load_measurements(measurements_path);
    auto mask = load_mask_any(mask_path);
    proxcs::MaskedFourierOperator<double> op(mask);
    if (op.sample_count() != meas.values.dim(0))
        throw std::runtime_error("mask sample count does not match the measurement file");

    proxcs::SparsityConfig cfg;
    cfg.transform = proxcs::parse_transform(transform);
    cfg.reg_weight = reg;
    cfg.wavelet_levels = levels;
    auto y = meas.values.cast<double>();

    proxcs::SolveResult<double> result;
    if (algo == "ista")
        result = proxcs::ista(op, y, cfg, 1.0, iters);
    else if (algo == "fista")
        result = proxcs::fista(op, y, cfg, 1.0, iters);
    else {
        std::fprintf(stderr, "unknown algorithm '%s' (expected ista or fista)\n", algo.c_str());
        return kExitUsage;
    }
    if (result.trace.diverged)
        std::fprintf(stderr, "warning: objective increased beyond tolerance during the solve\n");

    auto mag = proxcs::ComplexImage<double>::from_channels(result.image).magnitude();
    for (auto& v : mag.values()) v = std::clamp(v, 0.0, 1.0);
    proxcs::save_image(out, mag, proxcs::format_from_path(out), 16);
    if (!trace_path.empty()) {
        std::ofstream tf(trace_path);
        result.trace.to_csv(tf);
    }
    std::printf("%s/%s: %d iterations, final objective %.6g, residual %.6g\n", algo.c_str(),
                transform.c_str(), iters, result.trace.objective.back(),
                result.trace.residual.back());
    return kExitOk;
}

int cmd_benchmark(const std::string& config_path, const std::string& out, bool no_time,
                  std::uint64_t seed) {
    const auto cfg = ConfigFile::load(config_path);
    const int size = cfg.get_int("image_size", 64);
    auto mask = proxcs::generate_mask(size, size, cfg.get_double("mask_fraction", 0.2),
                                      cfg.get_double("mask_decay", 3.0),
                                      cfg.get_int("mask_calib", size / 8),
                                      cfg.get_long("mask_seed", 42));
    proxcs::MaskedFourierOperator<Real> op(mask);
    auto manifest = proxcs::DatasetManifest::for_phantoms(
        size, cfg.get_int("train_count", 64), cfg.get_int("test_count", 16),
        cfg.get_long("data_seed", 7), "generated", cfg.get_double("noise_sigma", 0.0));

    proxcs::SweepSpec<Real> spec;
    spec.seed = seed;
    spec.base_config.feature_maps = cfg.get_int("feature_maps", 16);
    spec.train_config = train_config_from(cfg, seed);
    spec.weights = loss_weights_from(cfg);
    spec.include_cs_rows = cfg.get_bool("include_cs_rows", true);
    spec.fista_iters = cfg.get_int("fista_iters", 300);
    spec.measure_time = !no_time && cfg.get_bool("measure_time", true);

    // cells = "K:RB:mode;K:RB:mode;..."
    const std::string cells = cfg.get_string("cells", "3:1:shared");
    std::istringstream cs(cells);
    std::string cell;
    while (std::getline(cs, cell, ';')) {
        if (cell.empty()) continue;
        proxcs::SweepCell c;
        std::istringstream fields(cell);
        std::string copies, rbs, mode;
        if (!std::getline(fields, copies, ':') || !std::getline(fields, rbs, ':') ||
            !std::getline(fields, mode, ':'))
            throw std::runtime_error("bad cell spec '" + cell + "' (expected K:RB:mode)");
        c.copies = std::stoi(copies);
        c.residual_blocks = std::stoi(rbs);
        c.mode = proxcs::parse_weight_mode(mode);
        spec.cells.push_back(c);
    }

    auto rows = proxcs::run_sweep(op, manifest, phantom_from_config(cfg, size), spec, &std::cout);
    std::ofstream of(out);
    proxcs::sweep_to_csv(rows, of);
    std::printf("wrote %zu rows to %s\n", rows.size(), out.c_str());
    return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed) {
    auto results = proxcs::run_gradcheck_suite(seed);
    for (const auto& r : results)
        std::printf("%-42s max_rel %.3e  (tol %.0e)  %s\n", r.name.c_str(), r.max_rel_error,
                    r.tolerance, r.pass ? "pass" : "FAIL");
    if (!proxcs::gradcheck_suite_passes(results)) {
        std::fprintf(stderr, "gradient verification failed\n");
        return kExitVerification;
    }
    std::printf("all gradient checks passed\n");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"compressive image recovery: unrolled proximal networks and CS baselines"};
    app.require_subcommand(1);

    std::string config_path, out, pgm_out, log_path, mask_path, measurements_path, model_path,
        truth_path, report_path, trace_path, measurements_out;
    std::string algo = "fista", transform = "wavelet";
    std::uint64_t seed = 0;
    int height = 0, width = 0, size = 0, count = 1, iters = 300, levels = 3, calib = -1;
    double fraction = 0, decay = -1, reg = 1e-3, noise_sigma = 0;
    bool no_time = false;

    auto* mask_gen = app.add_subcommand("mask-gen", "generate a variable-density sampling mask");
    mask_gen->add_option("--config", config_path, "key=value config file");
    mask_gen->add_option("--height", height);
    mask_gen->add_option("--width", width);
    mask_gen->add_option("--fraction", fraction, "sampling fraction in (0,1]");
    mask_gen->add_option("--decay-power", decay, "density decay exponent");
    mask_gen->add_option("--calib-size", calib, "fully-sampled center block side");
    mask_gen->add_option("--seed", seed);
    mask_gen->add_option("--out", out, "bitset output path");
    mask_gen->add_option("--pgm", pgm_out, "PGM output path for inspection");

    auto* phantom_gen = app.add_subcommand("phantom-gen", "generate synthetic phantoms");
    phantom_gen->add_option("--config", config_path);
    phantom_gen->add_option("--size", size);
    phantom_gen->add_option("--seed", seed);
    phantom_gen->add_option("--count", count);
    phantom_gen->add_option("--out", out, "image output path (pgm/png)")->required();
    phantom_gen->add_option("--mask", mask_path, "also synthesize measurements with this mask");
    phantom_gen->add_option("--noise-sigma", noise_sigma);
    phantom_gen->add_option("--measurements-out", measurements_out);

    auto* train_cmd = app.add_subcommand("train", "train an unrolled model");
    train_cmd->add_option("--config", config_path)->required();
    train_cmd->add_option("--out", out, "model checkpoint path")->required();
    train_cmd->add_option("--log", log_path, "training log CSV");
    train_cmd->add_option("--seed", seed);

    auto* reconstruct = app.add_subcommand("reconstruct", "reconstruct from a measurement file");
    reconstruct->add_option("--config", config_path);
    reconstruct->add_option("--measurements", measurements_path)->required();
    reconstruct->add_option("--mask", mask_path)->required();
    reconstruct->add_option("--model", model_path)->required();
    reconstruct->add_option("--out", out)->required();
    reconstruct->add_option("--truth", truth_path, "ground-truth magnitude image for metrics");
    reconstruct->add_option("--report", report_path, "metric report CSV");
    reconstruct->add_option("--seed", seed);

    auto* cs_solve = app.add_subcommand("cs-solve", "classical compressed-sensing reconstruction");
    cs_solve->add_option("--config", config_path);
    cs_solve->add_option("--algo", algo, "ista|fista");
    cs_solve->add_option("--transform", transform, "wavelet|tv|identity");
    cs_solve->add_option("--measurements", measurements_path)->required();
    cs_solve->add_option("--mask", mask_path)->required();
    cs_solve->add_option("--reg-weight", reg);
    cs_solve->add_option("--iters", iters);
    cs_solve->add_option("--levels", levels, "wavelet levels");
    cs_solve->add_option("--out", out)->required();
    cs_solve->add_option("--trace", trace_path, "per-iteration objective/residual CSV");
    cs_solve->add_option("--seed", seed);

    auto* benchmark = app.add_subcommand("benchmark", "train and evaluate a sweep of architectures");
    benchmark->add_option("--config", config_path)->required();
    benchmark->add_option("--out", out, "CSV output path")->required();
    benchmark->add_flag("--no-time", no_time, "suppress wall-clock columns for reproducible CSVs");
    benchmark->add_option("--seed", seed);

    auto* gradcheck = app.add_subcommand("gradcheck", "run the finite-difference gradient suite");
    gradcheck->add_option("--config", config_path);
    gradcheck->add_option("--seed", seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (mask_gen->parsed())
            return cmd_mask_gen(config_path, height, width, fraction, decay, calib, seed, out,
                                pgm_out);
        if (phantom_gen->parsed())
            return cmd_phantom_gen(config_path, size, seed, count, out, mask_path, noise_sigma,
                                   measurements_out);
        if (train_cmd->parsed()) return cmd_train(config_path, out, log_path, seed);
        if (reconstruct->parsed())
            return cmd_reconstruct(measurements_path, mask_path, model_path, out, truth_path,
                                   report_path);
        if (cs_solve->parsed())
            return cmd_cs_solve(algo, transform, measurements_path, mask_path, reg, iters, levels,
                                out, trace_path);
        if (benchmark->parsed()) return cmd_benchmark(config_path, out, no_time, seed);
        if (gradcheck->parsed()) return cmd_gradcheck(seed == 0 ? 1 : seed);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
