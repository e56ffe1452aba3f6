#include <catch2/catch.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "proxcs/checkpoint.hpp"
#include "proxcs/config_file.hpp"
#include "proxcs/dataset.hpp"
#include "proxcs/image_io.hpp"
#include "proxcs/mask.hpp"
#include "proxcs/measurement_io.hpp"
#include "proxcs/phantom.hpp"

using namespace proxcs;

namespace {

std::string tmp(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("phantom: determinism, magnitude range, degenerate spec") {
    PhantomSpec spec;
    spec.size = 32;
    spec.seed = 11;
    auto a = generate_phantom(spec);
    auto b = generate_phantom(spec);
    for (std::size_t i = 0; i < a.real.size(); ++i) {
        REQUIRE(a.real[i] == b.real[i]);
        REQUIRE(a.imag[i] == b.imag[i]);
    }
    spec.seed = 12;
    auto c = generate_phantom(spec);
    REQUIRE((c.real - a.real).max_abs() > 0.0);

    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        PhantomSpec s2;
        s2.size = 16;
        s2.seed = seed;
        auto m = generate_phantom(s2).magnitude();
        for (std::size_t i = 0; i < m.size(); ++i) {
            REQUIRE(m[i] >= 0.0);
            REQUIRE(m[i] <= 1.0 + 1e-12);
        }
    }

    PhantomSpec zero;
    zero.size = 16;
    zero.min_ellipses = zero.max_ellipses = 0;
    zero.texture_amplitude = 0.0;
    auto z = generate_phantom(zero);
    REQUIRE(z.real.max_abs() == 0.0);
    REQUIRE(z.imag.max_abs() == 0.0);

    PhantomSpec bad;
    bad.size = 20;
    REQUIRE_THROWS_AS(generate_phantom(bad), std::invalid_argument);
}

TEST_CASE("rgb texture stays in range and is deterministic") {
    auto a = generate_rgb_texture(32, 5);
    auto b = generate_rgb_texture(32, 5);
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i] == b[i]);
        REQUIRE(a[i] >= 0.05);
        REQUIRE(a[i] <= 0.95);
    }
}

TEST_CASE("synthesized measurement noise has the requested deviation") {
    auto mask = generate_mask(128, 128, 0.5, 3.0, 4, 3);
    MaskedFourierOperator<double> op(mask);
    Tensor<double> x({2, 128, 128});
    Rng rng(7);
    x.fill_normal(rng, 1.0);
    auto clean = synthesize_measurements(x, op, 0.0, 9);
    auto noisy = synthesize_measurements(x, op, 0.25, 9);
    REQUIRE(clean.shape() == noisy.shape());
    REQUIRE(noisy.size() >= 10000);
    double acc = 0.0;
    for (std::size_t i = 0; i < noisy.size(); ++i) {
        const double d = noisy[i] - clean[i];
        acc += d * d;
    }
    const double sd = std::sqrt(acc / static_cast<double>(noisy.size()));
    REQUIRE(sd == Approx(0.25).epsilon(0.05));

    auto same = synthesize_measurements(x, op, 0.0, 1);
    same -= op.forward(x);
    REQUIRE(same.max_abs() == 0.0);
}

TEST_CASE("pgm 16-bit round-trip is within one quantization step") {
    Rng rng(3);
    Tensor<double> img({24, 17});
    img.fill_uniform(rng, 0.0, 1.0);
    const auto path = tmp("proxcs_io_test.pgm");
    save_pgm(path, img, 16);
    auto back = load_pgm(path);
    REQUIRE(back.shape() == img.shape());
    for (std::size_t i = 0; i < img.size(); ++i)
        REQUIRE(std::abs(back[i] - img[i]) <= 1.0 / 65535.0);
    std::remove(path.c_str());
}

TEST_CASE("pgm header dimensions are honored and truncation is detected") {
    const auto path = tmp("proxcs_io_dims.pgm");
    {
        std::ofstream f(path, std::ios::binary);
        f << "P5\n# comment line\n3 2\n255\n";
        for (int i = 0; i < 6; ++i) f.put(static_cast<char>(40 * i));
    }
    auto img = load_pgm(path);
    REQUIRE(img.shape() == std::vector<int>{2, 3});
    REQUIRE(img.at(1, 2) == Approx(200.0 / 255.0));

    {
        std::ofstream f(path, std::ios::binary);
        f << "P5\n4 4\n255\n";
        f.put(1);  // far too little data
    }
    REQUIRE_THROWS_WITH(load_pgm(path), Catch::Contains("truncated"));
    {
        std::ofstream f(path, std::ios::binary);
        f << "P6\n2 2\n255\n";
    }
    REQUIRE_THROWS_AS(load_pgm(path), std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("png round-trips grayscale and rgb") {
    Rng rng(5);
    const auto path = tmp("proxcs_io_test.png");
    {
        Tensor<double> img({20, 31});
        img.fill_uniform(rng, 0.0, 1.0);
        save_png(path, img, 16);
        auto back = load_png(path);
        REQUIRE(back.shape() == img.shape());
        for (std::size_t i = 0; i < img.size(); ++i)
            REQUIRE(std::abs(back[i] - img[i]) <= 1.0 / 65535.0);
    }
    {
        Tensor<double> img({3, 12, 9});
        img.fill_uniform(rng, 0.0, 1.0);
        save_png(path, img, 8);
        auto back = load_image(path);  // magic-based dispatch
        REQUIRE(back.shape() == img.shape());
        for (std::size_t i = 0; i < img.size(); ++i)
            REQUIRE(std::abs(back[i] - img[i]) <= 1.0 / 255.0);
    }
    {
        std::ofstream f(path, std::ios::binary);
        f << "not a png";
    }
    REQUIRE_THROWS_AS(load_png(path), std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("named tensor checkpoints round-trip bit-exactly") {
    Rng rng(9);
    std::vector<NamedTensorF> records;
    Tensor<float> a({3, 4});
    a.fill_normal(rng, 1.0f);
    Tensor<float> b({2, 2, 3, 3});
    b.fill_normal(rng, 0.5f);
    records.push_back({"layer.weight", a});
    records.push_back({"layer.bias", b});

    std::ostringstream os(std::ios::binary);
    save_named_tensors(os, records);
    const std::string bytes1 = os.str();
    std::istringstream is(bytes1, std::ios::binary);
    auto loaded = load_named_tensors(is);
    REQUIRE(loaded.size() == 2);
    REQUIRE(loaded[0].name == "layer.weight");
    REQUIRE(loaded[1].value.shape() == b.shape());
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(loaded[0].value[i] == a[i]);

    std::ostringstream os2(std::ios::binary);
    save_named_tensors(os2, loaded);
    REQUIRE(os2.str() == bytes1);
}

TEST_CASE("model checkpoints round-trip through the manifest format") {
    auto mask = generate_mask(16, 16, 0.4, 3.0, 2, 3);
    MaskedFourierOperator<float> op(mask);
    GeneratorConfig gc;
    gc.residual_blocks = 1;
    gc.feature_maps = 6;
    auto model = UnrolledModel<float>::make(gc, 2, WeightMode::Shared, op, 77);
    model.alpha_raw[1] = 0.5f;
    // make running stats non-trivial
    model.generators[0].stem_bn.running_mean[0] = 0.25f;

    const auto path = tmp("proxcs_model_test.ckpt");
    save_model(path, model);
    auto loaded = load_model<float>(path, op);
    REQUIRE(loaded.copies == 2);
    REQUIRE(loaded.mode == WeightMode::Shared);
    REQUIRE(loaded.alpha_raw[1] == 0.5f);
    REQUIRE(loaded.generators[0].stem_bn.running_mean[0] == 0.25f);
    auto pa = model.generators[0].state_tensors();
    auto pb = loaded.generators[0].state_tensors();
    for (std::size_t i = 0; i < pa.size(); ++i)
        for (std::size_t j = 0; j < pa[i].value->size(); ++j)
            REQUIRE((*pa[i].value)[j] == (*pb[i].value)[j]);

    save_model(path + "2", loaded);
    REQUIRE(file_bytes(path) == file_bytes(path + "2"));
    std::remove((path + "2").c_str());
    std::remove(path.c_str());
}

TEST_CASE("measurement files round-trip byte-identically") {
    auto mask = generate_mask(16, 16, 0.3, 3.0, 2, 5);
    MaskedFourierOperator<float> op(mask);
    Rng rng(13);
    Tensor<float> x({2, 16, 16});
    x.fill_normal(rng, 1.0f);
    MeasurementFile m;
    m.height = 16;
    m.width = 16;
    m.mask_id = "mask-5";
    m.noise_sigma = 0.0f;
    m.values = op.forward(x);

    const auto path = tmp("proxcs_meas_test.bin");
    save_measurements(path, m);
    auto loaded = load_measurements(path);
    REQUIRE(loaded.height == 16);
    REQUIRE(loaded.mask_id == "mask-5");
    REQUIRE(loaded.values.shape() == m.values.shape());
    save_measurements(path + "2", loaded);
    REQUIRE(file_bytes(path) == file_bytes(path + "2"));
    std::remove((path + "2").c_str());
    std::remove(path.c_str());
}

TEST_CASE("config files parse comments, types and errors") {
    std::istringstream is(
        "# a comment\n"
        "batch_size = 4\n"
        "learning_rate=1e-3  # trailing comment\n"
        "task=mri\n"
        "clip=  0.5\n");
    auto cfg = ConfigFile::parse(is);
    REQUIRE(cfg.get_int("batch_size", 0) == 4);
    REQUIRE(cfg.get_double("learning_rate", 0.0) == Approx(1e-3));
    REQUIRE(cfg.get_string("task", "") == "mri");
    REQUIRE(cfg.get_double("clip", 0.0) == Approx(0.5));
    REQUIRE(cfg.get_int("missing", 7) == 7);
    REQUIRE_THROWS_AS(cfg.require_string("absent"), std::runtime_error);

    std::istringstream bad("justtext\n");
    REQUIRE_THROWS_WITH(ConfigFile::parse(bad), Catch::Contains("line 1"));
    std::istringstream badnum("a=xyz\n");
    REQUIRE_THROWS_AS(ConfigFile::parse(badnum).get_int("a", 0), std::runtime_error);
}

TEST_CASE("manifest: split disjointness is enforced and text round-trips") {
    auto m = DatasetManifest::for_phantoms(32, 6, 3, 42, "mask-1", 0.01);
    REQUIRE(m.entries.size() == 9);
    std::ostringstream os;
    m.save(os);
    std::istringstream is(os.str());
    auto loaded = DatasetManifest::load(is);
    REQUIRE(loaded.image_size == 32);
    REQUIRE(loaded.mask_id == "mask-1");
    REQUIRE(loaded.entries.size() == 9);
    REQUIRE(loaded.entries.front().split == "train");

    DatasetManifest overlap;
    overlap.entries.push_back({"phantom", 5, "train"});
    overlap.entries.push_back({"phantom", 5, "test"});
    REQUIRE_THROWS_WITH(overlap.validate(), Catch::Contains("overlap"));
}

TEST_CASE("mri dataset builder produces consistent normalized triples") {
    auto mask = generate_mask(32, 32, 0.3, 3.0, 4, 9);
    MaskedFourierOperator<double> op(mask);
    auto norm = ImageNormalization<double>::mri();
    auto manifest = DatasetManifest::for_phantoms(32, 3, 2, 21, "m", 0.0);
    PhantomSpec spec;
    auto ds = build_mri_dataset(op, manifest, norm, spec);
    REQUIRE(ds.train.samples.size() == 3);
    REQUIRE(ds.test.size() == 2);
    for (const auto& s : ds.test) {
        // x_truth must be the normalized physical truth
        auto t = norm.to_net(s.truth_phys);
        t -= s.net.x_truth;
        REQUIRE(t.max_abs() < 1e-12);
        // measurements must equal Phi applied to the normalized truth
        auto y = op.forward(s.net.x_truth);
        y -= s.net.y;
        REQUIRE(y.max_abs() < 1e-10);
        // and x_tilde is their zero-filled adjoint
        auto zf = op.adjoint(s.net.y);
        zf -= s.net.x_tilde;
        REQUIRE(zf.max_abs() < 1e-12);
    }
}

TEST_CASE("superres dataset: initializer is the approximate deconvolution") {
    BoxDownsampleOperator<double> op(3, 32, 32);
    DatasetManifest manifest;
    manifest.image_size = 32;
    manifest.entries.push_back({"texture", 1, "train"});
    manifest.entries.push_back({"texture", 2, "test"});
    auto ds = build_superres_dataset(op, manifest);
    REQUIRE(ds.train.samples.size() == 1);
    REQUIRE(ds.test.size() == 1);
    const auto& s = ds.train.samples[0];
    auto x0 = approx_deconvolve(op, s.y, 5, 0.1);
    x0 -= s.x_tilde;
    REQUIRE(x0.max_abs() == 0.0);
    auto y = op.forward(s.x_truth);
    y -= s.y;
    REQUIRE(y.max_abs() == 0.0);
}
