#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxcs/normalization.hpp"
#include "proxcs/operators.hpp"
#include "proxcs/phantom.hpp"
#include "proxcs/train.hpp"

namespace proxcs {

struct ManifestEntry {
    std::string source;  // "phantom", "texture", or an image path
    std::uint64_t seed = 0;
    std::string split;  // "train" or "test"
};

/// Dataset description: which images (by source and seed) belong to which
/// split, plus the operator configuration they are measured with.
struct DatasetManifest {
    int image_size = 64;
    std::string mask_id;
    double noise_sigma = 0.0;
    std::vector<ManifestEntry> entries;

    void validate() const {
        std::set<std::pair<std::string, std::uint64_t>> train, test;
        for (const auto& e : entries) {
            if (e.split == "train")
                train.insert({e.source, e.seed});
            else if (e.split == "test")
                test.insert({e.source, e.seed});
            else
                throw std::runtime_error("manifest: unknown split '" + e.split + "'");
        }
        for (const auto& k : test)
            if (train.count(k))
                throw std::runtime_error("manifest: train and test sets overlap on " + k.first +
                                         " seed " + std::to_string(k.second));
    }

    void save(std::ostream& os) const {
        os << "image_size=" << image_size << "\n";
        os << "mask_id=" << mask_id << "\n";
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.9g", noise_sigma);
        os << "noise_sigma=" << buf << "\n";
        for (const auto& e : entries)
            os << "entry=" << e.split << "," << e.source << "," << e.seed << "\n";
    }

    static DatasetManifest load(std::istream& is) {
        DatasetManifest m;
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty() || line[0] == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw std::runtime_error("manifest: bad line: " + line);
            const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
            if (key == "image_size")
                m.image_size = std::stoi(val);
            else if (key == "mask_id")
                m.mask_id = val;
            else if (key == "noise_sigma")
                m.noise_sigma = std::stod(val);
            else if (key == "entry") {
                std::istringstream es(val);
                ManifestEntry e;
                std::string seed;
                if (!std::getline(es, e.split, ',') || !std::getline(es, e.source, ',') ||
                    !std::getline(es, seed))
                    throw std::runtime_error("manifest: bad entry: " + val);
                e.seed = std::stoull(seed);
                m.entries.push_back(e);
            } else {
                throw std::runtime_error("manifest: unknown key '" + key + "'");
            }
        }
        m.validate();
        return m;
    }

    static DatasetManifest for_phantoms(int image_size, int train_count, int test_count,
                                        std::uint64_t base_seed, const std::string& mask_id,
                                        double noise_sigma, const std::string& source = "phantom") {
        DatasetManifest m;
        m.image_size = image_size;
        m.mask_id = mask_id;
        m.noise_sigma = noise_sigma;
        for (int i = 0; i < train_count; ++i)
            m.entries.push_back({source, Rng::mix(base_seed, 0x10000u + static_cast<std::uint64_t>(i)), "train"});
        for (int i = 0; i < test_count; ++i)
            m.entries.push_back({source, Rng::mix(base_seed, 0x20000u + static_cast<std::uint64_t>(i)), "test"});
        m.validate();
        return m;
    }
};

/// y = Phi x + complex white Gaussian noise of per-component sigma.
template <typename T>
Tensor<T> synthesize_measurements(const Tensor<T>& x, const LinearOperator<T>& op, T noise_sigma,
                                  std::uint64_t seed) {
    Tensor<T> y = op.forward(x);
    if (noise_sigma > T(0)) {
        Rng rng(seed, 0x6e6f6973ull);  // "nois"
        for (std::size_t i = 0; i < y.size(); ++i)
            y[i] += static_cast<T>(rng.normal()) * noise_sigma;
    }
    return y;
}

/// One evaluation item: the network-domain training triple plus the
/// physical-domain truth for metric computation.
template <typename T>
struct EvalSample {
    TrainSample<T> net;
    Tensor<T> truth_phys;
};

/// Builds the normalized MRI problem for one physical image:
/// y_net = a y_phys + Phi(offset (1+i)), x_tilde = Phi^H y_net.
template <typename T>
TrainSample<T> make_mri_sample(const MaskedFourierOperator<T>& op, const Tensor<T>& truth_phys,
                               const ImageNormalization<T>& norm, T noise_sigma, std::uint64_t seed,
                               const Tensor<T>* measurement_offset = nullptr) {
    TrainSample<T> s;
    s.y = synthesize_measurements(truth_phys, op, noise_sigma, seed);
    s.y *= norm.scale;
    if (norm.offset != T(0)) {
        if (measurement_offset) {
            s.y += *measurement_offset;
        } else {
            Tensor<T> ones(op.input_shape());
            ones.fill(T(1));
            s.y.axpy(norm.offset, op.forward(ones));
        }
    }
    s.x_tilde = op.adjoint(s.y);
    s.x_truth = norm.to_net(truth_phys);
    return s;
}

/// Phi applied to the all-ones complex image, scaled by the normalization
/// offset; precompute once per mask and pass to make_mri_sample.
template <typename T>
Tensor<T> mri_measurement_offset(const MaskedFourierOperator<T>& op, const ImageNormalization<T>& norm) {
    Tensor<T> ones(op.input_shape());
    ones.fill(T(1));
    Tensor<T> y = op.forward(ones);
    y *= norm.offset;
    return y;
}

template <typename T>
struct MriDataset {
    TrainDataset<T> train;
    std::vector<EvalSample<T>> test;
};

template <typename T>
MriDataset<T> build_mri_dataset(const MaskedFourierOperator<T>& op, const DatasetManifest& manifest,
                                const ImageNormalization<T>& norm, const PhantomSpec& phantom_template) {
    manifest.validate();
    MriDataset<T> ds;
    const Tensor<T> offset = mri_measurement_offset(op, norm);
    for (const auto& e : manifest.entries) {
        if (e.source != "phantom")
            throw std::runtime_error("build_mri_dataset: unsupported source '" + e.source + "'");
        PhantomSpec spec = phantom_template;
        spec.size = manifest.image_size;
        spec.seed = e.seed;
        Tensor<T> truth_phys = generate_phantom(spec).to_channels().template cast<T>();
        TrainSample<T> s = make_mri_sample(op, truth_phys, norm, static_cast<T>(manifest.noise_sigma),
                                           e.seed, &offset);
        if (e.split == "train") {
            ds.train.samples.push_back(std::move(s));
        } else {
            ds.test.push_back({std::move(s), std::move(truth_phys)});
        }
    }
    return ds;
}

template <typename T>
struct SuperresDataset {
    TrainDataset<T> train;
    std::vector<EvalSample<T>> test;
};

template <typename T>
SuperresDataset<T> build_superres_dataset(const BoxDownsampleOperator<T>& op,
                                          const DatasetManifest& manifest) {
    manifest.validate();
    SuperresDataset<T> ds;
    for (const auto& e : manifest.entries) {
        if (e.source != "texture")
            throw std::runtime_error("build_superres_dataset: unsupported source '" + e.source + "'");
        Tensor<T> truth = generate_rgb_texture(manifest.image_size, e.seed).template cast<T>();
        TrainSample<T> s;
        s.y = synthesize_measurements(truth, op, static_cast<T>(manifest.noise_sigma), e.seed);
        s.x_tilde = approx_deconvolve(op, s.y, 5, T(0.1));
        s.x_truth = truth;
        if (e.split == "train") {
            ds.train.samples.push_back(std::move(s));
        } else {
            ds.test.push_back({std::move(s), std::move(truth)});
        }
    }
    return ds;
}

}  // namespace proxcs
