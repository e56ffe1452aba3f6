#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include "proxcs/checkpoint.hpp"
#include "proxcs/tensor.hpp"

namespace proxcs {

struct MeasurementFile {
    int height = 0;
    int width = 0;
    std::string mask_id;
    float noise_sigma = 0.0f;
    Tensor<float> values;  // [M,2] interleaved (re, im) in row-major mask order
};

/// Binary measurement format: magic, grid size, mask id, noise sigma, then
/// the sampled complex values as interleaved little-endian float pairs.
inline void save_measurements(const std::string& path, const MeasurementFile& m) {
    if (m.values.rank() != 2 || m.values.dim(1) != 2)
        throw std::invalid_argument("save_measurements: expected [M,2] values");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_measurements: cannot open " + path);
    f.write("PXMEAS01", 8);
    detail::put_u32le(f, static_cast<std::uint32_t>(m.height));
    detail::put_u32le(f, static_cast<std::uint32_t>(m.width));
    detail::put_u32le(f, static_cast<std::uint32_t>(m.mask_id.size()));
    f.write(m.mask_id.data(), static_cast<std::streamsize>(m.mask_id.size()));
    detail::put_f32le(f, m.noise_sigma);
    detail::put_u32le(f, static_cast<std::uint32_t>(m.values.dim(0)));
    for (std::size_t i = 0; i < m.values.size(); ++i) detail::put_f32le(f, m.values[i]);
    if (!f) throw std::runtime_error("save_measurements: write failed for " + path);
}

inline MeasurementFile load_measurements(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_measurements: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::string(magic, 8) != "PXMEAS01")
        throw std::runtime_error("load_measurements: bad magic in " + path);
    MeasurementFile m;
    m.height = static_cast<int>(detail::get_u32le(f));
    m.width = static_cast<int>(detail::get_u32le(f));
    const std::uint32_t id_len = detail::get_u32le(f);
    m.mask_id.resize(id_len);
    f.read(m.mask_id.data(), id_len);
    m.noise_sigma = detail::get_f32le(f);
    const std::uint32_t count = detail::get_u32le(f);
    m.values = Tensor<float>({static_cast<int>(count), 2});
    for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] = detail::get_f32le(f);
    if (!f) throw std::runtime_error("load_measurements: truncated file " + path);
    return m;
}

}  // namespace proxcs
