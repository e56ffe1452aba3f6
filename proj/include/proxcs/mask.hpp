#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxcs/rng.hpp"

namespace proxcs {

/// k-space sampling pattern in centered layout: index (H/2, W/2) is the DC
/// coefficient, matching the usual shifted spectrum view.
struct SamplingMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> included;  // row-major, centered layout
    double fraction = 0.0;

    bool at(int row, int col) const {
        return included[static_cast<std::size_t>(row) * width + col] != 0;
    }
    long count() const {
        return std::accumulate(included.begin(), included.end(), 0L,
                               [](long a, std::uint8_t b) { return a + (b ? 1 : 0); });
    }
};

/// Variable-density mask: inclusion probability decays with the normalized
/// distance r from the spectrum center as (1-r)^decay_power, a centered
/// calib_size x calib_size block is always sampled, and the realized count is
/// corrected to exactly ceil(fraction * H * W).
inline SamplingMask generate_mask(int height, int width, double fraction, double decay_power,
                                  int calib_size, std::uint64_t seed) {
    if (height < 1 || width < 1) throw std::invalid_argument("generate_mask: empty grid");
    if (fraction <= 0.0 || fraction > 1.0)
        throw std::invalid_argument("generate_mask: fraction must be in (0,1]");
    if (calib_size < 0 || calib_size > std::min(height, width))
        throw std::invalid_argument("generate_mask: calibration block larger than grid");

    const long total = static_cast<long>(height) * width;
    const long target = static_cast<long>(std::ceil(fraction * static_cast<double>(total)));
    const long calib_count = static_cast<long>(calib_size) * calib_size;
    if (target < calib_count)
        throw std::invalid_argument("generate_mask: fraction too small to cover the calibration block");

    const double cy = (height - 1) / 2.0;
    const double cx = (width - 1) / 2.0;
    const double rmax = std::sqrt(cy * cy + cx * cx);
    const int cal_r0 = height / 2 - calib_size / 2;
    const int cal_c0 = width / 2 - calib_size / 2;
    auto in_calib = [&](int r, int c) {
        return r >= cal_r0 && r < cal_r0 + calib_size && c >= cal_c0 && c < cal_c0 + calib_size;
    };

    std::vector<double> density(static_cast<std::size_t>(total));
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const double dr = (r - cy) / rmax, dc = (c - cx) / rmax;
            const double rad = std::min(1.0, std::sqrt(dr * dr + dc * dc));
            density[static_cast<std::size_t>(r) * width + c] = std::pow(1.0 - rad, decay_power);
        }
    }

    // scale so expected count of the Bernoulli draw hits the target
    const long free_target = target - calib_count;
    double free_density = 0.0;
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            if (!in_calib(r, c)) free_density += density[static_cast<std::size_t>(r) * width + c];
    const double scale = free_density > 0.0 ? static_cast<double>(free_target) / free_density : 0.0;

    SamplingMask mask;
    mask.height = height;
    mask.width = width;
    mask.fraction = fraction;
    mask.included.assign(static_cast<std::size_t>(total), 0);

    Rng rng(seed, 0x6d61736bull);  // "mask"
    std::vector<double> jitter(static_cast<std::size_t>(total));
    for (auto& j : jitter) j = rng.uniform();

    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * width + c;
            if (in_calib(r, c)) {
                mask.included[i] = 1;
            } else {
                const double p = std::min(1.0, scale * density[i]);
                mask.included[i] = jitter[i] < p ? 1 : 0;
            }
        }
    }

    // cardinality correction: greedy add/remove orders by density with the
    // seed's jitter breaking ties, so the result is deterministic
    long realized = mask.count();
    if (realized != target) {
        std::vector<std::size_t> order;
        order.reserve(static_cast<std::size_t>(total));
        for (std::size_t i = 0; i < static_cast<std::size_t>(total); ++i) {
            const int r = static_cast<int>(i) / width, c = static_cast<int>(i) % width;
            if (in_calib(r, c)) continue;
            if (realized > target && mask.included[i]) order.push_back(i);
            if (realized < target && !mask.included[i]) order.push_back(i);
        }
        const bool removing = realized > target;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double da = density[a] + 1e-9 * jitter[a];
            const double db = density[b] + 1e-9 * jitter[b];
            return removing ? da < db : da > db;
        });
        for (std::size_t k = 0; k < order.size() && realized != target; ++k) {
            mask.included[order[k]] = removing ? 0 : 1;
            realized += removing ? -1 : +1;
        }
    }
    return mask;
}

// ---------------------------------------------------------------------------
// Serialization: PGM (0/255) for inspection, compact bitset for exact reload.
// ---------------------------------------------------------------------------

inline void save_mask_pgm(const SamplingMask& mask, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_mask_pgm: cannot open " + path);
    f << "P5\n" << mask.width << " " << mask.height << "\n255\n";
    for (std::uint8_t b : mask.included) f.put(b ? static_cast<char>(255) : 0);
    if (!f) throw std::runtime_error("save_mask_pgm: write failed for " + path);
}

inline SamplingMask load_mask_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_mask_pgm: cannot open " + path);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    f >> magic >> w >> h >> maxval;
    if (magic != "P5" || w < 1 || h < 1 || maxval != 255)
        throw std::runtime_error("load_mask_pgm: not an 8-bit P5 file: " + path);
    f.get();  // single whitespace after header
    SamplingMask mask;
    mask.height = h;
    mask.width = w;
    mask.included.assign(static_cast<std::size_t>(w) * h, 0);
    for (auto& b : mask.included) {
        const int v = f.get();
        if (v == EOF) throw std::runtime_error("load_mask_pgm: truncated file " + path);
        b = v >= 128 ? 1 : 0;
    }
    mask.fraction = static_cast<double>(mask.count()) / (static_cast<double>(w) * h);
    return mask;
}

inline void save_mask_bitset(const SamplingMask& mask, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_mask_bitset: cannot open " + path);
    f.write("PXMK", 4);
    auto put_u32 = [&](std::uint32_t v) {
        char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                     static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
        f.write(b, 4);
    };
    put_u32(static_cast<std::uint32_t>(mask.height));
    put_u32(static_cast<std::uint32_t>(mask.width));
    const double fr = mask.fraction;
    f.write(reinterpret_cast<const char*>(&fr), sizeof(double));
    std::uint8_t byte = 0;
    int nbits = 0;
    for (std::size_t i = 0; i < mask.included.size(); ++i) {
        byte = static_cast<std::uint8_t>(byte | ((mask.included[i] ? 1 : 0) << nbits));
        if (++nbits == 8) {
            f.put(static_cast<char>(byte));
            byte = 0;
            nbits = 0;
        }
    }
    if (nbits > 0) f.put(static_cast<char>(byte));
    if (!f) throw std::runtime_error("save_mask_bitset: write failed for " + path);
}

inline SamplingMask load_mask_bitset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_mask_bitset: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::string(magic, 4) != "PXMK")
        throw std::runtime_error("load_mask_bitset: bad magic in " + path);
    auto get_u32 = [&]() {
        unsigned char b[4];
        f.read(reinterpret_cast<char*>(b), 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    };
    SamplingMask mask;
    mask.height = static_cast<int>(get_u32());
    mask.width = static_cast<int>(get_u32());
    f.read(reinterpret_cast<char*>(&mask.fraction), sizeof(double));
    if (!f || mask.height < 1 || mask.width < 1)
        throw std::runtime_error("load_mask_bitset: corrupt header in " + path);
    const std::size_t total = static_cast<std::size_t>(mask.height) * mask.width;
    mask.included.assign(total, 0);
    std::uint8_t byte = 0;
    for (std::size_t i = 0; i < total; ++i) {
        if (i % 8 == 0) {
            const int v = f.get();
            if (v == EOF) throw std::runtime_error("load_mask_bitset: truncated file " + path);
            byte = static_cast<std::uint8_t>(v);
        }
        mask.included[i] = (byte >> (i % 8)) & 1;
    }
    return mask;
}

}  // namespace proxcs
