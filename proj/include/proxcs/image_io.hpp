#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxcs/tensor.hpp"

namespace proxcs {

enum class ImageFormat { Pgm, Png };

namespace detail {

inline void put_be16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xff));
}

inline void put_be32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v >> 24));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

inline std::uint32_t crc32(const unsigned char* data, std::size_t n, std::uint32_t crc = 0) {
    static const auto table = [] {
        std::vector<std::uint32_t> t(256);
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    crc ^= 0xffffffffu;
    for (std::size_t i = 0; i < n; ++i) crc = table[(crc ^ data[i]) & 0xff] ^ (crc >> 8);
    return crc ^ 0xffffffffu;
}

inline std::uint32_t adler32(const unsigned char* data, std::size_t n) {
    std::uint32_t a = 1, b = 0;
    for (std::size_t i = 0; i < n; ++i) {
        a = (a + data[i]) % 65521u;
        b = (b + a) % 65521u;
    }
    return (b << 16) | a;
}

/// zlib stream with stored (uncompressed) deflate blocks.
inline std::string zlib_stored(const std::string& raw) {
    std::string out;
    out.push_back(0x78);
    out.push_back(0x01);
    std::size_t pos = 0;
    do {
        const std::size_t chunk = std::min<std::size_t>(65535, raw.size() - pos);
        const bool final = pos + chunk == raw.size();
        out.push_back(final ? 1 : 0);
        out.push_back(static_cast<char>(chunk & 0xff));
        out.push_back(static_cast<char>(chunk >> 8));
        out.push_back(static_cast<char>(~chunk & 0xff));
        out.push_back(static_cast<char>((~chunk >> 8) & 0xff));
        out.append(raw, pos, chunk);
        pos += chunk;
    } while (pos < raw.size());
    put_be32(out, adler32(reinterpret_cast<const unsigned char*>(raw.data()), raw.size()));
    return out;
}

/// Inflates a zlib stream consisting of stored blocks only (the format this
/// writer emits); compressed PNGs from other tools are rejected.
inline std::string zlib_stored_inflate(const std::string& z) {
    if (z.size() < 6) throw std::runtime_error("png: truncated zlib stream");
    if ((static_cast<unsigned char>(z[0]) & 0x0f) != 8)
        throw std::runtime_error("png: unsupported zlib compression method");
    std::string out;
    std::size_t pos = 2;
    bool final = false;
    while (!final) {
        if (pos + 5 > z.size()) throw std::runtime_error("png: truncated deflate block");
        const unsigned char header = static_cast<unsigned char>(z[pos]);
        final = header & 1;
        if ((header >> 1) != 0)
            throw std::runtime_error("png: compressed deflate blocks are not supported by this reader");
        const std::size_t len = static_cast<unsigned char>(z[pos + 1]) |
                                (static_cast<std::size_t>(static_cast<unsigned char>(z[pos + 2])) << 8);
        pos += 5;
        if (pos + len > z.size()) throw std::runtime_error("png: truncated stored block");
        out.append(z, pos, len);
        pos += len;
    }
    return out;
}

inline void write_png_chunk(std::ofstream& f, const char type[4], const std::string& payload) {
    std::string head;
    put_be32(head, static_cast<std::uint32_t>(payload.size()));
    f.write(head.data(), 4);
    std::string body(type, 4);
    body += payload;
    f.write(body.data(), static_cast<std::streamsize>(body.size()));
    std::string crc;
    put_be32(crc, crc32(reinterpret_cast<const unsigned char*>(body.data()), body.size()));
    f.write(crc.data(), 4);
}

}  // namespace detail

/// Writes values in [0,1] as an 8- or 16-bit binary PGM (16-bit big-endian).
inline void save_pgm(const std::string& path, const Tensor<double>& img, int bit_depth = 16) {
    if (img.rank() != 2) throw std::invalid_argument("save_pgm: expected [H,W] image");
    if (bit_depth != 8 && bit_depth != 16) throw std::invalid_argument("save_pgm: bit depth must be 8 or 16");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_pgm: cannot open " + path);
    const int maxval = bit_depth == 8 ? 255 : 65535;
    f << "P5\n" << img.dim(1) << " " << img.dim(0) << "\n" << maxval << "\n";
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double v = std::clamp(img[i], 0.0, 1.0);
        const int q = static_cast<int>(v * maxval + 0.5);
        if (bit_depth == 8) {
            f.put(static_cast<char>(q));
        } else {
            f.put(static_cast<char>(q >> 8));
            f.put(static_cast<char>(q & 0xff));
        }
    }
    if (!f) throw std::runtime_error("save_pgm: write failed for " + path);
}

inline Tensor<double> load_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_pgm: cannot open " + path);
    std::string magic;
    f >> magic;
    if (magic != "P5") throw std::runtime_error("load_pgm: not a binary PGM: " + path);
    auto next_int = [&]() {
        // skip whitespace and '#' comment lines
        int c = f.get();
        while (c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '#') {
            if (c == '#')
                while (c != '\n' && c != EOF) c = f.get();
            c = f.get();
        }
        int v = 0;
        bool any = false;
        while (c >= '0' && c <= '9') {
            v = v * 10 + (c - '0');
            any = true;
            c = f.get();
        }
        if (!any) throw std::runtime_error("load_pgm: malformed header in " + path);
        return v;
    };
    const int w = next_int(), h = next_int(), maxval = next_int();
    if (w < 1 || h < 1 || (maxval != 255 && maxval != 65535))
        throw std::runtime_error("load_pgm: unsupported bit depth or size in " + path);
    Tensor<double> img({h, w});
    for (std::size_t i = 0; i < img.size(); ++i) {
        int v = f.get();
        if (v == EOF) throw std::runtime_error("load_pgm: truncated file " + path);
        if (maxval == 65535) {
            const int lo = f.get();
            if (lo == EOF) throw std::runtime_error("load_pgm: truncated file " + path);
            v = (v << 8) | lo;
        }
        img[i] = static_cast<double>(v) / maxval;
    }
    return img;
}

/// Grayscale [H,W] or RGB [3,H,W] PNG with values in [0,1]. The deflate
/// stream uses stored blocks; load_png reads exactly this subset.
inline void save_png(const std::string& path, const Tensor<double>& img, int bit_depth = 16) {
    const bool rgb = img.rank() == 3 && img.dim(0) == 3;
    if (!rgb && img.rank() != 2)
        throw std::invalid_argument("save_png: expected [H,W] or [3,H,W] image");
    if (bit_depth != 8 && bit_depth != 16) throw std::invalid_argument("save_png: bit depth must be 8 or 16");
    const int h = rgb ? img.dim(1) : img.dim(0);
    const int w = rgb ? img.dim(2) : img.dim(1);
    const int channels = rgb ? 3 : 1;
    const int maxval = bit_depth == 8 ? 255 : 65535;

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_png: cannot open " + path);
    static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    f.write(reinterpret_cast<const char*>(sig), 8);

    std::string ihdr;
    detail::put_be32(ihdr, static_cast<std::uint32_t>(w));
    detail::put_be32(ihdr, static_cast<std::uint32_t>(h));
    ihdr.push_back(static_cast<char>(bit_depth));
    ihdr.push_back(rgb ? 2 : 0);  // color type
    ihdr.push_back(0);            // compression
    ihdr.push_back(0);            // filter method
    ihdr.push_back(0);            // no interlace
    detail::write_png_chunk(f, "IHDR", ihdr);

    std::string raw;
    for (int y = 0; y < h; ++y) {
        raw.push_back(0);  // filter type 0
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < channels; ++c) {
                const double v = std::clamp(rgb ? img.at(c, y, x) : img.at(y, x), 0.0, 1.0);
                const int q = static_cast<int>(v * maxval + 0.5);
                if (bit_depth == 16) detail::put_be16(raw, static_cast<std::uint16_t>(q));
                else raw.push_back(static_cast<char>(q));
            }
        }
    }
    detail::write_png_chunk(f, "IDAT", detail::zlib_stored(raw));
    detail::write_png_chunk(f, "IEND", "");
    if (!f) throw std::runtime_error("save_png: write failed for " + path);
}

inline Tensor<double> load_png(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_png: cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() < 8 || !std::equal(sig, sig + 8, reinterpret_cast<const unsigned char*>(bytes.data())))
        throw std::runtime_error("load_png: not a PNG file: " + path);

    auto be32 = [&](std::size_t pos) {
        if (pos + 4 > bytes.size()) throw std::runtime_error("load_png: truncated file " + path);
        const auto* b = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
        return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
               (static_cast<std::uint32_t>(b[2]) << 8) | b[3];
    };

    int w = 0, h = 0, bit_depth = 0, color = -1;
    std::string idat;
    std::size_t pos = 8;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t len = be32(pos);
        const std::string type = bytes.substr(pos + 4, 4);
        if (pos + 12 + len > bytes.size()) throw std::runtime_error("load_png: truncated chunk in " + path);
        const std::string payload = bytes.substr(pos + 8, len);
        if (type == "IHDR") {
            w = static_cast<int>(be32(pos + 8));
            h = static_cast<int>(be32(pos + 12));
            bit_depth = static_cast<unsigned char>(payload[8]);
            color = static_cast<unsigned char>(payload[9]);
            if (payload[12] != 0) throw std::runtime_error("load_png: interlaced PNGs unsupported");
        } else if (type == "IDAT") {
            idat += payload;
        } else if (type == "IEND") {
            break;
        }
        pos += 12 + len;
    }
    if (w < 1 || h < 1) throw std::runtime_error("load_png: missing IHDR in " + path);
    if ((bit_depth != 8 && bit_depth != 16) || (color != 0 && color != 2))
        throw std::runtime_error("load_png: unsupported bit depth or color type in " + path);
    const int channels = color == 2 ? 3 : 1;
    const std::string raw = detail::zlib_stored_inflate(idat);
    const std::size_t bpp = static_cast<std::size_t>(channels) * (bit_depth / 8);
    const std::size_t stride = 1 + bpp * static_cast<std::size_t>(w);
    if (raw.size() != stride * static_cast<std::size_t>(h))
        throw std::runtime_error("load_png: pixel data size mismatch in " + path);

    Tensor<double> img(channels == 3 ? std::vector<int>{3, h, w} : std::vector<int>{h, w});
    const double maxval = bit_depth == 8 ? 255.0 : 65535.0;
    for (int y = 0; y < h; ++y) {
        const auto* row = reinterpret_cast<const unsigned char*>(raw.data() + y * stride);
        if (row[0] != 0) throw std::runtime_error("load_png: filtered rows unsupported by this reader");
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < channels; ++c) {
                const unsigned char* px = row + 1 + (static_cast<std::size_t>(x) * channels + c) * (bit_depth / 8);
                const int v = bit_depth == 8 ? px[0] : ((px[0] << 8) | px[1]);
                if (channels == 3) img.at(c, y, x) = v / maxval;
                else img.at(y, x) = v / maxval;
            }
        }
    }
    return img;
}

inline void save_image(const std::string& path, const Tensor<double>& img, ImageFormat format,
                       int bit_depth = 16) {
    if (format == ImageFormat::Pgm) save_pgm(path, img, bit_depth);
    else save_png(path, img, bit_depth);
}

/// Dispatches on the file's magic bytes.
inline Tensor<double> load_image(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_image: cannot open " + path);
    const int c0 = f.get();
    f.close();
    if (c0 == 'P') return load_pgm(path);
    if (c0 == 0x89) return load_png(path);
    throw std::runtime_error("load_image: unrecognized image format: " + path);
}

inline ImageFormat format_from_path(const std::string& path) {
    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    if (ext == "png") return ImageFormat::Png;
    return ImageFormat::Pgm;
}

}  // namespace proxcs
