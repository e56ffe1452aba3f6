#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxcs/generator.hpp"
#include "proxcs/unrolled.hpp"

namespace proxcs {

namespace detail {

inline void put_u32le(std::ostream& os, std::uint32_t v) {
    char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                 static_cast<char>(v >> 24)};
    os.write(b, 4);
}

inline std::uint32_t get_u32le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("checkpoint: truncated stream");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_f32le(std::ostream& os, float v) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    put_u32le(os, u);
}

inline float get_f32le(std::istream& is) {
    const std::uint32_t u = get_u32le(is);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

}  // namespace detail

struct NamedTensorF {
    std::string name;
    Tensor<float> value;
};

/// Parameter checkpoint: "PXCK" magic, format version, record count, then
/// per-record (name, shape, little-endian float32 data). Round-trips
/// bit-exactly.
inline void save_named_tensors(std::ostream& os, const std::vector<NamedTensorF>& records) {
    os.write("PXCK", 4);
    detail::put_u32le(os, 1);  // format version
    detail::put_u32le(os, static_cast<std::uint32_t>(records.size()));
    for (const auto& r : records) {
        detail::put_u32le(os, static_cast<std::uint32_t>(r.name.size()));
        os.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
        detail::put_u32le(os, static_cast<std::uint32_t>(r.value.rank()));
        for (int d = 0; d < r.value.rank(); ++d)
            detail::put_u32le(os, static_cast<std::uint32_t>(r.value.dim(d)));
        for (std::size_t i = 0; i < r.value.size(); ++i) detail::put_f32le(os, r.value[i]);
    }
    if (!os) throw std::runtime_error("checkpoint: write failed");
}

inline std::vector<NamedTensorF> load_named_tensors(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != "PXCK")
        throw std::runtime_error("checkpoint: bad magic");
    const std::uint32_t version = detail::get_u32le(is);
    if (version != 1) throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    const std::uint32_t count = detail::get_u32le(is);
    std::vector<NamedTensorF> records;
    records.reserve(count);
    for (std::uint32_t r = 0; r < count; ++r) {
        const std::uint32_t name_len = detail::get_u32le(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const std::uint32_t rank = detail::get_u32le(is);
        std::vector<int> shape(rank);
        for (auto& d : shape) d = static_cast<int>(detail::get_u32le(is));
        Tensor<float> t(shape);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = detail::get_f32le(is);
        if (!is) throw std::runtime_error("checkpoint: truncated record " + name);
        records.push_back({std::move(name), std::move(t)});
    }
    return records;
}

namespace detail {

template <typename T>
std::vector<NamedTensorF> model_records(UnrolledModel<T>& model) {
    std::vector<NamedTensorF> records;
    for (std::size_t s = 0; s < model.generators.size(); ++s) {
        const std::string prefix = "g" + std::to_string(s) + ".";
        for (auto& p : model.generators[s].state_tensors(prefix))
            records.push_back({p.name, p.value->template cast<float>()});
    }
    records.push_back({"alpha_raw", model.alpha_raw.template cast<float>()});
    return records;
}

}  // namespace detail

/// Model checkpoint: a line-oriented key=value text manifest (copies, weight
/// mode, generator configuration, alpha values) followed by the binary
/// parameter blob.
template <typename T>
void save_model(const std::string& path, UnrolledModel<T>& model) {
    std::ostringstream blob(std::ios::binary);
    save_named_tensors(blob, detail::model_records(model));
    const std::string bytes = blob.str();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_model: cannot open " + path);
    f << "PROXCS-MODEL 1\n";
    f << "copies=" << model.copies << "\n";
    f << "weight_mode=" << weight_mode_name(model.mode) << "\n";
    const auto& cfg = model.generators.front().config;
    f << "residual_blocks=" << cfg.residual_blocks << "\n";
    f << "feature_maps=" << cfg.feature_maps << "\n";
    f << "in_channels=" << cfg.in_channels << "\n";
    f << "out_channels=" << cfg.out_channels << "\n";
    for (int k = 0; k < model.copies; ++k) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(model.alpha(k)));
        f << "alpha_" << k << "=" << buf << "\n";
    }
    f << "PARAMS " << bytes.size() << "\n";
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("save_model: write failed for " + path);
}

template <typename T>
UnrolledModel<T> load_model(const std::string& path, const LinearOperator<T>& op) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_model: cannot open " + path);
    std::string line;
    if (!std::getline(f, line) || line != "PROXCS-MODEL 1")
        throw std::runtime_error("load_model: bad header in " + path);

    GeneratorConfig cfg;
    int copies = 0;
    WeightMode mode = WeightMode::Shared;
    std::size_t blob_size = 0;
    while (std::getline(f, line)) {
        if (line.rfind("PARAMS ", 0) == 0) {
            blob_size = std::stoull(line.substr(7));
            break;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("load_model: bad manifest line: " + line);
        const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        if (key == "copies") copies = std::stoi(val);
        else if (key == "weight_mode") mode = parse_weight_mode(val);
        else if (key == "residual_blocks") cfg.residual_blocks = std::stoi(val);
        else if (key == "feature_maps") cfg.feature_maps = std::stoi(val);
        else if (key == "in_channels") cfg.in_channels = std::stoi(val);
        else if (key == "out_channels") cfg.out_channels = std::stoi(val);
        else if (key.rfind("alpha_", 0) == 0) { /* informational; binary blob is authoritative */ }
        else throw std::runtime_error("load_model: unknown manifest key '" + key + "'");
    }
    if (copies < 1 || blob_size == 0) throw std::runtime_error("load_model: incomplete manifest in " + path);

    std::string bytes(blob_size, '\0');
    f.read(bytes.data(), static_cast<std::streamsize>(blob_size));
    if (!f) throw std::runtime_error("load_model: truncated parameter blob in " + path);
    std::istringstream blob(bytes, std::ios::binary);
    auto records = load_named_tensors(blob);

    auto model = UnrolledModel<T>::make(cfg, copies, mode, op, /*seed=*/0);
    std::size_t idx = 0;
    auto take = [&](const std::string& name, Tensor<T>* dst) {
        if (idx >= records.size() || records[idx].name != name)
            throw std::runtime_error("load_model: parameter order mismatch at '" + name + "'");
        if (records[idx].value.shape() != dst->shape())
            throw std::runtime_error("load_model: shape mismatch for '" + name + "'");
        *dst = records[idx].value.template cast<T>();
        ++idx;
    };
    for (std::size_t s = 0; s < model.generators.size(); ++s) {
        const std::string prefix = "g" + std::to_string(s) + ".";
        for (auto& p : model.generators[s].state_tensors(prefix)) take(p.name, p.value);
    }
    take("alpha_raw", &model.alpha_raw);
    return model;
}

}  // namespace proxcs
