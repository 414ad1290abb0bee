#include "lmforge/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace lmforge {

namespace {

void write_f32_le(std::ofstream& out, float value) {
    uint32_t bits = std::bit_cast<uint32_t>(value);
    unsigned char bytes[4] = {
        static_cast<unsigned char>(bits & 0xFF),
        static_cast<unsigned char>((bits >> 8) & 0xFF),
        static_cast<unsigned char>((bits >> 16) & 0xFF),
        static_cast<unsigned char>((bits >> 24) & 0xFF),
    };
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

float read_f32_le(std::ifstream& in, const std::string& path) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4))
        throw std::runtime_error(path + ": checkpoint truncated");
    uint32_t bits = static_cast<uint32_t>(bytes[0]) | (static_cast<uint32_t>(bytes[1]) << 8) |
                    (static_cast<uint32_t>(bytes[2]) << 16) |
                    (static_cast<uint32_t>(bytes[3]) << 24);
    return std::bit_cast<float>(bits);
}

} // namespace

template <typename T>
void save_checkpoint(const ModelParams<T>& params, const std::string& path) {
    nlohmann::ordered_json header;
    header["version"] = "ckpt-v1";
    header["config"] = nlohmann::ordered_json::parse(params.config.to_json());
    auto& manifest = header["params"] = nlohmann::ordered_json::array();
    size_t byte_offset = 0;
    for (const auto& info : params.layout.manifest) {
        manifest.push_back({{"name", info.name},
                            {"shape", info.shape},
                            {"offset", byte_offset},
                            {"size", info.size}});
        byte_offset += info.size * sizeof(float);
    }

    // Atomic write: temp file then rename.
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write checkpoint: " + tmp);
        out << header.dump() << '\n';
        for (const auto& info : params.layout.manifest) {
            const T* ptr = params.data.data() + info.offset;
            for (size_t i = 0; i < info.size; ++i)
                write_f32_le(out, static_cast<float>(ptr[i]));
        }
        if (!out) throw std::runtime_error("checkpoint write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot move checkpoint into place: " + path);
}

template <typename T>
ModelParams<T> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::string header_line;
    if (!std::getline(in, header_line))
        throw std::runtime_error(path + ": missing checkpoint header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_line);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path + ": checkpoint header parse error: " + e.what());
    }
    if (header.value("version", "") != std::string("ckpt-v1"))
        throw std::runtime_error(path + ": unsupported checkpoint version");

    ModelParams<T> params;
    params.config = ModelConfig::from_json(header.at("config").dump());
    params.layout = ParamLayout::build(params.config);
    params.data.assign(params.layout.total_size, T(0));

    const auto& manifest = header.at("params");
    if (manifest.size() != params.layout.manifest.size())
        throw std::runtime_error(path + ": manifest does not match config layout");
    for (size_t i = 0; i < params.layout.manifest.size(); ++i) {
        const auto& expect = params.layout.manifest[i];
        const auto& got = manifest[i];
        if (got.at("name").get<std::string>() != expect.name ||
            got.at("size").get<size_t>() != expect.size)
            throw std::runtime_error(path + ": manifest entry mismatch for '" + expect.name +
                                     "'");
        T* ptr = params.data.data() + expect.offset;
        for (size_t k = 0; k < expect.size; ++k)
            ptr[k] = static_cast<T>(read_f32_le(in, path));
    }
    return params;
}

template void save_checkpoint<float>(const ModelParams<float>&, const std::string&);
template void save_checkpoint<double>(const ModelParams<double>&, const std::string&);
template ModelParams<float> load_checkpoint<float>(const std::string&);
template ModelParams<double> load_checkpoint<double>(const std::string&);

} // namespace lmforge
