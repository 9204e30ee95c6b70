#include "previz/depthmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "previz/image_io.hpp"

namespace previz {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    auto p = path;
    p += ".json";
    return p;
}

nlohmann::json load_sidecar(const std::filesystem::path& path) {
    std::ifstream in(sidecar_path(path));
    if (!in) {
        fail("missing sidecar: " + sidecar_path(path).string());
    }
    return nlohmann::json::parse(in);
}

void write_sidecar(const std::filesystem::path& path, const nlohmann::json& doc) {
    std::ofstream out(sidecar_path(path));
    if (!out) {
        fail("cannot write sidecar: " + sidecar_path(path).string());
    }
    out << doc.dump(2) << '\n';
}

}  // namespace

DepthMap load_depth(const std::filesystem::path& path) {
    const nlohmann::json meta = load_sidecar(path);
    if (meta.at("dtype").get<std::string>() != "f32") {
        fail(path.string() + ": sidecar dtype must be f32");
    }
    DepthMap depth(meta.at("width").get<int>(), meta.at("height").get<int>());
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail("cannot open depth file: " + path.string());
    }
    std::vector<float> raw(depth.values.size());
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
    if (!in) {
        fail(path.string() + ": truncated depth data");
    }
    for (size_t i = 0; i < raw.size(); ++i) {
        depth.values[i] = raw[i];
    }
    return depth;
}

void save_depth(const DepthMap& depth, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail("cannot write depth file: " + path.string());
    }
    std::vector<float> raw(depth.values.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        raw[i] = static_cast<float>(depth.values[i]);
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size() * sizeof(float)));
    write_sidecar(path, {{"version", 1},
                         {"width", depth.width},
                         {"height", depth.height},
                         {"dtype", "f32"}});
}

DepthMap load_depth_png16(const std::filesystem::path& path) {
    const nlohmann::json meta = load_sidecar(path);
    const double scale = meta.at("depth_scale").get<double>();
    const GrayImage16 img = read_png_gray16(path);
    DepthMap depth(img.width, img.height);
    for (size_t i = 0; i < img.pixels.size(); ++i) {
        depth.values[i] = img.pixels[i] * scale;
    }
    return depth;
}

void save_depth_png16(const DepthMap& depth, const std::filesystem::path& path,
                      double depth_scale) {
    if (depth_scale <= 0.0) {
        fail("save_depth_png16: depth_scale must be positive");
    }
    GrayImage16 img;
    img.width = depth.width;
    img.height = depth.height;
    img.pixels.resize(depth.values.size());
    for (size_t i = 0; i < depth.values.size(); ++i) {
        const double q = std::clamp(depth.values[i] / depth_scale, 0.0, 65535.0);
        img.pixels[i] = static_cast<uint16_t>(std::lround(q));
    }
    write_png_gray16(img, path);
    write_sidecar(path, {{"version", 1},
                         {"width", depth.width},
                         {"height", depth.height},
                         {"depth_scale", depth_scale}});
}

}  // namespace previz
