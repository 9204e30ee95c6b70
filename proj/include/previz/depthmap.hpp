#pragma once

#include <filesystem>
#include <vector>

namespace previz {

/// Per-pixel depth in meters along the camera +Z axis; 0 marks no hit /
/// invalid. Row-major, top-left origin.
struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    DepthMap() = default;
    DepthMap(int w, int h) : width(w), height(h), values(static_cast<size_t>(w) * h, 0.0) {}

    double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
    void set(int x, int y, double v) { values[static_cast<size_t>(y) * width + x] = v; }
};

/// Binary layout: little-endian float32, row-major, with a JSON sidecar
/// {"width", "height", "dtype": "f32", "version": 1} at <path>.json.
DepthMap load_depth(const std::filesystem::path& path);
void save_depth(const DepthMap& depth, const std::filesystem::path& path);

/// 16-bit PNG alternative; sidecar carries {"depth_scale": meters-per-unit}.
DepthMap load_depth_png16(const std::filesystem::path& path);
void save_depth_png16(const DepthMap& depth, const std::filesystem::path& path,
                      double depth_scale);

}  // namespace previz
