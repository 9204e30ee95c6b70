#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "previz/common.hpp"

namespace previz {

/// Row-major binary coverage mask, top-left origin.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> bits;  // 0 or 1

    BinaryMask() = default;
    BinaryMask(int w, int h) : width(w), height(h), bits(static_cast<size_t>(w) * h, 0) {}

    uint8_t at(int x, int y) const { return bits[static_cast<size_t>(y) * width + x]; }
    void set(int x, int y, uint8_t v) { bits[static_cast<size_t>(y) * width + x] = v; }
    size_t count_set() const;
};

/// Row-major soft mask with values in [0, 1].
struct SoftMask {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    SoftMask() = default;
    SoftMask(int w, int h) : width(w), height(h), values(static_cast<size_t>(w) * h, 0.0) {}

    double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
    void set(int x, int y, double v) { values[static_cast<size_t>(y) * width + x] = v; }
    double mean() const;
};

BinaryMask threshold(const SoftMask& soft, double level = 0.5);
SoftMask to_soft(const BinaryMask& mask);

/// PNG convention: 0 = unset, 255 = set; soft masks quantize linearly.
BinaryMask load_mask_png(const std::filesystem::path& path);
void save_mask_png(const BinaryMask& mask, const std::filesystem::path& path);
SoftMask load_soft_mask_png(const std::filesystem::path& path);
void save_soft_mask_png(const SoftMask& mask, const std::filesystem::path& path);

}  // namespace previz
