#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace previz {

struct GrayImage8 {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;  // row-major, top-left origin
};

struct GrayImage16 {
    int width = 0;
    int height = 0;
    std::vector<uint16_t> pixels;
};

GrayImage8 read_png_gray8(const std::filesystem::path& path);
void write_png_gray8(const GrayImage8& image, const std::filesystem::path& path);

GrayImage16 read_png_gray16(const std::filesystem::path& path);
void write_png_gray16(const GrayImage16& image, const std::filesystem::path& path);

}  // namespace previz
