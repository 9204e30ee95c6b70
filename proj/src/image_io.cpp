#include "previz/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <stdexcept>

namespace previz {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

// libpng's error handling longjmps; keep each call wrapped in one function
// whose locals are set before setjmp.
template <typename Pixel>
void read_png(const std::filesystem::path& path, int bit_depth_wanted, int& width,
              int& height, std::vector<Pixel>& pixels) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) {
        fail("cannot open PNG: " + path.string());
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail("failed to read PNG: " + path.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_set_strip_alpha(png);
    const int color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA) {
        png_set_rgb_to_gray(png, 1, -1.0, -1.0);
    }
    if (color == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(png);
        png_set_rgb_to_gray(png, 1, -1.0, -1.0);
    }
    const int depth = png_get_bit_depth(png, info);
    if (bit_depth_wanted == 8) {
        if (depth == 16) png_set_strip_16(png);
        if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    } else {
        if (depth != 16) {
            png_destroy_read_struct(&png, &info, nullptr);
            fail(path.string() + ": expected a 16-bit PNG");
        }
        png_set_swap(png);  // PNG stores big-endian
    }
    png_read_update_info(png, info);

    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    pixels.resize(static_cast<size_t>(width) * height);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) {
        rows[y] = reinterpret_cast<png_bytep>(pixels.data() + static_cast<size_t>(y) * width);
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
}

template <typename Pixel>
void write_png(const std::filesystem::path& path, int bit_depth, int width, int height,
               const std::vector<Pixel>& pixels) {
    if (width <= 0 || height <= 0 ||
        pixels.size() != static_cast<size_t>(width) * height) {
        fail("write_png: inconsistent image dimensions");
    }
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) {
        fail("cannot write PNG: " + path.string());
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        fail("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail("failed to write PNG: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16) {
        png_set_swap(png);
    }
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) {
        rows[y] = reinterpret_cast<png_bytep>(
            const_cast<Pixel*>(pixels.data() + static_cast<size_t>(y) * width));
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

GrayImage8 read_png_gray8(const std::filesystem::path& path) {
    GrayImage8 img;
    read_png(path, 8, img.width, img.height, img.pixels);
    return img;
}

void write_png_gray8(const GrayImage8& image, const std::filesystem::path& path) {
    write_png(path, 8, image.width, image.height, image.pixels);
}

GrayImage16 read_png_gray16(const std::filesystem::path& path) {
    GrayImage16 img;
    read_png(path, 16, img.width, img.height, img.pixels);
    return img;
}

void write_png_gray16(const GrayImage16& image, const std::filesystem::path& path) {
    write_png(path, 16, image.width, image.height, image.pixels);
}

}  // namespace previz
