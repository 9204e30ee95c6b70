#include "previz/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "previz/image_io.hpp"

namespace previz {

size_t BinaryMask::count_set() const {
    return static_cast<size_t>(std::count(bits.begin(), bits.end(), uint8_t{1}));
}

double SoftMask::mean() const {
    if (values.empty()) {
        return 0.0;
    }
    return std::accumulate(values.begin(), values.end(), 0.0) / values.size();
}

BinaryMask threshold(const SoftMask& soft, double level) {
    BinaryMask out(soft.width, soft.height);
    for (size_t i = 0; i < soft.values.size(); ++i) {
        out.bits[i] = soft.values[i] > level ? 1 : 0;
    }
    return out;
}

SoftMask to_soft(const BinaryMask& mask) {
    SoftMask out(mask.width, mask.height);
    for (size_t i = 0; i < mask.bits.size(); ++i) {
        out.values[i] = mask.bits[i] ? 1.0 : 0.0;
    }
    return out;
}

BinaryMask load_mask_png(const std::filesystem::path& path) {
    const GrayImage8 img = read_png_gray8(path);
    BinaryMask mask(img.width, img.height);
    for (size_t i = 0; i < img.pixels.size(); ++i) {
        mask.bits[i] = img.pixels[i] >= 128 ? 1 : 0;
    }
    return mask;
}

void save_mask_png(const BinaryMask& mask, const std::filesystem::path& path) {
    GrayImage8 img;
    img.width = mask.width;
    img.height = mask.height;
    img.pixels.resize(mask.bits.size());
    for (size_t i = 0; i < mask.bits.size(); ++i) {
        img.pixels[i] = mask.bits[i] ? 255 : 0;
    }
    write_png_gray8(img, path);
}

SoftMask load_soft_mask_png(const std::filesystem::path& path) {
    const GrayImage8 img = read_png_gray8(path);
    SoftMask mask(img.width, img.height);
    for (size_t i = 0; i < img.pixels.size(); ++i) {
        mask.values[i] = img.pixels[i] / 255.0;
    }
    return mask;
}

void save_soft_mask_png(const SoftMask& mask, const std::filesystem::path& path) {
    GrayImage8 img;
    img.width = mask.width;
    img.height = mask.height;
    img.pixels.resize(mask.values.size());
    for (size_t i = 0; i < mask.values.size(); ++i) {
        const double v = std::clamp(mask.values[i], 0.0, 1.0);
        img.pixels[i] = static_cast<uint8_t>(std::lround(v * 255.0));
    }
    write_png_gray8(img, path);
}

}  // namespace previz
