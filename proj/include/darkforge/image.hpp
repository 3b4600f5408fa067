#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace darkforge {

/// 8-bit RGB raster, row-major H x W x 3.
struct RgbImageU8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    RgbImageU8() = default;
    RgbImageU8(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

    bool empty() const { return width <= 0 || height <= 0; }
    std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }

    std::uint8_t& at(int i, int j, int c) {
        return data[(static_cast<std::size_t>(i) * width + j) * 3 + c];
    }
    std::uint8_t at(int i, int j, int c) const {
        return data[(static_cast<std::size_t>(i) * width + j) * 3 + c];
    }
};

/// Unit-interval float RGB raster (values may exceed 1 after amplification).
struct RgbImageF {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    RgbImageF() = default;
    RgbImageF(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0.0) {}

    bool empty() const { return width <= 0 || height <= 0; }
    std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }

    double& at(int i, int j, int c) {
        return data[(static_cast<std::size_t>(i) * width + j) * 3 + c];
    }
    double at(int i, int j, int c) const {
        return data[(static_cast<std::size_t>(i) * width + j) * 3 + c];
    }
};

/// Single-channel float plane.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Plane() = default;
    Plane(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0.0) {}

    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * width + j]; }
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * width + j]; }
};

inline std::uint8_t clamp_round_u8(double v) {
    double r = std::round(v);
    if (r < 0.0) r = 0.0;
    if (r > 255.0) r = 255.0;
    return static_cast<std::uint8_t>(r);
}

/// float = u8 / 255 exactly.
inline RgbImageF to_float(const RgbImageU8& img) {
    RgbImageF out(img.width, img.height);
    for (std::size_t k = 0; k < img.data.size(); ++k)
        out.data[k] = img.data[k] / 255.0;
    return out;
}

/// u8 = round(float * 255), clamped.
inline RgbImageU8 to_u8(const RgbImageF& img) {
    RgbImageU8 out(img.width, img.height);
    for (std::size_t k = 0; k < img.data.size(); ++k)
        out.data[k] = clamp_round_u8(img.data[k] * 255.0);
    return out;
}

}  // namespace darkforge
