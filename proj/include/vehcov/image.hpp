#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vehcov {

/// Base error type for every failure the library reports.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Axis-aligned pixel rectangle; `left`/`top` are 0-based column/row.
struct Rect {
    int left = 0;
    int top = 0;
    int width = 0;
    int height = 0;

    int right() const { return left + width; }    // exclusive
    int bottom() const { return top + height; }   // exclusive
    long area() const { return static_cast<long>(width) * height; }
    bool contains(const Rect& inner) const {
        return inner.left >= left && inner.top >= top && inner.right() <= right() &&
               inner.bottom() <= bottom();
    }
    bool operator==(const Rect&) const = default;
};

/// Single-plane row-major raster.
template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    std::vector<T> pixels;

    Image() = default;
    Image(int w, int h, T fill = T{}) : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {
        if (w < 0 || h < 0) throw Error("negative image dimensions");
    }

    T& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
    const T& at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }

    /// Replicate-padded read.
    const T& clamped(int x, int y) const {
        x = x < 0 ? 0 : (x >= width ? width - 1 : x);
        y = y < 0 ? 0 : (y >= height ? height - 1 : y);
        return at(x, y);
    }

    size_t size() const { return pixels.size(); }
    bool empty() const { return pixels.empty(); }
    bool operator==(const Image&) const = default;
};

using GrayImage = Image<double>;
using BinaryImage = Image<std::uint8_t>;

/// Three planar channels of real-valued intensities (nominally [0,255]).
struct ColorImage {
    int width = 0;
    int height = 0;
    std::array<std::vector<double>, 3> planes;

    ColorImage() = default;
    ColorImage(int w, int h, double fill = 0.0) : width(w), height(h) {
        if (w < 0 || h < 0) throw Error("negative image dimensions");
        for (auto& p : planes) p.assign(static_cast<size_t>(w) * h, fill);
    }

    double& at(int x, int y, int c) { return planes[c][static_cast<size_t>(y) * width + x]; }
    double at(int x, int y, int c) const { return planes[c][static_cast<size_t>(y) * width + x]; }

    bool operator==(const ColorImage&) const = default;
};

/// Copies the pixels under `r` (must lie inside `img`).
template <typename T>
Image<T> crop(const Image<T>& img, const Rect& r) {
    if (!Rect{0, 0, img.width, img.height}.contains(r)) throw Error("crop rectangle outside image");
    Image<T> out(r.width, r.height);
    for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x) out.at(x, y) = img.at(r.left + x, r.top + y);
    return out;
}

}  // namespace vehcov
