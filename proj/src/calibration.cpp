#include "vehcov/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace vehcov {

namespace {

// Exact values at multiples of 90 degrees keep quarter turns interpolation-free.
void rotation_terms(double angle_degrees, double& c, double& s) {
    double q = angle_degrees / 90.0;
    if (q == std::round(q)) {
        long k = ((static_cast<long>(std::round(q)) % 4) + 4) % 4;
        static constexpr double cs[4][2] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        c = cs[k][0];
        s = cs[k][1];
        return;
    }
    double rad = angle_degrees * std::numbers::pi / 180.0;
    c = std::cos(rad);
    s = std::sin(rad);
}

double catmull_rom(double t) {
    constexpr double a = -0.5;
    t = std::abs(t);
    if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
    return 0.0;
}

double sample_bicubic(const std::vector<double>& plane, int w, int h, double sx, double sy) {
    if (sx < -0.5 || sy < -0.5 || sx > w - 0.5 || sy > h - 0.5) return 0.0;
    int ix = static_cast<int>(std::floor(sx));
    int iy = static_cast<int>(std::floor(sy));
    double fx = sx - ix, fy = sy - iy;
    double wx[4] = {catmull_rom(fx + 1.0), catmull_rom(fx), catmull_rom(1.0 - fx), catmull_rom(2.0 - fx)};
    double wy[4] = {catmull_rom(fy + 1.0), catmull_rom(fy), catmull_rom(1.0 - fy), catmull_rom(2.0 - fy)};
    double acc = 0.0;
    for (int j = 0; j < 4; ++j) {
        int yy = std::clamp(iy - 1 + j, 0, h - 1);
        double row = 0.0;
        for (int i = 0; i < 4; ++i) {
            int xx = std::clamp(ix - 1 + i, 0, w - 1);
            row += wx[i] * plane[static_cast<size_t>(yy) * w + xx];
        }
        acc += wy[j] * row;
    }
    return acc;
}

template <typename PlaneFn>
void rotate_planes(int w, int h, double angle_degrees, Size out, PlaneFn&& emit) {
    double c = 0, s = 0;
    rotation_terms(angle_degrees, c, s);
    double cix = (w - 1) / 2.0, ciy = (h - 1) / 2.0;
    double cox = (out.width - 1) / 2.0, coy = (out.height - 1) / 2.0;
    for (int v = 0; v < out.height; ++v) {
        for (int u = 0; u < out.width; ++u) {
            double dx = u - cox, dy = v - coy;
            double sx = cix + c * dx + s * dy;
            double sy = ciy - s * dx + c * dy;
            emit(u, v, sx, sy);
        }
    }
}

}  // namespace

void Calibration::validate() const {
    if (!(angle_degrees > -90.0 && angle_degrees < 90.0))
        throw Error("calibration angle must lie in (-90, 90), got " + std::to_string(angle_degrees));
    if (crop && (crop->width <= 0 || crop->height <= 0 || crop->left < 0 || crop->top < 0))
        throw Error("calibration crop must have non-negative origin and positive size");
}

double angle_from_baseline(Point p1, Point p2) {
    double dx = p2.x - p1.x, dy = p2.y - p1.y;
    if (dx == 0.0 && dy == 0.0) throw Error("baseline points coincide");
    if (dx == 0.0) throw Error("baseline is vertical; click two points along the road edge");
    return -std::atan(dy / dx) * 180.0 / std::numbers::pi;
}

Size rotated_size(int width, int height, double angle_degrees) {
    double c = 0, s = 0;
    rotation_terms(angle_degrees, c, s);
    double w = std::abs(width * c) + std::abs(height * s);
    double h = std::abs(width * s) + std::abs(height * c);
    return {static_cast<int>(std::ceil(w - 1e-9)), static_cast<int>(std::ceil(h - 1e-9))};
}

ColorImage rotate(const ColorImage& img, double angle_degrees) {
    Size out = rotated_size(img.width, img.height, angle_degrees);
    ColorImage dst(out.width, out.height);
    rotate_planes(img.width, img.height, angle_degrees, out, [&](int u, int v, double sx, double sy) {
        for (int ch = 0; ch < 3; ++ch)
            dst.at(u, v, ch) = sample_bicubic(img.planes[ch], img.width, img.height, sx, sy);
    });
    return dst;
}

GrayImage rotate(const GrayImage& img, double angle_degrees) {
    Size out = rotated_size(img.width, img.height, angle_degrees);
    GrayImage dst(out.width, out.height);
    rotate_planes(img.width, img.height, angle_degrees, out, [&](int u, int v, double sx, double sy) {
        dst.at(u, v) = sample_bicubic(img.pixels, img.width, img.height, sx, sy);
    });
    return dst;
}

Size calibrated_size(int width, int height, const Calibration& cal) {
    Size r = rotated_size(width, height, cal.angle_degrees);
    if (!cal.crop) return r;
    if (!Rect{0, 0, r.width, r.height}.contains(*cal.crop))
        throw Error("crop (" + std::to_string(cal.crop->left) + "," + std::to_string(cal.crop->top) + "," +
                    std::to_string(cal.crop->width) + "," + std::to_string(cal.crop->height) +
                    ") exceeds rotated frame " + std::to_string(r.width) + "x" + std::to_string(r.height));
    return {cal.crop->width, cal.crop->height};
}

ColorImage rotate_and_crop(const ColorImage& img, const Calibration& cal) {
    calibrated_size(img.width, img.height, cal);  // bounds check before any work
    ColorImage rotated = cal.angle_degrees == 0.0 ? img : rotate(img, cal.angle_degrees);
    if (!cal.crop) return rotated;
    const Rect& r = *cal.crop;
    ColorImage out(r.width, r.height);
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < r.height; ++y)
            for (int x = 0; x < r.width; ++x) out.at(x, y, ch) = rotated.at(r.left + x, r.top + y, ch);
    return out;
}

}  // namespace vehcov
