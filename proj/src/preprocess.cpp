#include "vehcov/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

namespace vehcov {

void CleanParams::validate() const {
    if (median_window < 1 || median_window % 2 == 0)
        throw Error("median_window must be odd and >= 1, got " + std::to_string(median_window));
    if (!(floor >= 0.0)) throw Error("floor must be >= 0");
    if (!(edge_gain >= 0.0)) throw Error("edge_gain must be >= 0");
    if (!(canny_high > 0.0 && canny_high < 1.0)) throw Error("canny_high must lie in (0, 1)");
}

BackgroundModel mean_background(std::span<const ColorImage> frames) {
    if (frames.empty()) throw Error("background needs at least one frame");
    const int w = frames.front().width, h = frames.front().height;
    BackgroundModel bg{ColorImage(w, h), static_cast<int>(frames.size())};
    for (const auto& f : frames) {
        if (f.width != w || f.height != h) throw Error("background frames differ in size");
        for (int c = 0; c < 3; ++c) {
            auto& acc = bg.mean_image.planes[c];
            const auto& src = f.planes[c];
            for (size_t i = 0; i < acc.size(); ++i) acc[i] += src[i];
        }
    }
    const double n = static_cast<double>(frames.size());
    for (auto& plane : bg.mean_image.planes)
        for (auto& v : plane) v /= n;
    return bg;
}

BackgroundModel mean_background(const FrameSequence& seq) { return mean_background(std::span(seq.frames)); }

GrayImage subtract_gray(const ColorImage& frame, const BackgroundModel& bg) {
    const auto& b = bg.mean_image;
    if (frame.width != b.width || frame.height != b.height)
        throw Error("frame " + std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                    " does not match background " + std::to_string(b.width) + "x" + std::to_string(b.height));
    GrayImage out(frame.width, frame.height);
    for (size_t i = 0; i < out.size(); ++i) {
        double s = std::abs(frame.planes[0][i] - b.planes[0][i]) + std::abs(frame.planes[1][i] - b.planes[1][i]) +
                   std::abs(frame.planes[2][i] - b.planes[2][i]);
        out.pixels[i] = s / 3.0;
    }
    return out;
}

GrayImage median_filter(const GrayImage& img, int window) {
    if (window < 1 || window % 2 == 0) throw Error("median window must be odd, got " + std::to_string(window));
    const int r = window / 2;
    GrayImage out(img.width, img.height);
    std::vector<double> buf(static_cast<size_t>(window) * window);
    const auto mid = buf.begin() + static_cast<long>(buf.size() / 2);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            size_t k = 0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) buf[k++] = img.clamped(x + dx, y + dy);
            std::nth_element(buf.begin(), mid, buf.end());
            out.at(x, y) = *mid;
        }
    }
    return out;
}

GrayImage floor_shift(const GrayImage& img, double floor) {
    GrayImage out(img.width, img.height);
    for (size_t i = 0; i < img.size(); ++i) {
        double v = img.pixels[i];
        out.pixels[i] = v < floor ? 0.0 : v - floor;
    }
    return out;
}

GrayImage clean(const GrayImage& subtracted, const CleanParams& p) {
    return floor_shift(median_filter(subtracted, p.median_window), p.floor);
}

namespace {

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * r + 1);
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    for (auto& v : k) v /= sum;

    GrayImage tmp(img.width, img.height), out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) acc += k[i + r] * img.clamped(x + i, y);
            tmp.at(x, y) = acc;
        }
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp.clamped(x, y + i);
            out.at(x, y) = acc;
        }
    return out;
}

}  // namespace

BinaryImage canny_edges(const GrayImage& img, double high) {
    if (!(high > 0.0 && high < 1.0)) throw Error("canny high threshold must lie in (0, 1)");
    const int w = img.width, h = img.height;
    BinaryImage edges(w, h, 0);
    if (img.empty()) return edges;

    GrayImage s = gaussian_blur(img, kCannySigma);
    GrayImage gx(w, h), gy(w, h), mag(w, h);
    double max_mag = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double dx = (s.clamped(x + 1, y - 1) + 2 * s.clamped(x + 1, y) + s.clamped(x + 1, y + 1)) -
                        (s.clamped(x - 1, y - 1) + 2 * s.clamped(x - 1, y) + s.clamped(x - 1, y + 1));
            double dy = (s.clamped(x - 1, y + 1) + 2 * s.clamped(x, y + 1) + s.clamped(x + 1, y + 1)) -
                        (s.clamped(x - 1, y - 1) + 2 * s.clamped(x, y - 1) + s.clamped(x + 1, y - 1));
            gx.at(x, y) = dx;
            gy.at(x, y) = dy;
            mag.at(x, y) = std::hypot(dx, dy);
            max_mag = std::max(max_mag, mag.at(x, y));
        }
    if (max_mag <= 0.0) return edges;

    auto m_at = [&](int x, int y) { return (x < 0 || y < 0 || x >= w || y >= h) ? 0.0 : mag.at(x, y); };

    // Non-maximum suppression. Ties along the gradient keep the pixel on the
    // negative side so a symmetric ridge yields a single-pixel line; magnitudes
    // within rounding noise of each other count as ties.
    const double tie = 1e-9 * max_mag;
    GrayImage thin(w, h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double m = mag.at(x, y);
            if (m <= 0.0) continue;
            double deg = std::atan2(gy.at(x, y), gx.at(x, y)) * 180.0 / 3.14159265358979323846;
            if (deg < 0) deg += 180.0;
            int ox = 0, oy = 0;
            if (deg < 22.5 || deg >= 157.5) {
                ox = 1;
            } else if (deg < 67.5) {
                ox = 1;
                oy = 1;
            } else if (deg < 112.5) {
                oy = 1;
            } else {
                ox = -1;
                oy = 1;
            }
            if (m > m_at(x - ox, y - oy) + tie && m >= m_at(x + ox, y + oy) - tie) thin.at(x, y) = m;
        }

    const double hi = high * max_mag;
    const double lo = kCannyLowRatio * hi;
    std::deque<std::pair<int, int>> frontier;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (thin.at(x, y) >= hi) {
                edges.at(x, y) = 1;
                frontier.emplace_back(x, y);
            }
    while (!frontier.empty()) {
        auto [x, y] = frontier.front();
        frontier.pop_front();
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                int nx = x + dx, ny = y + dy;
                if (nx < 0 || ny < 0 || nx >= w || ny >= h || edges.at(nx, ny)) continue;
                if (thin.at(nx, ny) >= lo && thin.at(nx, ny) > 0.0) {
                    edges.at(nx, ny) = 1;
                    frontier.emplace_back(nx, ny);
                }
            }
    }
    return edges;
}

BinarizeResult binarize_sequence(std::span<const GrayImage> cleaned, const CleanParams& p) {
    if (cleaned.empty()) throw Error("binarize_sequence needs at least one frame");
    p.validate();
    std::vector<GrayImage> amplified;
    amplified.reserve(cleaned.size());
    double total = 0.0;
    size_t count = 0;
    for (const auto& img : cleaned) {
        GrayImage a = img;
        if (p.edge_gain != 0.0) {
            BinaryImage e = canny_edges(img, p.canny_high);
            for (size_t i = 0; i < a.size(); ++i) a.pixels[i] += p.edge_gain * e.pixels[i];
        }
        for (double v : a.pixels) total += v;
        count += a.size();
        amplified.push_back(std::move(a));
    }

    BinarizeResult result;
    result.threshold = p.binary_threshold_override ? *p.binary_threshold_override
                                                   : (count ? total / static_cast<double>(count) : 0.0);
    result.masks.reserve(amplified.size());
    for (const auto& a : amplified) {
        BinaryImage m(a.width, a.height);
        for (size_t i = 0; i < a.size(); ++i) m.pixels[i] = a.pixels[i] >= result.threshold ? 1 : 0;
        result.masks.push_back(std::move(m));
    }
    return result;
}

}  // namespace vehcov
