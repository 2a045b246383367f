// Test helpers and independent reference implementations. Nothing here calls
// into the library's numeric code; oracles are deliberately naive.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "vehcov/image.hpp"

namespace testing {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path = fs::temp_directory_path() / ("vehcov_" + tag + "_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    fs::path operator/(const std::string& s) const { return path / s; }
};

inline vehcov::GrayImage random_gray(std::mt19937_64& rng, int w, int h, int lo = 0, int hi = 255) {
    std::uniform_int_distribution<int> d(lo, hi);
    vehcov::GrayImage img(w, h);
    for (auto& v : img.pixels) v = d(rng);
    return img;
}

inline vehcov::ColorImage random_color(std::mt19937_64& rng, int w, int h) {
    std::uniform_int_distribution<int> d(0, 255);
    vehcov::ColorImage img(w, h);
    for (auto& p : img.planes)
        for (auto& v : p) v = d(rng);
    return img;
}

inline vehcov::BinaryImage random_binary(std::mt19937_64& rng, int w, int h, double p) {
    std::bernoulli_distribution d(p);
    vehcov::BinaryImage img(w, h);
    for (auto& v : img.pixels) v = d(rng) ? 1 : 0;
    return img;
}

inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, int d) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = n(rng);
    Eigen::MatrixXd s = a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d);
    return 0.5 * (s + s.transpose());
}

inline Eigen::MatrixXd random_invertible(std::mt19937_64& rng, int d) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd m(d, d);
    for (;;) {
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m(i, j) = n(rng);
        m += Eigen::MatrixXd::Identity(d, d);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        auto s = svd.singularValues();
        if (s(d - 1) / s(0) > 0.05) return m;
    }
}

// Compensated (Kahan) mean of a list of values.
inline double kahan_mean(const std::vector<double>& v) {
    double sum = 0, c = 0;
    for (double x : v) {
        double y = x - c;
        double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    return sum / static_cast<double>(v.size());
}

// Median of the window x window neighborhood by full sort, replicate border.
inline vehcov::GrayImage sort_median(const vehcov::GrayImage& img, int window) {
    vehcov::GrayImage out(img.width, img.height);
    int r = window / 2;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            std::vector<double> vals;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    int xx = std::clamp(x + dx, 0, img.width - 1);
                    int yy = std::clamp(y + dy, 0, img.height - 1);
                    vals.push_back(img.pixels[static_cast<size_t>(yy) * img.width + xx]);
                }
            std::sort(vals.begin(), vals.end());
            out.pixels[static_cast<size_t>(y) * img.width + x] = vals[vals.size() / 2];
        }
    return out;
}

// Recursive flood fill; returns a label image (0 = background, 1.. = component).
inline std::vector<int> flood_fill_labels(const vehcov::BinaryImage& img, int connectivity) {
    std::vector<int> label(img.pixels.size(), 0);
    int next = 0;
    std::function<void(int, int)> fill = [&](int x, int y) {
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                if (connectivity == 4 && dx != 0 && dy != 0) continue;
                int xx = x + dx, yy = y + dy;
                if (xx < 0 || yy < 0 || xx >= img.width || yy >= img.height) continue;
                size_t i = static_cast<size_t>(yy) * img.width + xx;
                if (img.pixels[i] && !label[i]) {
                    label[i] = next;
                    fill(xx, yy);
                }
            }
    };
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            size_t i = static_cast<size_t>(y) * img.width + x;
            if (img.pixels[i] && !label[i]) {
                label[i] = ++next;
                fill(x, y);
            }
        }
    return label;
}

// Two-pass covariance of row-per-sample data (mean first, then products).
inline Eigen::MatrixXd two_pass_covariance(const std::vector<std::vector<double>>& samples, bool sample) {
    size_t n = samples.size();
    size_t d = samples.front().size();
    std::vector<double> mean(d, 0.0);
    for (const auto& s : samples)
        for (size_t j = 0; j < d; ++j) mean[j] += s[j];
    for (auto& m : mean) m /= static_cast<double>(n);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
    for (const auto& s : samples)
        for (size_t i = 0; i < d; ++i)
            for (size_t j = 0; j < d; ++j) c(i, j) += (s[i] - mean[i]) * (s[j] - mean[j]);
    return c / static_cast<double>(sample ? n - 1 : n);
}

// Determinant by Gaussian elimination with partial pivoting.
inline double lu_determinant(std::vector<std::vector<double>> a) {
    size_t n = a.size();
    double det = 1.0;
    for (size_t k = 0; k < n; ++k) {
        size_t p = k;
        for (size_t i = k + 1; i < n; ++i)
            if (std::abs(a[i][k]) > std::abs(a[p][k])) p = i;
        if (a[p][k] == 0.0) return 0.0;
        if (p != k) {
            std::swap(a[p], a[k]);
            det = -det;
        }
        det *= a[k][k];
        for (size_t i = k + 1; i < n; ++i) {
            double f = a[i][k] / a[k][k];
            for (size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
        }
    }
    return det;
}

// Roots of det(A - lambda B) located by a log-spaced sign sweep and bisection.
inline std::vector<double> sign_sweep_eigenvalues(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const int d = static_cast<int>(a.rows());
    auto f = [&](double lambda) {
        std::vector<std::vector<double>> m(d, std::vector<double>(d));
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m[i][j] = a(i, j) - lambda * b(i, j);
        return lu_determinant(m);
    };
    for (int steps = 4000; steps <= 512000; steps *= 4) {
        std::vector<double> roots;
        const double lo = std::log(1e-6), hi = std::log(1e6);
        double prev_x = std::exp(lo), prev_f = f(prev_x);
        for (int s = 1; s <= steps; ++s) {
            double x = std::exp(lo + (hi - lo) * s / steps);
            double fx = f(x);
            if ((fx < 0) != (prev_f < 0)) {
                double l = prev_x, r = x, fl = prev_f;
                for (int it = 0; it < 200 && r - l > 1e-15 * r; ++it) {
                    double m = 0.5 * (l + r);
                    double fm = f(m);
                    if ((fm < 0) == (fl < 0)) {
                        l = m;
                        fl = fm;
                    } else {
                        r = m;
                    }
                }
                roots.push_back(0.5 * (l + r));
            }
            prev_x = x;
            prev_f = fx;
        }
        if (static_cast<int>(roots.size()) == d) return roots;
    }
    return {};
}

inline double oracle_iou(const vehcov::Rect& a, const vehcov::Rect& b) {
    long ix = std::max(0, std::min(a.left + a.width, b.left + b.width) - std::max(a.left, b.left));
    long iy = std::max(0, std::min(a.top + a.height, b.top + b.height) - std::max(a.top, b.top));
    long inter = ix * iy;
    long uni = static_cast<long>(a.width) * a.height + static_cast<long>(b.width) * b.height - inter;
    return uni > 0 ? static_cast<double>(inter) / uni : 0.0;
}

// Exhaustive one-to-one matching; returns the IoU multiset of the assignment
// whose sorted-descending IoU list is lexicographically largest.
inline std::vector<double> exhaustive_best_ious(const std::vector<vehcov::Rect>& det,
                                                const std::vector<vehcov::Rect>& truth, double threshold) {
    std::vector<double> best;
    std::vector<bool> used(truth.size(), false);
    std::vector<double> cur;
    std::function<void(size_t)> rec = [&](size_t i) {
        if (i == det.size()) {
            auto s = cur;
            std::sort(s.rbegin(), s.rend());
            if (std::lexicographical_compare(best.begin(), best.end(), s.begin(), s.end())) best = s;
            return;
        }
        rec(i + 1);
        for (size_t j = 0; j < truth.size(); ++j) {
            double v = oracle_iou(det[i], truth[j]);
            if (used[j] || v < threshold || v <= 0) continue;
            used[j] = true;
            cur.push_back(v);
            rec(i + 1);
            cur.pop_back();
            used[j] = false;
        }
    };
    rec(0);
    return best;
}

// Nearest-neighbor rotation by a quarter turn clockwise on screen, sampled at
// pixel centers.
inline vehcov::GrayImage quarter_turn_nn(const vehcov::GrayImage& in) {
    const int w = in.height, h = in.width;
    vehcov::GrayImage out(w, h);
    const double cxo = w / 2.0, cyo = h / 2.0, cxi = in.width / 2.0, cyi = in.height / 2.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            // Clockwise by 90 on screen maps source (u, v) to (-v, u) about the
            // centers, so the inverse is (u, v) = (y', -x').
            double px = x + 0.5 - cxo, py = y + 0.5 - cyo;
            double u = py + cxi, v = -px + cyi;
            int sx = static_cast<int>(std::floor(u)), sy = static_cast<int>(std::floor(v));
            out.pixels[static_cast<size_t>(y) * w + x] = in.pixels[static_cast<size_t>(sy) * in.width + sx];
        }
    return out;
}

}  // namespace testing
