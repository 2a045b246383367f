#include "vehcov/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace vehcov {

void SegmentationParams::validate() const {
    if (connectivity != 4 && connectivity != 8) throw Error("connectivity must be 4 or 8");
    if (min_component_px <= 0 || split_area_min <= 0 || regroup_area_max <= 0 || delete_area_max <= 0)
        throw Error("segmentation area thresholds must be positive");
    if (!(split_fill_max > 0.0 && split_fill_max <= 1.0) || !(regroup_fill_min > 0.0 && regroup_fill_min <= 1.0))
        throw Error("fill thresholds must lie in (0, 1]");
    if (max_refine_iterations < 1) throw Error("max_refine_iterations must be >= 1");
}

Region region_from_pixels(const std::vector<std::pair<int, int>>& pixels, int frame_index) {
    if (pixels.empty()) throw Error("region needs at least one pixel");
    int x0 = std::numeric_limits<int>::max(), y0 = x0, x1 = std::numeric_limits<int>::min(), y1 = x1;
    for (auto [x, y] : pixels) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
    }
    Region r;
    r.frame_index = frame_index;
    r.bbox = {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
    r.mask = BinaryImage(r.bbox.width, r.bbox.height, 0);
    for (auto [x, y] : pixels) r.mask.at(x - x0, y - y0) = 1;
    r.pixel_count = static_cast<long>(std::count(r.mask.pixels.begin(), r.mask.pixels.end(), 1));
    r.fill_fraction = static_cast<double>(r.pixel_count) / static_cast<double>(r.bbox.area());
    return r;
}

std::vector<std::pair<int, int>> region_pixels(const Region& r) {
    std::vector<std::pair<int, int>> out;
    out.reserve(static_cast<size_t>(r.pixel_count));
    for (int y = 0; y < r.mask.height; ++y)
        for (int x = 0; x < r.mask.width; ++x)
            if (r.mask.at(x, y)) out.emplace_back(r.bbox.left + x, r.bbox.top + y);
    return out;
}

namespace {

struct DisjointSet {
    std::vector<int> parent;
    int make() {
        parent.push_back(static_cast<int>(parent.size()));
        return parent.back();
    }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

double median_of(std::vector<double>& v) {
    auto n = v.size();
    auto mid = v.begin() + static_cast<long>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    double hi = *mid;
    if (n % 2 == 1) return hi;
    double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

}  // namespace

std::vector<Region> connected_components(const BinaryImage& img, int connectivity, long min_pixels,
                                         int frame_index) {
    if (connectivity != 4 && connectivity != 8) throw Error("connectivity must be 4 or 8");
    const int w = img.width, h = img.height;
    std::vector<int> labels(img.size(), -1);
    DisjointSet sets;

    static constexpr int nb8[4][2] = {{-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
    static constexpr int nb4[2][2] = {{-1, 0}, {0, -1}};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!img.at(x, y)) continue;
            int label = -1;
            auto visit = [&](int dx, int dy) {
                int nx = x + dx, ny = y + dy;
                if (nx < 0 || ny < 0 || nx >= w) return;
                int l = labels[static_cast<size_t>(ny) * w + nx];
                if (l < 0) return;
                if (label < 0)
                    label = l;
                else
                    sets.unite(label, l);
            };
            if (connectivity == 8)
                for (auto& d : nb8) visit(d[0], d[1]);
            else
                for (auto& d : nb4) visit(d[0], d[1]);
            labels[static_cast<size_t>(y) * w + x] = label < 0 ? sets.make() : label;
        }

    std::vector<int> compact(sets.parent.size(), -1);
    std::vector<std::vector<std::pair<int, int>>> groups;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int l = labels[static_cast<size_t>(y) * w + x];
            if (l < 0) continue;
            int root = sets.find(l);
            if (compact[root] < 0) {
                compact[root] = static_cast<int>(groups.size());
                groups.emplace_back();
            }
            groups[compact[root]].emplace_back(x, y);
        }

    std::vector<Region> out;
    for (const auto& g : groups)
        if (static_cast<long>(g.size()) >= min_pixels) out.push_back(region_from_pixels(g, frame_index));
    return out;
}

std::vector<Region> kmeans_pixels(const BinaryImage& mask, int k, std::uint64_t seed, Point origin,
                                  int frame_index) {
    if (k < 1) throw Error("k-means needs k >= 1");
    const int ox = static_cast<int>(origin.x), oy = static_cast<int>(origin.y);
    std::vector<std::pair<int, int>> pts;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(x, y)) pts.emplace_back(ox + x, oy + y);
    const size_t n = pts.size();
    if (static_cast<size_t>(k) > n)
        throw Error("k-means: k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " set pixels");

    auto l1 = [](double ax, double ay, double bx, double by) { return std::abs(ax - bx) + std::abs(ay - by); };

    // Farthest-point seeding.
    std::mt19937_64 rng(seed);
    std::vector<std::pair<double, double>> centers;
    size_t first = static_cast<size_t>(rng() % n);
    centers.emplace_back(pts[first].first, pts[first].second);
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    while (centers.size() < static_cast<size_t>(k)) {
        auto [cx, cy] = centers.back();
        size_t best = 0;
        for (size_t i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], l1(pts[i].first, pts[i].second, cx, cy));
            if (nearest[i] > nearest[best]) best = i;
        }
        centers.emplace_back(pts[best].first, pts[best].second);
    }

    std::vector<int> assign(n, -1);
    std::vector<double> xs, ys;
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (size_t i = 0; i < n; ++i) {
            int best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                double d = l1(pts[i].first, pts[i].second, centers[c].first, centers[c].second);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        if (!changed) break;
        for (int c = 0; c < k; ++c) {
            xs.clear();
            ys.clear();
            for (size_t i = 0; i < n; ++i)
                if (assign[i] == c) {
                    xs.push_back(pts[i].first);
                    ys.push_back(pts[i].second);
                }
            if (!xs.empty()) centers[c] = {median_of(xs), median_of(ys)};
        }
    }

    // Clusters in order of their first raster-order pixel.
    std::vector<int> order;
    std::vector<std::vector<std::pair<int, int>>> members(k);
    for (size_t i = 0; i < n; ++i) {
        if (members[assign[i]].empty()) order.push_back(assign[i]);
        members[assign[i]].push_back(pts[i]);
    }
    std::vector<Region> out;
    for (int c : order) out.push_back(region_from_pixels(members[c], frame_index));
    return out;
}

RefineResult refine_regions(std::vector<Region> regions, const BinaryImage& frame_binary,
                            const SegmentationParams& p, std::uint64_t seed) {
    p.validate();
    const Rect frame{0, 0, frame_binary.width, frame_binary.height};
    for (const auto& r : regions)
        if (!frame.contains(r.bbox)) throw Error("region lies outside the binary frame");
    const int frame_index = regions.empty() ? 0 : regions.front().frame_index;

    RefineResult res;
    for (int pass = 1;; ++pass) {
        res.passes = pass;
        bool restart = false;
        size_t i = 0;
        while (i < regions.size()) {
            const Region& r = regions[i];
            const long area = r.bbox.area();
            const double f = r.fill_fraction;

            if (f <= p.split_fill_max && area >= p.split_area_min && r.pixel_count >= 2) {
                auto parts = kmeans_pixels(r.mask, 2, seed, {double(r.bbox.left), double(r.bbox.top)}, frame_index);
                if (parts.size() == 2) {
                    Rect trigger = r.bbox;
                    regions[i] = std::move(parts[0]);
                    regions.push_back(std::move(parts[1]));
                    res.trace.push_back({RefineRule::Split, pass, trigger, static_cast<int>(regions.size())});
                    continue;  // re-examine the first half in place
                }
                ++i;
                continue;
            }

            if (f >= p.regroup_fill_min && area <= p.regroup_area_max && regions.size() > 2) {
                Rect trigger = r.bbox;
                std::vector<std::pair<int, int>> all;
                for (const auto& live : regions) {
                    auto px = region_pixels(live);
                    all.insert(all.end(), px.begin(), px.end());
                }
                Region merged = region_from_pixels(all, frame_index);
                const int groups = static_cast<int>(regions.size()) - 1;
                regions = kmeans_pixels(merged.mask, groups, seed, {double(merged.bbox.left), double(merged.bbox.top)},
                                        frame_index);
                res.trace.push_back({RefineRule::Regroup, pass, trigger, static_cast<int>(regions.size())});
                restart = true;
                break;
            }

            if (area <= p.delete_area_max) {
                Rect trigger = r.bbox;
                regions.erase(regions.begin() + static_cast<long>(i));
                res.trace.push_back({RefineRule::Delete, pass, trigger, static_cast<int>(regions.size())});
                continue;
            }
            ++i;
        }
        if (!restart) break;
        if (pass >= p.max_refine_iterations) {
            res.hit_iteration_cap = true;
            break;
        }
    }
    res.regions = std::move(regions);
    return res;
}

RefineResult segment_frame(const BinaryImage& frame_binary, const SegmentationParams& p, std::uint64_t seed,
                           int frame_index) {
    p.validate();
    auto comps = connected_components(frame_binary, p.connectivity, p.min_component_px, frame_index);
    return refine_regions(std::move(comps), frame_binary, p, seed);
}

}  // namespace vehcov
