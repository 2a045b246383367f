#pragma once

#include <cstdint>
#include <vector>

#include "vehcov/image.hpp"

namespace vehcov {

/// A candidate vehicle region within one frame.
struct Region {
    int frame_index = 0;
    Rect bbox;            ///< tight bounding box in frame coordinates
    BinaryImage mask;     ///< bbox-sized
    double fill_fraction = 0.0;
    long pixel_count = 0;
};

/// Builds a Region from frame-coordinate pixels (non-empty).
Region region_from_pixels(const std::vector<std::pair<int, int>>& pixels, int frame_index);

/// Set-pixel coordinates of a region in frame coordinates, raster order.
std::vector<std::pair<int, int>> region_pixels(const Region& r);

struct SegmentationParams {
    long min_component_px = 60;
    double split_fill_max = 0.45;
    long split_area_min = 1400;
    double regroup_fill_min = 0.80;
    long regroup_area_max = 340;
    long delete_area_max = 200;
    int connectivity = 8;
    int max_refine_iterations = 8;

    void validate() const;
};

/// Maximal connected sets of set pixels, ordered by the raster position of
/// their first pixel. Components with fewer than `min_pixels` are dropped.
std::vector<Region> connected_components(const BinaryImage& img, int connectivity, long min_pixels = 1,
                                         int frame_index = 0);

/// City-block k-means over the set pixels of `mask` (whose top-left corner sits
/// at `origin` in frame coordinates). Farthest-point seeding from `seed`,
/// Lloyd iterations with component-wise median centers. Returns one Region per
/// non-empty cluster, ordered by first pixel.
std::vector<Region> kmeans_pixels(const BinaryImage& mask, int k, std::uint64_t seed, Point origin = {},
                                  int frame_index = 0);

enum class RefineRule { Split, Regroup, Delete };

struct RuleFiring {
    RefineRule rule;
    int pass = 0;
    Rect bbox;             ///< region that triggered the rule
    int regions_after = 0; ///< live region count right after the rule applied
};

struct RefineResult {
    std::vector<Region> regions;
    std::vector<RuleFiring> trace;
    int passes = 0;
    /// Set when the pass limit stopped refinement before it settled.
    bool hit_iteration_cap = false;
};

/// Applies the split / regroup / delete rules until a pass completes without
/// a regroup restart, or the pass limit is reached.
RefineResult refine_regions(std::vector<Region> regions, const BinaryImage& frame_binary,
                            const SegmentationParams& p, std::uint64_t seed);

/// connected_components (with the configured minimum size) then refine_regions.
RefineResult segment_frame(const BinaryImage& frame_binary, const SegmentationParams& p, std::uint64_t seed,
                           int frame_index = 0);

}  // namespace vehcov
