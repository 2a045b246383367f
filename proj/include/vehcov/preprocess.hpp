#pragma once

#include <optional>
#include <span>
#include <vector>

#include "vehcov/frame_store.hpp"
#include "vehcov/image.hpp"

namespace vehcov {

/// Per-pixel, per-channel mean of a frame sequence.
struct BackgroundModel {
    ColorImage mean_image;
    int n_frames = 0;
};

struct CleanParams {
    double floor = 10.0;
    int median_window = 5;
    double edge_gain = 10.0;
    double canny_high = 0.2;
    /// Fixed binarization cutoff; when unset the sequence-wide mean is used.
    std::optional<double> binary_threshold_override;

    void validate() const;
};

BackgroundModel mean_background(const FrameSequence& seq);
BackgroundModel mean_background(std::span<const ColorImage> frames);

/// Channel-averaged absolute difference from the background.
GrayImage subtract_gray(const ColorImage& frame, const BackgroundModel& bg);

/// window x window median with replicate padding; `window` must be odd.
GrayImage median_filter(const GrayImage& img, int window);

/// 0 below `floor`, otherwise value - floor.
GrayImage floor_shift(const GrayImage& img, double floor);

/// Median filter followed by floor shift.
GrayImage clean(const GrayImage& subtracted, const CleanParams& p);

/// Fixed Canny internals.
inline constexpr double kCannySigma = 1.4;
inline constexpr double kCannyLowRatio = 0.4;

/// Canny edge map. `high` is a fraction of the maximum gradient magnitude;
/// hysteresis uses low = 0.4 * high with 8-connected growth.
BinaryImage canny_edges(const GrayImage& img, double high);

struct BinarizeResult {
    std::vector<BinaryImage> masks;
    /// Cutoff actually applied (sequence mean or the override).
    double threshold = 0.0;
};

/// Adds edge_gain * Canny to each frame, then thresholds every frame against
/// one sequence-wide cutoff.
BinarizeResult binarize_sequence(std::span<const GrayImage> cleaned, const CleanParams& p);

}  // namespace vehcov
