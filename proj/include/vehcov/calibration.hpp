#pragma once

#include <optional>

#include "vehcov/image.hpp"

namespace vehcov {

/// Per-camera rotation + crop. Angles follow pixel coordinates (x right,
/// y down): a positive angle turns the picture clockwise on screen.
struct Calibration {
    double angle_degrees = 0.0;
    /// In rotated-image coordinates; absent means the whole rotated frame.
    std::optional<Rect> crop;

    /// Throws unless -90 < angle < 90 and the crop has positive size.
    void validate() const;
};

/// Angle that rotates the clicked road baseline p1->p2 to horizontal.
/// Throws on coincident points and on a vertical baseline.
double angle_from_baseline(Point p1, Point p2);

/// Size of the frame after rotation: the bounding box of the rotated input,
/// so no source pixel is lost.
struct Size {
    int width = 0;
    int height = 0;
};
Size rotated_size(int width, int height, double angle_degrees);

/// Bicubic (Catmull-Rom, a = -0.5) rotation about the image center. Output
/// positions that fall outside the source are zero.
ColorImage rotate(const ColorImage& img, double angle_degrees);
GrayImage rotate(const GrayImage& img, double angle_degrees);

/// Rotate then crop. Throws if the crop exceeds the rotated image bounds.
ColorImage rotate_and_crop(const ColorImage& img, const Calibration& cal);

/// Dimensions of rotate_and_crop output for a frame of the given size.
Size calibrated_size(int width, int height, const Calibration& cal);

}  // namespace vehcov
