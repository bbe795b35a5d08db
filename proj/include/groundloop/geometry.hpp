#pragma once

#include <optional>
#include <string>

#include "groundloop/errors.hpp"

namespace groundloop {

// Rectangle in pixel coordinates. Detectors may return fractional pixels.
struct PixelRect {
    double x1 = 0;
    double y1 = 0;
    double x2 = 0;
    double y2 = 0;

    bool operator==(const PixelRect&) const = default;
};

/// Corner-format rectangle [x1, y1, x2, y2] as fractions of image size.
/// Construction enforces 0 <= x1 <= x2 <= 1 and 0 <= y1 <= y2 <= 1;
/// inverted or out-of-range rectangles throw InvalidBox.
class NormalizedBox {
public:
    NormalizedBox(double x1, double y1, double x2, double y2);

    double x1() const { return x1_; }
    double y1() const { return y1_; }
    double x2() const { return x2_; }
    double y2() const { return y2_; }

    bool operator==(const NormalizedBox&) const = default;

private:
    double x1_, y1_, x2_, y2_;
};

struct ImageRef {
    std::string id;
    long long width = 0;   // pixels
    long long height = 0;  // pixels
    std::string source;    // file path or remote locator; may be empty for fixtures

    // Set when this ref describes a crop of another image.
    std::optional<std::string> crop_of;
    std::optional<PixelRect> crop_box;  // pixel rect within the parent image

    bool operator==(const ImageRef&) const = default;
};

/// Convert a pixel-space rectangle to fractions of the image size.
/// Out-of-bounds coordinates are clamped to the image, not rejected.
/// Throws ZeroDimensionImage when the image has no extent.
NormalizedBox normalize_box(const PixelRect& pixel_box, const ImageRef& image);

/// Inverse of normalize_box (up to clamping).
PixelRect denormalize_box(const NormalizedBox& box, const ImageRef& image);

double box_area_fraction(const NormalizedBox& box);

} // namespace groundloop
