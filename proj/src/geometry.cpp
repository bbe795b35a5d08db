#include "groundloop/geometry.hpp"

#include <algorithm>
#include <sstream>

namespace groundloop {

namespace {

void check_range(double lo, double hi, const char* axis) {
    if (lo < 0.0 || hi > 1.0) {
        std::ostringstream os;
        os << "normalized " << axis << " range [" << lo << ", " << hi << "] outside [0, 1]";
        throw InvalidBox(os.str());
    }
    if (hi < lo) {
        std::ostringstream os;
        os << "inverted rectangle: " << axis << "2 (" << hi << ") < " << axis << "1 (" << lo << ")";
        throw InvalidBox(os.str());
    }
}

} // namespace

NormalizedBox::NormalizedBox(double x1, double y1, double x2, double y2)
    : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
    check_range(x1_, x2_, "x");
    check_range(y1_, y2_, "y");
}

NormalizedBox normalize_box(const PixelRect& pixel_box, const ImageRef& image) {
    if (image.width <= 0 || image.height <= 0) {
        throw ZeroDimensionImage("image '" + image.id + "' has non-positive dimensions");
    }
    const double w = static_cast<double>(image.width);
    const double h = static_cast<double>(image.height);
    const double x1 = std::clamp(pixel_box.x1, 0.0, w) / w;
    const double x2 = std::clamp(pixel_box.x2, 0.0, w) / w;
    const double y1 = std::clamp(pixel_box.y1, 0.0, h) / h;
    const double y2 = std::clamp(pixel_box.y2, 0.0, h) / h;
    return NormalizedBox(x1, y1, x2, y2);  // still rejects inverted rects
}

PixelRect denormalize_box(const NormalizedBox& box, const ImageRef& image) {
    if (image.width <= 0 || image.height <= 0) {
        throw ZeroDimensionImage("image '" + image.id + "' has non-positive dimensions");
    }
    const double w = static_cast<double>(image.width);
    const double h = static_cast<double>(image.height);
    return PixelRect{box.x1() * w, box.y1() * h, box.x2() * w, box.y2() * h};
}

double box_area_fraction(const NormalizedBox& box) {
    return (box.x2() - box.x1()) * (box.y2() - box.y1());
}

} // namespace groundloop
