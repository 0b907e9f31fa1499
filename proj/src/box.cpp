#include "hoi/box.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hoi/error.hpp"

namespace hoi {

BoundingBox BoundingBox::make(double x1, double y1, double x2, double y2) {
  BoundingBox box{x1, y1, x2, y2};
  if (!box.valid()) {
    throw ValidationError("invalid bounding box " + box.to_string());
  }
  return box;
}

bool BoundingBox::valid() const noexcept {
  for (double v : {x1, y1, x2, y2}) {
    if (!std::isfinite(v) || v < 0.0) return false;
  }
  return x1 < x2 && y1 < y2;
}

bool BoundingBox::contains(const BoundingBox& other) const noexcept {
  return x1 <= other.x1 && y1 <= other.y1 && x2 >= other.x2 &&
         y2 >= other.y2;
}

std::string BoundingBox::to_string() const {
  std::ostringstream os;
  os << '[' << x1 << ", " << y1 << ", " << x2 << ", " << y2 << ']';
  return os.str();
}

BoundingBox union_box(const BoundingBox& a, const BoundingBox& b) noexcept {
  return {std::min(a.x1, b.x1), std::min(a.y1, b.y1), std::max(a.x2, b.x2),
          std::max(a.y2, b.y2)};
}

double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
  // Same operation order as the batched kernels so results agree bitwise.
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = iw * ih;
  const double uni = (a.x2 - a.x1) * (a.y2 - a.y1) +
                     (b.x2 - b.x1) * (b.y2 - b.y1) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

}  // namespace hoi
