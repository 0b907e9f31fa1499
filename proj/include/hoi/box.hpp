#pragma once

#include <array>
#include <compare>
#include <string>

namespace hoi {

// Axis-aligned rectangle in continuous pixel coordinates, origin top-left.
// A valid box has finite, non-negative coordinates and strictly positive
// area; construct through BoundingBox::make to enforce that.
struct BoundingBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  // Throws ValidationError when the coordinates do not form a valid box.
  static BoundingBox make(double x1, double y1, double x2, double y2);

  bool valid() const noexcept;
  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() * height(); }
  bool contains(const BoundingBox& other) const noexcept;

  std::array<double, 4> as_array() const noexcept { return {x1, y1, x2, y2}; }
  std::string to_string() const;

  // Exact coordinate equality; used for box deduplication.
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
  friend auto operator<=>(const BoundingBox&, const BoundingBox&) = default;
};

// Smallest box containing both inputs.
BoundingBox union_box(const BoundingBox& a, const BoundingBox& b) noexcept;

// Intersection over union in [0, 1]; 0 for disjoint boxes.
double iou(const BoundingBox& a, const BoundingBox& b) noexcept;

}  // namespace hoi
