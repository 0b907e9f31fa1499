#pragma once

// Data-parallel inner loops used by scoring and matching. Every kernel has a
// portable scalar reference and, where the build and CPU allow it, an AVX2
// variant. The variant is chosen once at startup from the CPU features and
// can be pinned for testing.

#include <span>
#include <string_view>
#include <vector>

#include "hoi/box.hpp"

namespace hoi::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;

// Best ISA supported by both this build and the running CPU.
Isa best_available() noexcept;
bool supported(Isa isa) noexcept;

// ISA used by the dispatching entry points below.
Isa active() noexcept;
// Pins the dispatch target. Throws hoi::Error when `isa` is not supported.
void set_active(Isa isa);

// Structure-of-arrays view over a set of boxes.
struct BoxColumns {
  std::span<const double> x1, y1, x2, y2;
  std::size_t size() const noexcept { return x1.size(); }
};

// Owning SoA storage for BoxColumns.
class BoxSoA {
 public:
  BoxSoA() = default;
  explicit BoxSoA(std::span<const BoundingBox> boxes);
  void push_back(const BoundingBox& b);
  void clear();
  std::size_t size() const noexcept { return x1_.size(); }
  BoxColumns columns() const noexcept { return {x1_, y1_, x2_, y2_}; }

 private:
  std::vector<double> x1_, y1_, x2_, y2_;
};

// out[i] = <query, rows[i*dim .. (i+1)*dim)>, with dim = query.size().
void dot_rows(std::span<const float> query, std::span<const float> rows,
              std::span<float> out);

// out[i] = iou(ref, boxes[i]); bitwise identical across ISAs.
void iou_one_to_many(const BoundingBox& ref, const BoxColumns& boxes,
                     std::span<double> out);

// Direct access to a specific variant, for equivalence tests.
namespace scalar {
void dot_rows(std::span<const float> query, std::span<const float> rows,
              std::span<float> out);
void iou_one_to_many(const BoundingBox& ref, const BoxColumns& boxes,
                     std::span<double> out);
}  // namespace scalar

namespace avx2 {
void dot_rows(std::span<const float> query, std::span<const float> rows,
              std::span<float> out);
void iou_one_to_many(const BoundingBox& ref, const BoxColumns& boxes,
                     std::span<double> out);
}  // namespace avx2

}  // namespace hoi::kernels
