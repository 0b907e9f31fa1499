#include <atomic>
#include <string>

#include "hoi/error.hpp"
#include "hoi/kernels.hpp"

namespace hoi::kernels {

namespace {

bool cpu_has_avx2() noexcept {
#if defined(HOI_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

std::atomic<Isa>& active_isa() {
  static std::atomic<Isa> isa{best_available()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

bool supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return cpu_has_avx2();
  }
  return false;
}

Isa best_available() noexcept {
  return supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

Isa active() noexcept { return active_isa().load(std::memory_order_relaxed); }

void set_active(Isa isa) {
  if (!supported(isa)) {
    throw Error("kernel ISA not supported here: " + std::string(isa_name(isa)));
  }
  active_isa().store(isa, std::memory_order_relaxed);
}

BoxSoA::BoxSoA(std::span<const BoundingBox> boxes) {
  x1_.reserve(boxes.size());
  y1_.reserve(boxes.size());
  x2_.reserve(boxes.size());
  y2_.reserve(boxes.size());
  for (const auto& b : boxes) push_back(b);
}

void BoxSoA::push_back(const BoundingBox& b) {
  x1_.push_back(b.x1);
  y1_.push_back(b.y1);
  x2_.push_back(b.x2);
  y2_.push_back(b.y2);
}

void BoxSoA::clear() {
  x1_.clear();
  y1_.clear();
  x2_.clear();
  y2_.clear();
}

void dot_rows(std::span<const float> query, std::span<const float> rows,
              std::span<float> out) {
#if defined(HOI_HAVE_AVX2_KERNELS)
  if (active() == Isa::avx2) return avx2::dot_rows(query, rows, out);
#endif
  scalar::dot_rows(query, rows, out);
}

void iou_one_to_many(const BoundingBox& ref, const BoxColumns& boxes,
                     std::span<double> out) {
#if defined(HOI_HAVE_AVX2_KERNELS)
  if (active() == Isa::avx2) return avx2::iou_one_to_many(ref, boxes, out);
#endif
  scalar::iou_one_to_many(ref, boxes, out);
}

#if !defined(HOI_HAVE_AVX2_KERNELS)
// Unreachable when AVX2 is not built (supported(avx2) is false); kept so the
// equivalence tests link on every target.
namespace avx2 {
void dot_rows(std::span<const float> query, std::span<const float> rows,
              std::span<float> out) {
  scalar::dot_rows(query, rows, out);
}
void iou_one_to_many(const BoundingBox& ref, const BoxColumns& boxes,
                     std::span<double> out) {
  scalar::iou_one_to_many(ref, boxes, out);
}
}  // namespace avx2
#endif

}  // namespace hoi::kernels
