#include <algorithm>
#include <cassert>

#include "hoi/kernels.hpp"

namespace hoi::kernels::scalar {

void dot_rows(std::span<const float> query, std::span<const float> rows,
              std::span<float> out) {
  const std::size_t dim = query.size();
  assert(rows.size() == out.size() * dim);
  for (std::size_t r = 0; r < out.size(); ++r) {
    const float* row = rows.data() + r * dim;
    float acc = 0.0f;
    for (std::size_t k = 0; k < dim; ++k) acc += query[k] * row[k];
    out[r] = acc;
  }
}

void iou_one_to_many(const BoundingBox& ref, const BoxColumns& boxes,
                     std::span<double> out) {
  assert(out.size() == boxes.size());
  const double ref_area = (ref.x2 - ref.x1) * (ref.y2 - ref.y1);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const double iw =
        std::max(0.0, std::min(ref.x2, boxes.x2[i]) -
                          std::max(ref.x1, boxes.x1[i]));
    const double ih =
        std::max(0.0, std::min(ref.y2, boxes.y2[i]) -
                          std::max(ref.y1, boxes.y1[i]));
    const double inter = iw * ih;
    const double uni =
        ref_area + (boxes.x2[i] - boxes.x1[i]) * (boxes.y2[i] - boxes.y1[i]) -
        inter;
    out[i] = uni > 0.0 ? inter / uni : 0.0;
  }
}

}  // namespace hoi::kernels::scalar
