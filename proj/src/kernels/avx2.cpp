#include <immintrin.h>

#include <cassert>

#include "hoi/kernels.hpp"

namespace hoi::kernels::avx2 {

namespace {

float horizontal_sum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

}  // namespace

void dot_rows(std::span<const float> query, std::span<const float> rows,
              std::span<float> out) {
  const std::size_t dim = query.size();
  assert(rows.size() == out.size() * dim);
  const std::size_t vec_end = dim - dim % 8;
  for (std::size_t r = 0; r < out.size(); ++r) {
    const float* row = rows.data() + r * dim;
    __m256 acc = _mm256_setzero_ps();
    std::size_t k = 0;
    for (; k < vec_end; k += 8) {
      const __m256 q = _mm256_loadu_ps(query.data() + k);
      const __m256 x = _mm256_loadu_ps(row + k);
      acc = _mm256_add_ps(acc, _mm256_mul_ps(q, x));
    }
    float sum = horizontal_sum(acc);
    for (; k < dim; ++k) sum += query[k] * row[k];
    out[r] = sum;
  }
}

void iou_one_to_many(const BoundingBox& ref, const BoxColumns& boxes,
                     std::span<double> out) {
  assert(out.size() == boxes.size());
  const std::size_t n = boxes.size();
  const std::size_t vec_end = n - n % 4;
  const double ref_area = (ref.x2 - ref.x1) * (ref.y2 - ref.y1);

  const __m256d rx1 = _mm256_set1_pd(ref.x1);
  const __m256d ry1 = _mm256_set1_pd(ref.y1);
  const __m256d rx2 = _mm256_set1_pd(ref.x2);
  const __m256d ry2 = _mm256_set1_pd(ref.y2);
  const __m256d rarea = _mm256_set1_pd(ref_area);
  const __m256d zero = _mm256_setzero_pd();

  std::size_t i = 0;
  for (; i < vec_end; i += 4) {
    const __m256d bx1 = _mm256_loadu_pd(boxes.x1.data() + i);
    const __m256d by1 = _mm256_loadu_pd(boxes.y1.data() + i);
    const __m256d bx2 = _mm256_loadu_pd(boxes.x2.data() + i);
    const __m256d by2 = _mm256_loadu_pd(boxes.y2.data() + i);
    // Operand order of min/max mirrors std::min/std::max in the scalar path
    // (first operand wins on ties) so the results match bit for bit.
    const __m256d iw = _mm256_max_pd(
        _mm256_sub_pd(_mm256_min_pd(bx2, rx2), _mm256_max_pd(bx1, rx1)), zero);
    const __m256d ih = _mm256_max_pd(
        _mm256_sub_pd(_mm256_min_pd(by2, ry2), _mm256_max_pd(by1, ry1)), zero);
    const __m256d inter = _mm256_mul_pd(iw, ih);
    const __m256d barea = _mm256_mul_pd(_mm256_sub_pd(bx2, bx1),
                                        _mm256_sub_pd(by2, by1));
    const __m256d uni = _mm256_sub_pd(_mm256_add_pd(rarea, barea), inter);
    const __m256d ratio = _mm256_div_pd(inter, uni);
    const __m256d positive = _mm256_cmp_pd(uni, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(out.data() + i, _mm256_and_pd(ratio, positive));
  }
  if (i < n) {
    BoxColumns tail{boxes.x1.subspan(i), boxes.y1.subspan(i),
                    boxes.x2.subspan(i), boxes.y2.subspan(i)};
    scalar::iou_one_to_many(ref, tail, out.subspan(i));
  }
}

}  // namespace hoi::kernels::avx2
