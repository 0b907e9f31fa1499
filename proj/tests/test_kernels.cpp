#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "hoi/kernels.hpp"

namespace k = hoi::kernels;

namespace {

struct IsaGuard {
  k::Isa saved = k::active();
  ~IsaGuard() { k::set_active(saved); }
};

}  // namespace

TEST_CASE("scalar kernels are always available") {
  CHECK(k::supported(k::Isa::scalar));
  CHECK(k::supported(k::best_available()));
  IsaGuard guard;
  k::set_active(k::Isa::scalar);
  CHECK(k::active() == k::Isa::scalar);
}

TEST_CASE("dot_rows scalar reference") {
  const std::vector<float> q{1, 2, 3};
  const std::vector<float> rows{1, 0, 0, 0, 1, 0, 1, 1, 1, -1, -2, -3};
  std::vector<float> out(4);
  k::scalar::dot_rows(q, rows, out);
  CHECK(out == std::vector<float>{1, 2, 6, -14});
}

TEST_CASE("iou_one_to_many scalar matches the box iou") {
  std::mt19937_64 rng(3);
  std::vector<hoi::BoundingBox> boxes;
  for (int i = 0; i < 37; ++i) boxes.push_back(hoi::testing::grid_box(rng));
  const k::BoxSoA soa(boxes);
  const auto ref = hoi::testing::grid_box(rng);
  std::vector<double> out(boxes.size());
  k::scalar::iou_one_to_many(ref, soa.columns(), out);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    CHECK(out[i] == hoi::iou(ref, boxes[i]));
  }
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (!k::supported(k::Isa::avx2)) {
    MESSAGE("AVX2 not available; equivalence check skipped");
    return;
  }
  std::mt19937_64 rng(99);

  SUBCASE("iou is bitwise identical") {
    for (int trial = 0; trial < 200; ++trial) {
      std::uniform_int_distribution<int> n(0, 41);
      std::vector<hoi::BoundingBox> boxes;
      const int count = n(rng);
      for (int i = 0; i < count; ++i) {
        boxes.push_back(trial % 2 ? hoi::testing::grid_box(rng)
                                  : hoi::testing::random_box(rng));
      }
      const k::BoxSoA soa(boxes);
      const auto ref = trial % 2 ? hoi::testing::grid_box(rng)
                                 : hoi::testing::random_box(rng);
      std::vector<double> a(boxes.size()), b(boxes.size());
      k::scalar::iou_one_to_many(ref, soa.columns(), a);
      k::avx2::iou_one_to_many(ref, soa.columns(), b);
      REQUIRE(a.size() == b.size());
      CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
    }
  }

  SUBCASE("dot products agree to float rounding") {
    for (std::size_t dim : {1u, 7u, 8u, 9u, 64u, 257u, 768u}) {
      const std::size_t rows = 13;
      const auto q = hoi::testing::random_unit(rng, dim);
      std::vector<float> m;
      for (std::size_t r = 0; r < rows; ++r) {
        auto v = hoi::testing::random_unit(rng, dim);
        m.insert(m.end(), v.begin(), v.end());
      }
      std::vector<float> a(rows), b(rows);
      k::scalar::dot_rows(q, m, a);
      k::avx2::dot_rows(q, m, b);
      for (std::size_t r = 0; r < rows; ++r) {
        CHECK(b[r] == doctest::Approx(a[r]).epsilon(1e-5));
        CHECK(std::abs(b[r] - a[r]) <= 1e-5f);
      }
    }
  }
}

TEST_CASE("dispatch follows the active ISA") {
  IsaGuard guard;
  std::mt19937_64 rng(5);
  std::vector<hoi::BoundingBox> boxes;
  for (int i = 0; i < 10; ++i) boxes.push_back(hoi::testing::grid_box(rng));
  const k::BoxSoA soa(boxes);
  std::vector<double> expected(10), got(10);
  k::scalar::iou_one_to_many(boxes[0], soa.columns(), expected);
  for (auto isa : {k::Isa::scalar, k::Isa::avx2}) {
    if (!k::supported(isa)) continue;
    k::set_active(isa);
    k::iou_one_to_many(boxes[0], soa.columns(), got);
    CHECK(got == expected);
  }
}
