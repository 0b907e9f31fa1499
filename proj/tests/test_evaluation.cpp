#include <algorithm>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "hoi/error.hpp"
#include "hoi/evaluation.hpp"
#include "oracles.hpp"

using namespace hoi;

namespace {

HoiDetection det(const std::string& image, BoundingBox h, BoundingBox o,
                 int hoi, double score) {
  return {image, h, o, hoi, score};
}

std::vector<HoiDetection> echo(const Annotations& anns, double score = 1.0) {
  std::vector<HoiDetection> out;
  for (const auto& img : anns) {
    for (const auto& g : img.instances) {
      out.push_back({g.image_id, g.human_box, g.object_box, g.hoi_id, score});
    }
  }
  return out;
}

// Same instance with every score replaced by a distinct continuous value.
void untie(std::mt19937_64& rng, std::vector<HoiDetection>& dets) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (auto& d : dets) d.score = u(rng);
}

}  // namespace

TEST_CASE("iou examples") {
  const BoundingBox a{0, 0, 2, 2};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou({0, 0, 1, 1}, {2, 2, 3, 3}) == 0.0);
  CHECK(iou(a, {1, 0, 3, 2}) == doctest::Approx(1.0 / 3.0));
  CHECK(oracle::overlap(a, {1, 0, 3, 2}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("match_class examples") {
  const BoundingBox h{0, 0, 10, 10}, o{20, 20, 30, 30};
  const std::vector<GroundTruthInstance> gt{{"a", h, o, 1}};

  SUBCASE("exact detection is a true positive") {
    const std::vector<HoiDetection> d{det("a", h, o, 1, 0.3)};
    const auto m = match_class(d, gt);
    REQUIRE(m.items.size() == 1);
    CHECK(m.items[0].true_positive);
    CHECK(m.items[0].matched == std::size_t{0});
  }
  SUBCASE("second detection on the same instance is a false positive") {
    const std::vector<HoiDetection> d{det("a", h, o, 1, 0.2),
                                      det("a", h, o, 1, 0.9)};
    const auto m = match_class(d, gt);
    CHECK(m.items[0].detection == 1);
    CHECK(m.items[0].true_positive);
    CHECK_FALSE(m.items[1].true_positive);
    CHECK_FALSE(m.items[1].matched.has_value());
  }
  SUBCASE("other image never matches") {
    const std::vector<HoiDetection> d{det("b", h, o, 1, 0.9)};
    CHECK_FALSE(match_class(d, gt).items[0].true_positive);
  }
  SUBCASE("both boxes must pass") {
    const std::vector<HoiDetection> d{det("a", h, {25, 25, 35, 35}, 1, 0.9)};
    CHECK_FALSE(match_class(d, gt).items[0].true_positive);
    CHECK(match_class(d, gt, 0.1).items[0].true_positive);
  }
  SUBCASE("ties on score rank by image id then input order") {
    const std::vector<GroundTruthInstance> two{{"a", h, o, 1}, {"b", h, o, 1}};
    const std::vector<HoiDetection> d{det("b", h, o, 1, 0.5),
                                      det("a", h, o, 1, 0.5),
                                      det("a", h, o, 1, 0.5)};
    const auto m = match_class(d, two);
    CHECK(m.items[0].detection == 1);
    CHECK(m.items[1].detection == 2);
    CHECK(m.items[2].detection == 0);
    CHECK(m.labels() == std::vector<bool>{true, false, true});
  }
  SUBCASE("best overlap wins, ties go to the earlier instance") {
    const std::vector<GroundTruthInstance> gts{
        {"a", {0, 0, 10, 12}, o, 1}, {"a", h, o, 1}, {"a", h, o, 1}};
    const std::vector<HoiDetection> d{det("a", h, o, 1, 0.9),
                                      det("a", h, o, 1, 0.8)};
    const auto m = match_class(d, gts);
    CHECK(m.items[0].matched == std::size_t{1});
    CHECK(m.items[1].matched == std::size_t{2});
  }
}

TEST_CASE("match_class agrees with the brute-force oracle") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    // Five detections against three instances on one image.
    std::vector<GroundTruthInstance> gts;
    for (int g = 0; g < 3; ++g) {
      gts.push_back({"a", testing::grid_box(rng, 3), testing::grid_box(rng, 3), 1});
    }
    std::vector<HoiDetection> d;
    std::uniform_int_distribution<int> s(1, 4);
    for (int k = 0; k < 5; ++k) {
      d.push_back(det("a", testing::grid_box(rng, 3), testing::grid_box(rng, 3),
                      1, s(rng) / 4.0));
    }
    for (double thr : {0.3, 0.5, 0.7}) {
      CHECK(match_class(d, gts, thr).labels() == oracle::match(d, gts, thr));
    }
  }
}

TEST_CASE("average precision examples") {
  CHECK(average_precision(std::vector<bool>{true}, 1) == 1.0);
  CHECK(average_precision(std::vector<bool>{true, false}, 1) == 1.0);
  const std::vector<bool> fpt{false, true, true};
  CHECK(average_precision(fpt, 2) == doctest::Approx(2.0 / 3.0));
  CHECK(oracle::ap(fpt, 2) == doctest::Approx(2.0 / 3.0));
  CHECK(average_precision(std::vector<bool>{}, 3) == 0.0);
  CHECK(average_precision(std::vector<bool>{false, false}, 2) == 0.0);
  CHECK(average_precision(std::vector<bool>{true}, 0) == 0.0);
  // Half the instances found, both at the top.
  CHECK(average_precision(std::vector<bool>{true, true, false}, 4) ==
        doctest::Approx(0.5));
}

TEST_CASE("average precision agrees with the oracle on random labels") {
  std::mt19937_64 rng(9);
  std::bernoulli_distribution b(0.4);
  std::uniform_int_distribution<int> n(0, 30);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<bool> labels(static_cast<std::size_t>(n(rng)));
    std::size_t tp = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      labels[i] = b(rng);
      tp += labels[i];
    }
    const std::size_t num_gt = tp + static_cast<std::size_t>(n(rng) % 4) + 1;
    CHECK(std::abs(average_precision(labels, num_gt) -
                   oracle::ap(labels, num_gt)) <= 1e-12);
  }
}

TEST_CASE("evaluate examples") {
  const auto t = testing::toy_taxonomy();
  std::mt19937_64 rng(41);
  const auto anns = testing::random_annotations(rng, t, 10, 4);

  SUBCASE("echoed ground truth scores 100") {
    const auto r = evaluate(echo(anns), anns, t, {});
    CHECK(r.full == 100.0);
    CHECK(r.rare == 100.0);
    CHECK(r.non_rare == 100.0);
  }
  SUBCASE("no detections scores 0") {
    const auto r = evaluate({}, anns, t, {});
    CHECK(r.full == 0.0);
    CHECK(r.rare == 0.0);
    CHECK(r.non_rare == 0.0);
    for (const auto& c : r.per_class) {
      CHECK(c.ap == 0.0);
      CHECK(c.num_detections == 0);
      CHECK(c.num_gt > 0);
    }
  }
  SUBCASE("unknown image or class") {
    auto d = echo(anns);
    d[0].image_id = "nowhere";
    CHECK_THROWS_AS(evaluate(d, anns, t, {}), ValidationError);
    d = echo(anns);
    d[0].hoi_id = 77;
    CHECK_THROWS_AS(evaluate(d, anns, t, {}), ValidationError);
  }
  SUBCASE("splits restrict the class set") {
    const SplitDefinition split{"toy", {1, 2}, {3, 4, 5, 6, 7, 8, 9}, "test"};
    auto d = echo(anns);
    // Drop every class-1 detection: class 1 AP becomes 0.
    std::erase_if(d, [](const HoiDetection& x) { return x.hoi_id == 1; });
    const std::vector<SplitDefinition> splits{split};
    const auto r = evaluate(d, anns, t, splits);
    REQUIRE(r.splits.size() == 1);
    CHECK(r.splits[0].name == "toy");
    CHECK(r.splits[0].full == r.full);
    const std::vector<int> unseen{1, 2}, seen{3, 4, 5, 6, 7, 8, 9};
    CHECK(r.splits[0].unseen == mean_ap_percent(r.per_class, unseen));
    CHECK(r.splits[0].seen == mean_ap_percent(r.per_class, seen));
    CHECK(r.splits[0].seen == 100.0);
  }
}

TEST_CASE("evaluate agrees with the oracle on a noisy fixture") {
  const auto t = testing::toy_taxonomy();
  std::mt19937_64 rng(88);
  const auto anns = testing::random_annotations(rng, t, 10, 4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> jitter(-12.0, 12.0);
  std::uniform_int_distribution<int> cls(1, 9);
  std::vector<HoiDetection> d;
  for (const auto& img : anns) {
    for (const auto& g : img.instances) {
      for (int k = 0; k < 3; ++k) {
        auto h = g.human_box, o = g.object_box;
        h.x1 += jitter(rng);
        o.y2 += jitter(rng);
        const int c = u(rng) < 0.7 ? g.hoi_id : cls(rng);
        d.push_back({g.image_id, h, o, c, u(rng)});
      }
    }
  }
  const auto r = evaluate(d, anns, t, {});
  const auto o = oracle::evaluate(d, anns, t, 0.5);
  CHECK(std::abs(r.full - o.full) <= 1e-9);
  CHECK(std::abs(r.rare - o.rare) <= 1e-9);
  CHECK(std::abs(r.non_rare - o.non_rare) <= 1e-9);
  REQUIRE(r.per_class.size() == o.per_class.size());
  for (const auto& c : r.per_class) {
    CHECK(std::abs(c.ap - o.per_class.at(c.hoi_id)) <= 1e-9);
  }
  CHECK(r.full > 0.0);
  CHECK(r.full < 100.0);
}

TEST_CASE("evaluation invariants on random fixtures") {
  const auto t = testing::toy_taxonomy();
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> scale(0.01, 50.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = testing::random_eval_instance(rng, 1);
    const auto num_gt = inst.ground_truth.size();
    const double base = average_precision(
        match_class(inst.detections, inst.ground_truth), num_gt);
    CHECK(std::abs(base - oracle::ap(oracle::match(inst.detections,
                                                   inst.ground_truth, 0.5),
                                     num_gt)) <= 1e-9);

    auto scaled = inst.detections;
    const double c = scale(rng);
    for (auto& d : scaled) d.score *= c;
    CHECK(average_precision(match_class(scaled, inst.ground_truth), num_gt) ==
          base);

    double prev = 2.0;
    for (double thr : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const double ap = average_precision(
          match_class(inst.detections, inst.ground_truth, thr), num_gt);
      CHECK(ap <= prev);
      prev = ap;
    }

    untie(rng, inst.detections);
    const double untied = average_precision(
        match_class(inst.detections, inst.ground_truth), num_gt);
    auto shuffled = inst.detections;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(average_precision(match_class(shuffled, inst.ground_truth), num_gt) ==
          untied);
  }
}

TEST_CASE("report aggregates") {
  const auto t = testing::toy_taxonomy();
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto anns = testing::random_annotations(rng, t, 6, 3);
    auto d = echo(anns);
    std::bernoulli_distribution keep(0.6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::erase_if(d, [&](const HoiDetection&) { return !keep(rng); });
    for (auto& x : d) x.score = u(rng);
    const auto r = evaluate(d, anns, t, {});
    bool has_rare = false, has_non = false;
    for (const auto& c : r.per_class) {
      (t.at(c.hoi_id).rare ? has_rare : has_non) = true;
    }
    if (has_rare && has_non) {
      CHECK(r.full >= std::min(r.rare, r.non_rare) - 1e-9);
      CHECK(r.full <= std::max(r.rare, r.non_rare) + 1e-9);
    }
    auto shuffled = d;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto s = evaluate(shuffled, anns, t, {});
    CHECK(s.full == r.full);
    CHECK(s.rare == r.rare);
    CHECK(s.non_rare == r.non_rare);
  }
}
