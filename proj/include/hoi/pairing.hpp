#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hoi/box.hpp"
#include "hoi/dataset.hpp"

namespace hoi {

// A (human, object) box pair to be scored. pair_index numbers the pairs of
// one image consecutively from 0 in generation order.
struct CandidatePair {
  std::string image_id;
  int pair_index = 0;
  BoundingBox human_box;
  BoundingBox object_box;
  int object_id = 0;
  double human_score = 1.0;
  double object_score = 1.0;
  BoundingBox union_box;

  std::string embedding_key() const;
  friend bool operator==(const CandidatePair&, const CandidatePair&) = default;
};

struct DetectionBox {
  std::string image_id;
  BoundingBox box;
  int category_id = 0;
  double score = 0.0;
  friend bool operator==(const DetectionBox&, const DetectionBox&) = default;
};

enum class Regime { gt, gt_recombined, detector };

std::string_view regime_name(Regime r) noexcept;
// Accepts "gt", "gt-r" and "detector".
Regime parse_regime(std::string_view name);

struct DetectorParams {
  double score_threshold = 0.25;
  std::size_t max_pairs_per_image = 100;
};

// Ground-truth pairs of one image: one pair per distinct
// (human_box, object_box, object_id), in first-appearance order.
std::vector<CandidatePair> make_gt_pairs(
    std::span<const GroundTruthInstance> instances,
    const HoiTaxonomy& taxonomy);

// Every ground-truth human box combined with every ground-truth box of the
// image (persons included), skipping pairs whose two boxes coincide.
std::vector<CandidatePair> make_recombined_pairs(
    std::span<const GroundTruthInstance> instances,
    const HoiTaxonomy& taxonomy);

// Person detections x all detections above the score threshold, skipping
// identical-box pairs, capped at the top max_pairs_per_image by
// human_score * object_score (ties keep generation order). Surviving pairs
// stay in generation order.
std::vector<CandidatePair> make_detector_pairs(
    std::span<const DetectionBox> detections, const DetectorParams& params,
    int person_category_id);

// Detections grouped per image, images in order of first appearance.
struct ImageDetections {
  std::string image_id;
  std::vector<DetectionBox> boxes;
};

std::vector<ImageDetections> group_by_image(std::vector<DetectionBox> boxes);

// Runs a regime over a whole dataset. For the detector regime the image
// order follows `annotations` when it is non-empty (detections on unknown
// images are rejected), otherwise first appearance in `detections`.
std::vector<CandidatePair> generate_pairs(
    Regime regime, const Annotations& annotations,
    std::span<const DetectionBox> detections, const HoiTaxonomy& taxonomy,
    const DetectorParams& params = {});

// Detection JSON Lines: {"image_id", "box", "category_id", "score"}.
std::vector<DetectionBox> read_detection_boxes(std::istream& in,
                                               std::string_view source);
std::vector<DetectionBox> load_detection_boxes(
    const std::filesystem::path& path);
void write_detection_boxes(std::ostream& out,
                           std::span<const DetectionBox> boxes);

// Pair list JSON Lines, one CandidatePair per line.
void write_pairs(std::ostream& out, std::span<const CandidatePair> pairs);
std::vector<CandidatePair> read_pairs(std::istream& in,
                                      std::string_view source);
std::vector<CandidatePair> load_pairs(const std::filesystem::path& path);

}  // namespace hoi
