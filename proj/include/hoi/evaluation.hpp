#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hoi/dataset.hpp"
#include "hoi/scoring.hpp"

namespace hoi {

inline constexpr double kDefaultIouThreshold = 0.5;

// Outcome of greedy matching for one class. Items follow the ranking order:
// score descending, then ascending image_id, then input order.
struct MatchResult {
  struct Item {
    std::size_t detection = 0;           // index into the input detections
    bool true_positive = false;
    std::optional<std::size_t> matched;  // index into the input ground truth
  };
  std::vector<Item> items;

  std::vector<bool> labels() const;
};

// Greedy matching of one class's detections against its ground truth: a
// detection is a true positive when an unmatched instance of the same image
// overlaps it with IoU >= iou_threshold on both the human and the object
// box. Among eligible instances the one with the largest
// min(iou_human, iou_object) wins, ties going to the earlier instance.
MatchResult match_class(std::span<const HoiDetection> detections,
                        std::span<const GroundTruthInstance> ground_truth,
                        double iou_threshold = kDefaultIouThreshold);

// All-point AP over the precision envelope of a ranked TP/FP sequence.
// Returns 0 when there are no detections or num_gt is 0.
double average_precision(const std::vector<bool>& ranked_labels,
                         std::size_t num_gt);
double average_precision(const MatchResult& match, std::size_t num_gt);

struct ClassAp {
  int hoi_id = 0;
  double ap = 0.0;
  std::size_t num_gt = 0;
  std::size_t num_detections = 0;
};

// Means are percentages over classes with at least one GT instance.
struct SplitAggregate {
  std::string name;
  double full = 0.0;
  double unseen = 0.0;
  double seen = 0.0;
};

struct EvalReport {
  double full = 0.0;
  double rare = 0.0;
  double non_rare = 0.0;
  std::vector<SplitAggregate> splits;
  std::vector<ClassAp> per_class;  // classes with num_gt > 0, ascending id
};

// Default-mode HICO-DET evaluation. Rare/non-rare come from the taxonomy
// flags; one SplitAggregate is produced per entry of `splits`, in order.
// Throws ValidationError for detections on unknown images or classes.
EvalReport evaluate(std::span<const HoiDetection> detections,
                    const Annotations& annotations,
                    const HoiTaxonomy& taxonomy,
                    std::span<const SplitDefinition> splits,
                    double iou_threshold = kDefaultIouThreshold);

// Mean AP (percent) of the listed classes that have ground truth; 0 when
// none of them has.
double mean_ap_percent(std::span<const ClassAp> per_class,
                       std::span<const int> hoi_ids);

}  // namespace hoi
