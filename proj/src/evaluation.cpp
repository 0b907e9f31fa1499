#include "hoi/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "hoi/error.hpp"
#include "hoi/kernels.hpp"

namespace hoi {

std::vector<bool> MatchResult::labels() const {
  std::vector<bool> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(it.true_positive);
  return out;
}

namespace {

struct DetRef {
  std::size_t index;  // caller-side detection index
  double score;
  int image_rank;     // rank of image_id in ascending string order
  int group;          // ground-truth group of the image, -1 when none
};

struct GtGroup {
  std::vector<std::size_t> gt_index;  // caller-side ground-truth indices
  kernels::BoxSoA humans;
  kernels::BoxSoA objects;
};

// Matching core shared by match_class and evaluate. `gts(i)` returns the
// ground truth at caller-side index i.
template <typename GtAt>
MatchResult match_refs(std::vector<DetRef> dets, std::span<GtGroup> groups,
                       GtAt gts, double iou_threshold) {
  std::stable_sort(dets.begin(), dets.end(),
                   [](const DetRef& a, const DetRef& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.image_rank < b.image_rank;
                   });

  std::vector<std::vector<char>> used(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    used[g].assign(groups[g].gt_index.size(), 0);
  }
  std::vector<double> iou_h, iou_o;

  MatchResult result;
  result.items.reserve(dets.size());
  for (const auto& d : dets) {
    MatchResult::Item item{d.index, false, std::nullopt};
    if (d.group >= 0) {
      GtGroup& g = groups[static_cast<std::size_t>(d.group)];
      const auto& det = gts.detection(d.index);
      const std::size_t n = g.gt_index.size();
      iou_h.resize(n);
      iou_o.resize(n);
      kernels::iou_one_to_many(det.human_box, g.humans.columns(), iou_h);
      kernels::iou_one_to_many(det.object_box, g.objects.columns(), iou_o);
      auto& taken = used[static_cast<std::size_t>(d.group)];
      std::ptrdiff_t best = -1;
      double best_overlap = -1.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (taken[j] || iou_h[j] < iou_threshold || iou_o[j] < iou_threshold) {
          continue;
        }
        const double overlap = std::min(iou_h[j], iou_o[j]);
        if (overlap > best_overlap) {
          best_overlap = overlap;
          best = static_cast<std::ptrdiff_t>(j);
        }
      }
      if (best >= 0) {
        taken[static_cast<std::size_t>(best)] = 1;
        item.true_positive = true;
        item.matched = g.gt_index[static_cast<std::size_t>(best)];
      }
    }
    result.items.push_back(item);
  }
  return result;
}

struct SpanAccess {
  std::span<const HoiDetection> dets;
  const HoiDetection& detection(std::size_t i) const { return dets[i]; }
};

}  // namespace

MatchResult match_class(std::span<const HoiDetection> detections,
                        std::span<const GroundTruthInstance> ground_truth,
                        double iou_threshold) {
  std::vector<std::string> image_ids;
  for (const auto& d : detections) image_ids.push_back(d.image_id);
  std::sort(image_ids.begin(), image_ids.end());
  image_ids.erase(std::unique(image_ids.begin(), image_ids.end()),
                  image_ids.end());
  auto rank_of = [&](const std::string& id) {
    return static_cast<int>(
        std::lower_bound(image_ids.begin(), image_ids.end(), id) -
        image_ids.begin());
  };

  std::vector<GtGroup> groups;
  std::unordered_map<std::string, int> group_of;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    const auto& gt = ground_truth[i];
    auto [it, inserted] =
        group_of.emplace(gt.image_id, static_cast<int>(groups.size()));
    if (inserted) groups.emplace_back();
    GtGroup& g = groups[static_cast<std::size_t>(it->second)];
    g.gt_index.push_back(i);
    g.humans.push_back(gt.human_box);
    g.objects.push_back(gt.object_box);
  }

  std::vector<DetRef> refs;
  refs.reserve(detections.size());
  for (std::size_t i = 0; i < detections.size(); ++i) {
    auto it = group_of.find(detections[i].image_id);
    refs.push_back({i, detections[i].score, rank_of(detections[i].image_id),
                    it == group_of.end() ? -1 : it->second});
  }
  return match_refs(std::move(refs), groups, SpanAccess{detections},
                    iou_threshold);
}

double average_precision(const std::vector<bool>& ranked_labels,
                         std::size_t num_gt) {
  if (num_gt == 0 || ranked_labels.empty()) return 0.0;
  const std::size_t n = ranked_labels.size();
  // Recall/precision with sentinels at both ends.
  std::vector<double> recall(n + 2), precision(n + 2);
  recall[0] = 0.0;
  precision[0] = 0.0;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (ranked_labels[i]) ++tp;
    recall[i + 1] = static_cast<double>(tp) / static_cast<double>(num_gt);
    precision[i + 1] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  recall[n + 1] = 1.0;
  precision[n + 1] = 0.0;
  for (std::size_t i = n + 1; i > 0; --i) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0;
  for (std::size_t i = 1; i < n + 2; ++i) {
    if (recall[i] != recall[i - 1]) {
      ap += (recall[i] - recall[i - 1]) * precision[i];
    }
  }
  return ap;
}

double average_precision(const MatchResult& match, std::size_t num_gt) {
  return average_precision(match.labels(), num_gt);
}

double mean_ap_percent(std::span<const ClassAp> per_class,
                       std::span<const int> hoi_ids) {
  const std::unordered_set<int> wanted(hoi_ids.begin(), hoi_ids.end());
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : per_class) {
    if (c.num_gt > 0 && wanted.count(c.hoi_id)) {
      sum += c.ap;
      ++n;
    }
  }
  return n == 0 ? 0.0 : 100.0 * sum / static_cast<double>(n);
}

EvalReport evaluate(std::span<const HoiDetection> detections,
                    const Annotations& annotations,
                    const HoiTaxonomy& taxonomy,
                    std::span<const SplitDefinition> splits,
                    double iou_threshold) {
  // Image ids ranked in ascending string order for tie-breaking.
  std::unordered_map<std::string, int> image_rank;
  {
    std::vector<std::string> ids;
    ids.reserve(annotations.size());
    for (const auto& img : annotations) ids.push_back(img.image.id);
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      image_rank.emplace(ids[i], static_cast<int>(i));
    }
  }

  // Ground truth by class, then by image.
  struct ClassData {
    std::vector<GtGroup> groups;
    std::unordered_map<int, int> group_of_image;  // image rank -> group
    std::vector<const GroundTruthInstance*> gts;
    std::vector<DetRef> dets;
  };
  std::unordered_map<int, ClassData> classes;
  for (const auto& img : annotations) {
    const int rank = image_rank.at(img.image.id);
    for (const auto& gt : img.instances) {
      ClassData& c = classes[gt.hoi_id];
      auto [it, inserted] =
          c.group_of_image.emplace(rank, static_cast<int>(c.groups.size()));
      if (inserted) c.groups.emplace_back();
      GtGroup& g = c.groups[static_cast<std::size_t>(it->second)];
      g.gt_index.push_back(c.gts.size());
      g.humans.push_back(gt.human_box);
      g.objects.push_back(gt.object_box);
      c.gts.push_back(&gt);
    }
  }

  for (std::size_t i = 0; i < detections.size(); ++i) {
    const auto& d = detections[i];
    auto rank = image_rank.find(d.image_id);
    if (rank == image_rank.end()) {
      throw ValidationError("detection " + std::to_string(i) +
                            " references unknown image_id '" + d.image_id +
                            "'");
    }
    if (!taxonomy.contains(d.hoi_id)) {
      throw ValidationError("detection " + std::to_string(i) +
                            " references unknown hoi_id " +
                            std::to_string(d.hoi_id));
    }
    auto cls = classes.find(d.hoi_id);
    if (cls == classes.end()) continue;  // no ground truth: class excluded
    auto grp = cls->second.group_of_image.find(rank->second);
    cls->second.dets.push_back(
        {i, d.score, rank->second,
         grp == cls->second.group_of_image.end() ? -1 : grp->second});
  }

  EvalReport report;
  for (const auto& category : taxonomy.categories()) {
    auto it = classes.find(category.hoi_id);
    if (it == classes.end()) continue;
    ClassData& c = it->second;
    const std::size_t num_dets = c.dets.size();
    const MatchResult match = match_refs(std::move(c.dets), c.groups,
                                         SpanAccess{detections}, iou_threshold);
    report.per_class.push_back({category.hoi_id,
                                average_precision(match, c.gts.size()),
                                c.gts.size(), num_dets});
  }

  const auto all = taxonomy.all_ids();
  report.full = mean_ap_percent(report.per_class, all);
  report.rare = mean_ap_percent(report.per_class, taxonomy.rare_ids());
  report.non_rare = mean_ap_percent(report.per_class, taxonomy.non_rare_ids());
  for (const auto& split : splits) {
    report.splits.push_back({split.name, report.full,
                             mean_ap_percent(report.per_class,
                                             split.unseen_hoi_ids),
                             mean_ap_percent(report.per_class,
                                             split.seen_hoi_ids)});
  }
  return report;
}

}  // namespace hoi
