#include "hoi/pairing.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "hoi/error.hpp"
#include "hoi/jsonl.hpp"

namespace hoi {

using json_io::Json;

std::string CandidatePair::embedding_key() const {
  return image_id + ":" + std::to_string(pair_index);
}

std::string_view regime_name(Regime r) noexcept {
  switch (r) {
    case Regime::gt:
      return "gt";
    case Regime::gt_recombined:
      return "gt-r";
    case Regime::detector:
      return "detector";
  }
  return "unknown";
}

Regime parse_regime(std::string_view name) {
  if (name == "gt") return Regime::gt;
  if (name == "gt-r") return Regime::gt_recombined;
  if (name == "detector") return Regime::detector;
  throw Error("unknown regime '" + std::string(name) +
              "' (expected gt, gt-r or detector)");
}

namespace {

const std::string& common_image(std::span<const GroundTruthInstance> xs) {
  for (const auto& x : xs) {
    if (x.image_id != xs.front().image_id) {
      throw ConsistencyError("instances from different images passed to "
                             "pair generation: '" +
                             xs.front().image_id + "' and '" + x.image_id +
                             "'");
    }
  }
  return xs.front().image_id;
}

CandidatePair make_pair(const std::string& image_id, int index,
                        const BoundingBox& human, const BoundingBox& object,
                        int object_id, double hs = 1.0, double os = 1.0) {
  return {image_id, index, human, object, object_id, hs, os,
          union_box(human, object)};
}

struct LabeledBox {
  BoundingBox box;
  int category = 0;
  friend bool operator<(const LabeledBox& a, const LabeledBox& b) {
    return std::tie(a.box, a.category) < std::tie(b.box, b.category);
  }
};

}  // namespace

std::vector<CandidatePair> make_gt_pairs(
    std::span<const GroundTruthInstance> instances,
    const HoiTaxonomy& taxonomy) {
  std::vector<CandidatePair> pairs;
  if (instances.empty()) return pairs;
  const std::string& image_id = common_image(instances);

  std::set<std::tuple<BoundingBox, BoundingBox, int>> seen;
  for (const auto& inst : instances) {
    const int object_id = taxonomy.at(inst.hoi_id).object_id;
    if (seen.emplace(inst.human_box, inst.object_box, object_id).second) {
      pairs.push_back(make_pair(image_id, static_cast<int>(pairs.size()),
                                inst.human_box, inst.object_box, object_id));
    }
  }
  return pairs;
}

std::vector<CandidatePair> make_recombined_pairs(
    std::span<const GroundTruthInstance> instances,
    const HoiTaxonomy& taxonomy) {
  std::vector<CandidatePair> pairs;
  if (instances.empty()) return pairs;
  const std::string& image_id = common_image(instances);
  const int person = taxonomy.person_object_id();

  std::vector<BoundingBox> humans;
  std::set<BoundingBox> human_seen;
  std::vector<LabeledBox> boxes;
  std::set<LabeledBox> box_seen;
  auto add_box = [&](const BoundingBox& b, int category) {
    if (category == person && human_seen.insert(b).second) humans.push_back(b);
    const LabeledBox lb{b, category};
    if (box_seen.insert(lb).second) boxes.push_back(lb);
  };
  for (const auto& inst : instances) {
    add_box(inst.human_box, person);
    add_box(inst.object_box, taxonomy.at(inst.hoi_id).object_id);
  }

  pairs.reserve(humans.size() * boxes.size());
  for (const auto& h : humans) {
    for (const auto& b : boxes) {
      if (b.box == h) continue;
      pairs.push_back(make_pair(image_id, static_cast<int>(pairs.size()), h,
                                b.box, b.category));
    }
  }
  return pairs;
}

std::vector<CandidatePair> make_detector_pairs(
    std::span<const DetectionBox> detections, const DetectorParams& params,
    int person_category_id) {
  std::vector<CandidatePair> pairs;
  if (detections.empty()) return pairs;
  const std::string& image_id = detections.front().image_id;

  std::vector<const DetectionBox*> kept;
  for (const auto& d : detections) {
    if (d.image_id != image_id) {
      throw ConsistencyError("detections from different images passed to "
                             "pair generation: '" +
                             image_id + "' and '" + d.image_id + "'");
    }
    if (d.score >= params.score_threshold) kept.push_back(&d);
  }

  for (const auto* h : kept) {
    if (h->category_id != person_category_id) continue;
    for (const auto* o : kept) {
      if (o->box == h->box) continue;
      pairs.push_back(make_pair(image_id, static_cast<int>(pairs.size()),
                                h->box, o->box, o->category_id, h->score,
                                o->score));
    }
  }

  if (pairs.size() > params.max_pairs_per_image) {
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return pairs[a].human_score * pairs[a].object_score >
                              pairs[b].human_score * pairs[b].object_score;
                     });
    order.resize(params.max_pairs_per_image);
    std::sort(order.begin(), order.end());
    std::vector<CandidatePair> capped;
    capped.reserve(order.size());
    for (std::size_t i : order) {
      capped.push_back(std::move(pairs[i]));
      capped.back().pair_index = static_cast<int>(capped.size() - 1);
    }
    pairs = std::move(capped);
  }
  return pairs;
}

std::vector<ImageDetections> group_by_image(std::vector<DetectionBox> boxes) {
  std::vector<ImageDetections> groups;
  std::unordered_map<std::string, std::size_t> index;
  for (auto& b : boxes) {
    auto [it, inserted] = index.emplace(b.image_id, groups.size());
    if (inserted) groups.push_back({b.image_id, {}});
    groups[it->second].boxes.push_back(std::move(b));
  }
  return groups;
}

std::vector<CandidatePair> generate_pairs(
    Regime regime, const Annotations& annotations,
    std::span<const DetectionBox> detections, const HoiTaxonomy& taxonomy,
    const DetectorParams& params) {
  std::vector<CandidatePair> all;
  auto append = [&all](std::vector<CandidatePair> pairs) {
    all.insert(all.end(), std::make_move_iterator(pairs.begin()),
               std::make_move_iterator(pairs.end()));
  };

  if (regime != Regime::detector) {
    for (const auto& image : annotations) {
      append(regime == Regime::gt
                 ? make_gt_pairs(image.instances, taxonomy)
                 : make_recombined_pairs(image.instances, taxonomy));
    }
    return all;
  }

  const int person = taxonomy.person_object_id();
  auto groups = group_by_image({detections.begin(), detections.end()});
  if (annotations.empty()) {
    for (const auto& g : groups) {
      append(make_detector_pairs(g.boxes, params, person));
    }
    return all;
  }

  std::unordered_map<std::string, const ImageDetections*> by_image;
  for (const auto& g : groups) by_image.emplace(g.image_id, &g);
  std::unordered_set<std::string> known;
  for (const auto& image : annotations) known.insert(image.image.id);
  for (const auto& g : groups) {
    if (!known.count(g.image_id)) {
      throw ValidationError("detection for unknown image_id '" + g.image_id +
                            "'");
    }
  }
  for (const auto& image : annotations) {
    auto it = by_image.find(image.image.id);
    if (it != by_image.end()) {
      append(make_detector_pairs(it->second->boxes, params, person));
    }
  }
  return all;
}

std::vector<DetectionBox> read_detection_boxes(std::istream& in,
                                               std::string_view source) {
  std::vector<DetectionBox> boxes;
  json_io::for_each_line(in, source, [&](const Json& r, std::size_t line) {
    const std::string ctx = std::string(source) + ":" + std::to_string(line);
    DetectionBox d;
    d.image_id = json_io::get_string(r, "image_id", ctx);
    d.box = json_io::get_box_raw(r, "box", ctx);
    d.category_id = json_io::get_int(r, "category_id", ctx);
    d.score = json_io::get_number(r, "score", ctx);
    if (!d.box.valid()) {
      throw ValidationError(ctx + ": degenerate box " + d.box.to_string() +
                            " in image_id '" + d.image_id + "'");
    }
    if (d.category_id < 1 || d.category_id > kMaxObjectId) {
      throw ValidationError(ctx + ": category_id " +
                            std::to_string(d.category_id) +
                            " outside [1, 80]");
    }
    if (!(d.score > 0.0 && d.score <= 1.0)) {
      throw ValidationError(ctx + ": score outside (0, 1]");
    }
    boxes.push_back(std::move(d));
  });
  return boxes;
}

std::vector<DetectionBox> load_detection_boxes(
    const std::filesystem::path& path) {
  auto in = json_io::open_input(path);
  return read_detection_boxes(in, path.string());
}

void write_detection_boxes(std::ostream& out,
                           std::span<const DetectionBox> boxes) {
  for (const auto& d : boxes) {
    Json r;
    r["image_id"] = d.image_id;
    r["box"] = json_io::box_to_json(d.box);
    r["category_id"] = d.category_id;
    r["score"] = d.score;
    out << json_io::dump_line(r) << '\n';
  }
}

void write_pairs(std::ostream& out, std::span<const CandidatePair> pairs) {
  for (const auto& p : pairs) {
    // Keys in the documented field order.
    out << "{\"image_id\":" << Json(p.image_id).dump()
        << ",\"pair_index\":" << p.pair_index
        << ",\"human_box\":" << json_io::box_to_json(p.human_box).dump()
        << ",\"object_box\":" << json_io::box_to_json(p.object_box).dump()
        << ",\"object_id\":" << p.object_id
        << ",\"human_score\":" << Json(p.human_score).dump()
        << ",\"object_score\":" << Json(p.object_score).dump()
        << ",\"union_box\":" << json_io::box_to_json(p.union_box).dump()
        << "}\n";
  }
}

std::vector<CandidatePair> read_pairs(std::istream& in,
                                      std::string_view source) {
  std::vector<CandidatePair> pairs;
  std::set<std::pair<std::string, int>> keys;
  json_io::for_each_line(in, source, [&](const Json& r, std::size_t line) {
    const std::string ctx = std::string(source) + ":" + std::to_string(line);
    CandidatePair p;
    p.image_id = json_io::get_string(r, "image_id", ctx);
    p.pair_index = json_io::get_int(r, "pair_index", ctx);
    p.human_box = json_io::get_box_raw(r, "human_box", ctx);
    p.object_box = json_io::get_box_raw(r, "object_box", ctx);
    p.object_id = json_io::get_int(r, "object_id", ctx);
    p.human_score = json_io::get_number(r, "human_score", ctx);
    p.object_score = json_io::get_number(r, "object_score", ctx);
    p.union_box = json_io::get_box_raw(r, "union_box", ctx);
    if (p.pair_index < 0) throw ValidationError(ctx + ": negative pair_index");
    if (!p.human_box.valid() || !p.object_box.valid() || !p.union_box.valid()) {
      throw ValidationError(ctx + ": degenerate box in image_id '" +
                            p.image_id + "'");
    }
    if (!p.union_box.contains(p.human_box) ||
        !p.union_box.contains(p.object_box)) {
      throw ValidationError(ctx + ": union_box does not contain both boxes");
    }
    if (p.object_id < 1 || p.object_id > kMaxObjectId) {
      throw ValidationError(ctx + ": object_id outside [1, 80]");
    }
    for (double s : {p.human_score, p.object_score}) {
      if (!(s >= 0.0 && s <= 1.0)) {
        throw ValidationError(ctx + ": score outside [0, 1]");
      }
    }
    if (!keys.emplace(p.image_id, p.pair_index).second) {
      throw ValidationError(ctx + ": duplicate pair " + p.embedding_key());
    }
    pairs.push_back(std::move(p));
  });
  return pairs;
}

std::vector<CandidatePair> load_pairs(const std::filesystem::path& path) {
  auto in = json_io::open_input(path);
  return read_pairs(in, path.string());
}

}  // namespace hoi
