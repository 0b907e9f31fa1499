#pragma once

// Synthetic taxonomies, datasets and embedding archives for tests.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>
#include <string>
#include <vector>

#include "hoi/archive.hpp"
#include "hoi/dataset.hpp"
#include "hoi/jsonl.hpp"
#include "hoi/pairing.hpp"
#include "hoi/scoring.hpp"

namespace hoi::testing {

using json_io::Json;

// person(1), horse(2), cup(3), bicycle(4).
//   hoi 1 ride horse, 2 straddle horse, 3 walk horse, 4 feed horse,
//   5 hold cup, 6 drink_with cup, 7 ride bicycle, 8 hug person, 9 no_interaction cup
inline HoiTaxonomy toy_taxonomy() {
  return HoiTaxonomy({
      {1, 2, 10, "horse", "ride", false},
      {2, 2, 11, "horse", "straddle", true},
      {3, 2, 12, "horse", "walk", false},
      {4, 2, 13, "horse", "feed", true},
      {5, 3, 20, "cup", "hold", false},
      {6, 3, 21, "cup", "drink_with", true},
      {7, 4, 10, "bicycle", "ride", false},
      {8, 1, 30, "person", "hug", false},
      {9, 3, 58, "cup", "no_interaction", false},
  });
}

// HICO-shaped registry: 80 objects (object 1 is "person"), 600 classes with
// 7 or 8 verbs per object, exactly 138 rare.
inline HoiTaxonomy synthetic_hico_taxonomy() {
  std::vector<HoiCategory> cats;
  int hoi = 1;
  for (int o = 0; o < 80; ++o) {
    const int n = o < 40 ? 8 : 7;
    for (int j = 0; j < n; ++j) {
      const int verb = (o * 7 + j * 11) % 117 + 1;
      const bool rare = (hoi * 37) % 600 < 138;
      cats.push_back({hoi, o + 1, verb,
                      o == 0 ? "person" : "object" + std::to_string(o + 1),
                      "verb" + std::to_string(verb), rare});
      ++hoi;
    }
  }
  return HoiTaxonomy(std::move(cats));
}

inline Json taxonomy_json(const HoiTaxonomy& t) {
  Json arr = Json::array();
  for (const auto& c : t.categories()) {
    arr.push_back({{"hoi_id", c.hoi_id},
                   {"object_id", c.object_id},
                   {"verb_id", c.verb_id},
                   {"object_name", c.object_name},
                   {"verb_name", c.verb_name},
                   {"rare", c.rare}});
  }
  return arr;
}

inline Json annotations_json(const Annotations& anns) {
  Json doc = {{"images", Json::array()}, {"annotations", Json::array()}};
  for (const auto& img : anns) {
    doc["images"].push_back({{"id", img.image.id},
                             {"file_name", img.image.file_name},
                             {"width", img.image.width},
                             {"height", img.image.height}});
    for (const auto& inst : img.instances) {
      doc["annotations"].push_back(
          {{"image_id", inst.image_id},
           {"human_box", json_io::box_to_json(inst.human_box)},
           {"object_box", json_io::box_to_json(inst.object_box)},
           {"hoi_id", inst.hoi_id}});
    }
  }
  return doc;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("hoi_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

inline BoundingBox random_box(std::mt19937_64& rng, double extent = 100.0) {
  std::uniform_real_distribution<double> pos(0.0, extent);
  std::uniform_real_distribution<double> len(1.0, extent / 2);
  const double x = pos(rng), y = pos(rng);
  return {x, y, x + len(rng), y + len(rng)};
}

// Box on a coarse integer grid so that random boxes coincide and overlap
// often.
inline BoundingBox grid_box(std::mt19937_64& rng, int cells = 6) {
  std::uniform_int_distribution<int> c(0, cells - 1);
  std::uniform_int_distribution<int> w(1, 3);
  const double x = c(rng) * 10.0, y = c(rng) * 10.0;
  return {x, y, x + w(rng) * 10.0, y + w(rng) * 10.0};
}

inline std::vector<float> random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::vector<float> v(dim);
  for (auto& x : v) x = g(rng);
  return l2_normalized(v);
}

// Random dataset over `taxonomy`: each image gets distinct (human, object)
// box pairs, each labeled with one class; boxes are spread so that distinct
// pairs never overlap at IoU >= 0.5.
inline Annotations random_annotations(std::mt19937_64& rng,
                                      const HoiTaxonomy& taxonomy,
                                      int n_images, int max_pairs_per_image) {
  const auto& cats = taxonomy.categories();
  std::uniform_int_distribution<std::size_t> pick(0, cats.size() - 1);
  std::uniform_int_distribution<int> npairs(1, max_pairs_per_image);
  Annotations anns;
  for (int i = 0; i < n_images; ++i) {
    AnnotatedImage img;
    img.image = {"img" + std::to_string(i), "img" + std::to_string(i) + ".jpg",
                 640, 480};
    const int n = npairs(rng);
    for (int k = 0; k < n; ++k) {
      const double ox = 150.0 * k;
      const BoundingBox human{ox + 1, 1, ox + 60, 120};
      const BoundingBox object{ox + 70, 10, ox + 140, 90};
      img.instances.push_back(
          {img.image.id, human, object, cats[pick(rng)].hoi_id});
    }
    anns.push_back(std::move(img));
  }
  return anns;
}

inline EmbeddingArchive random_text_archive(std::mt19937_64& rng,
                                            const HoiTaxonomy& taxonomy,
                                            std::uint32_t dim) {
  EmbeddingArchive a(dim);
  for (int id : taxonomy.all_ids()) a.add(text_key(id), random_unit(rng, dim));
  return a;
}

// Small single-class evaluation problem with dense overlaps and tied scores.
struct EvalInstance {
  std::vector<GroundTruthInstance> ground_truth;
  std::vector<HoiDetection> detections;
};

inline EvalInstance random_eval_instance(std::mt19937_64& rng, int hoi_id,
                                         int max_images = 5,
                                         int max_detections = 10,
                                         int max_ground_truth = 5) {
  std::uniform_int_distribution<int> n_img(1, max_images);
  const int images = n_img(rng);
  std::uniform_int_distribution<int> img(0, images - 1);
  std::uniform_int_distribution<int> n_gt(0, max_ground_truth);
  std::uniform_int_distribution<int> n_det(0, max_detections);
  std::uniform_int_distribution<int> coin(0, 2);
  std::uniform_int_distribution<int> score(1, 8);
  EvalInstance inst;
  const int gts = n_gt(rng);
  for (int g = 0; g < gts; ++g) {
    inst.ground_truth.push_back({"img" + std::to_string(img(rng)),
                                 grid_box(rng), grid_box(rng), hoi_id});
  }
  const int dets = n_det(rng);
  for (int d = 0; d < dets; ++d) {
    HoiDetection det{"img" + std::to_string(img(rng)), grid_box(rng),
                     grid_box(rng), hoi_id, score(rng) / 8.0};
    if (!inst.ground_truth.empty() && coin(rng) == 0) {
      std::uniform_int_distribution<std::size_t> pick(
          0, inst.ground_truth.size() - 1);
      const auto& g = inst.ground_truth[pick(rng)];
      det.image_id = g.image_id;
      det.human_box = g.human_box;
      det.object_box = g.object_box;
    }
    inst.detections.push_back(det);
  }
  return inst;
}

}  // namespace hoi::testing
