#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hoi/box.hpp"

namespace hoi {

inline constexpr int kMaxHoiId = 600;
inline constexpr int kMaxObjectId = 80;
inline constexpr int kMaxVerbId = 117;

struct HoiCategory {
  int hoi_id = 0;
  int object_id = 0;
  int verb_id = 0;
  std::string object_name;
  std::string verb_name;
  bool rare = false;
};

// Registry of HOI classes: (object, verb) <-> hoi_id, rare flags and the
// per-object candidate lists used by scoring. Immutable once built.
class HoiTaxonomy {
 public:
  HoiTaxonomy() = default;
  // Validates id ranges and the injectivity of hoi_id -> (object, verb).
  explicit HoiTaxonomy(std::vector<HoiCategory> categories);

  std::size_t size() const noexcept { return categories_.size(); }
  // Sorted by ascending hoi_id.
  const std::vector<HoiCategory>& categories() const noexcept {
    return categories_;
  }
  bool contains(int hoi_id) const noexcept;
  const HoiCategory* find(int hoi_id) const noexcept;
  // Throws LookupError for unknown ids.
  const HoiCategory& at(int hoi_id) const;
  std::optional<int> hoi_for(int object_id, int verb_id) const noexcept;

  // Ascending verb ids valid with the object; empty when the object is unknown.
  const std::vector<int>& verbs_for_object(int object_id) const noexcept;
  // Ascending hoi ids whose object is `object_id`.
  const std::vector<int>& hois_for_object(int object_id) const noexcept;
  std::vector<int> object_ids() const;

  std::vector<int> all_ids() const;
  std::vector<int> rare_ids() const;
  std::vector<int> non_rare_ids() const;

  std::optional<int> object_id_by_name(std::string_view name) const;
  // Object id named "person"; throws LookupError when the taxonomy has none.
  int person_object_id() const;

  friend bool operator==(const HoiTaxonomy& a, const HoiTaxonomy& b);

 private:
  std::vector<HoiCategory> categories_;
  std::unordered_map<int, std::size_t> by_hoi_;
  std::unordered_map<long long, int> by_pair_;
  std::unordered_map<int, std::vector<int>> verbs_by_object_;
  std::unordered_map<int, std::vector<int>> hois_by_object_;
};

bool operator==(const HoiCategory& a, const HoiCategory& b);

HoiTaxonomy load_taxonomy(const std::filesystem::path& path);
HoiTaxonomy parse_taxonomy(std::istream& in, std::string_view source);

struct ImageRecord {
  std::string id;
  std::string file_name;
  int width = 0;
  int height = 0;
  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct GroundTruthInstance {
  std::string image_id;
  BoundingBox human_box;
  BoundingBox object_box;
  int hoi_id = 0;
  friend bool operator==(const GroundTruthInstance&,
                         const GroundTruthInstance&) = default;
};

struct AnnotatedImage {
  ImageRecord image;
  std::vector<GroundTruthInstance> instances;
  friend bool operator==(const AnnotatedImage&,
                         const AnnotatedImage&) = default;
};

// Images in file order, each with its instances in file order.
using Annotations = std::vector<AnnotatedImage>;

Annotations load_annotations(const std::filesystem::path& path,
                             const HoiTaxonomy& taxonomy);
Annotations parse_annotations(std::istream& in, std::string_view source,
                              const HoiTaxonomy& taxonomy);

inline constexpr std::string_view kSplitNames[] = {
    "default",       "unseen_combination", "rare_first",
    "non_rare_first", "unseen_object",     "unseen_verb"};

bool is_known_split_name(std::string_view name) noexcept;

// Seen/unseen partition of the taxonomy. For "default" the unseen set is the
// rare classes and the seen set the non-rare ones. Both lists ascend.
struct SplitDefinition {
  std::string name;
  std::vector<int> unseen_hoi_ids;
  std::vector<int> seen_hoi_ids;
  std::string source;
};

SplitDefinition default_split(const HoiTaxonomy& taxonomy);

// Loads a split file and checks that its "name" matches `name`.
SplitDefinition load_split(std::string_view name,
                           const std::filesystem::path& path,
                           const HoiTaxonomy& taxonomy);
SplitDefinition parse_split(std::istream& in, std::string_view source,
                            const HoiTaxonomy& taxonomy);

// Every *.json in `dir`, ordered by file name.
std::vector<SplitDefinition> load_split_dir(const std::filesystem::path& dir,
                                            const HoiTaxonomy& taxonomy);

}  // namespace hoi
