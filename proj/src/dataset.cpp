#include "hoi/dataset.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "hoi/error.hpp"
#include "hoi/jsonl.hpp"

namespace hoi {

using json_io::Json;

namespace {

long long pair_key(int object_id, int verb_id) {
  return static_cast<long long>(object_id) * 1000 + verb_id;
}

const std::vector<int>& empty_ids() {
  static const std::vector<int> none;
  return none;
}

}  // namespace

bool operator==(const HoiCategory& a, const HoiCategory& b) {
  return a.hoi_id == b.hoi_id && a.object_id == b.object_id &&
         a.verb_id == b.verb_id && a.object_name == b.object_name &&
         a.verb_name == b.verb_name && a.rare == b.rare;
}

bool operator==(const HoiTaxonomy& a, const HoiTaxonomy& b) {
  return a.categories_ == b.categories_;
}

HoiTaxonomy::HoiTaxonomy(std::vector<HoiCategory> categories)
    : categories_(std::move(categories)) {
  std::sort(categories_.begin(), categories_.end(),
            [](const auto& a, const auto& b) { return a.hoi_id < b.hoi_id; });
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    const auto& c = categories_[i];
    const std::string label = "hoi_id " + std::to_string(c.hoi_id);
    if (c.hoi_id < 1 || c.hoi_id > kMaxHoiId) {
      throw ValidationError(label + ": hoi_id outside [1, 600]");
    }
    if (c.object_id < 1 || c.object_id > kMaxObjectId) {
      throw ValidationError(label + ": object_id " +
                            std::to_string(c.object_id) +
                            " outside [1, 80]");
    }
    if (c.verb_id < 1 || c.verb_id > kMaxVerbId) {
      throw ValidationError(label + ": verb_id " + std::to_string(c.verb_id) +
                            " outside [1, 117]");
    }
    if (!by_hoi_.emplace(c.hoi_id, i).second) {
      throw ValidationError(label + ": duplicate hoi_id");
    }
    if (!by_pair_.emplace(pair_key(c.object_id, c.verb_id), c.hoi_id).second) {
      throw ValidationError(label + ": duplicate (object_id " +
                            std::to_string(c.object_id) + ", verb_id " +
                            std::to_string(c.verb_id) + ")");
    }
    verbs_by_object_[c.object_id].push_back(c.verb_id);
    hois_by_object_[c.object_id].push_back(c.hoi_id);
  }
  for (auto& [object, verbs] : verbs_by_object_) {
    std::sort(verbs.begin(), verbs.end());
  }
}

bool HoiTaxonomy::contains(int hoi_id) const noexcept {
  return by_hoi_.count(hoi_id) != 0;
}

const HoiCategory* HoiTaxonomy::find(int hoi_id) const noexcept {
  auto it = by_hoi_.find(hoi_id);
  return it == by_hoi_.end() ? nullptr : &categories_[it->second];
}

const HoiCategory& HoiTaxonomy::at(int hoi_id) const {
  if (const auto* c = find(hoi_id)) return *c;
  throw LookupError("unknown hoi_id " + std::to_string(hoi_id));
}

std::optional<int> HoiTaxonomy::hoi_for(int object_id,
                                        int verb_id) const noexcept {
  auto it = by_pair_.find(pair_key(object_id, verb_id));
  if (it == by_pair_.end()) return std::nullopt;
  return it->second;
}

const std::vector<int>& HoiTaxonomy::verbs_for_object(
    int object_id) const noexcept {
  auto it = verbs_by_object_.find(object_id);
  return it == verbs_by_object_.end() ? empty_ids() : it->second;
}

const std::vector<int>& HoiTaxonomy::hois_for_object(
    int object_id) const noexcept {
  auto it = hois_by_object_.find(object_id);
  return it == hois_by_object_.end() ? empty_ids() : it->second;
}

std::vector<int> HoiTaxonomy::object_ids() const {
  std::vector<int> ids;
  for (const auto& [object, hois] : hois_by_object_) ids.push_back(object);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<int> HoiTaxonomy::all_ids() const {
  std::vector<int> ids;
  ids.reserve(categories_.size());
  for (const auto& c : categories_) ids.push_back(c.hoi_id);
  return ids;
}

std::vector<int> HoiTaxonomy::rare_ids() const {
  std::vector<int> ids;
  for (const auto& c : categories_) {
    if (c.rare) ids.push_back(c.hoi_id);
  }
  return ids;
}

std::vector<int> HoiTaxonomy::non_rare_ids() const {
  std::vector<int> ids;
  for (const auto& c : categories_) {
    if (!c.rare) ids.push_back(c.hoi_id);
  }
  return ids;
}

std::optional<int> HoiTaxonomy::object_id_by_name(std::string_view name) const {
  for (const auto& c : categories_) {
    if (c.object_name == name) return c.object_id;
  }
  return std::nullopt;
}

int HoiTaxonomy::person_object_id() const {
  if (auto id = object_id_by_name("person")) return *id;
  throw LookupError("taxonomy has no object named 'person'");
}

HoiTaxonomy parse_taxonomy(std::istream& in, std::string_view source) {
  const Json doc = json_io::parse_document(in, source);
  if (!doc.is_array()) {
    throw FormatError(std::string(source) +
                      ": taxonomy must be a top-level array");
  }
  std::vector<HoiCategory> categories;
  categories.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string ctx =
        std::string(source) + " record " + std::to_string(i);
    const Json& r = doc[i];
    categories.push_back({json_io::get_int(r, "hoi_id", ctx),
                          json_io::get_int(r, "object_id", ctx),
                          json_io::get_int(r, "verb_id", ctx),
                          json_io::get_string(r, "object_name", ctx),
                          json_io::get_string(r, "verb_name", ctx),
                          json_io::get_bool(r, "rare", ctx)});
  }
  try {
    return HoiTaxonomy(std::move(categories));
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(source) + ": " + e.what());
  }
}

HoiTaxonomy load_taxonomy(const std::filesystem::path& path) {
  auto in = json_io::open_input(path);
  return parse_taxonomy(in, path.string());
}

Annotations parse_annotations(std::istream& in, std::string_view source,
                              const HoiTaxonomy& taxonomy) {
  const Json doc = json_io::parse_document(in, source);
  const std::string src(source);
  if (!doc.is_object() || !doc.contains("images") ||
      !doc["images"].is_array() || !doc.contains("annotations") ||
      !doc["annotations"].is_array()) {
    throw FormatError(src + ": expected {\"images\": [...], "
                            "\"annotations\": [...]}");
  }

  Annotations result;
  std::unordered_map<std::string, std::size_t> index;
  const Json& images = doc["images"];
  result.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string ctx = src + " image " + std::to_string(i);
    ImageRecord rec{json_io::get_string(images[i], "id", ctx),
                    json_io::get_string(images[i], "file_name", ctx),
                    json_io::get_int(images[i], "width", ctx),
                    json_io::get_int(images[i], "height", ctx)};
    if (!index.emplace(rec.id, result.size()).second) {
      throw ValidationError(src + ": duplicate image id '" + rec.id + "'");
    }
    result.push_back({std::move(rec), {}});
  }

  const Json& anns = doc["annotations"];
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const std::string ctx = src + " annotation " + std::to_string(i);
    GroundTruthInstance inst;
    inst.image_id = json_io::get_string(anns[i], "image_id", ctx);
    inst.human_box = json_io::get_box_raw(anns[i], "human_box", ctx);
    inst.object_box = json_io::get_box_raw(anns[i], "object_box", ctx);
    inst.hoi_id = json_io::get_int(anns[i], "hoi_id", ctx);

    auto it = index.find(inst.image_id);
    if (it == index.end()) {
      throw ValidationError(ctx + ": unknown image_id '" + inst.image_id +
                            "'");
    }
    if (!inst.human_box.valid() || !inst.object_box.valid()) {
      throw ValidationError(ctx + ": degenerate box in image_id '" +
                            inst.image_id + "' (human " +
                            inst.human_box.to_string() + ", object " +
                            inst.object_box.to_string() + ")");
    }
    if (!taxonomy.contains(inst.hoi_id)) {
      throw ValidationError(ctx + ": unknown hoi_id " +
                            std::to_string(inst.hoi_id) + " in image_id '" +
                            inst.image_id + "'");
    }
    result[it->second].instances.push_back(std::move(inst));
  }
  return result;
}

Annotations load_annotations(const std::filesystem::path& path,
                             const HoiTaxonomy& taxonomy) {
  auto in = json_io::open_input(path);
  return parse_annotations(in, path.string(), taxonomy);
}

bool is_known_split_name(std::string_view name) noexcept {
  return std::find(std::begin(kSplitNames), std::end(kSplitNames), name) !=
         std::end(kSplitNames);
}

SplitDefinition default_split(const HoiTaxonomy& taxonomy) {
  return {"default", taxonomy.rare_ids(), taxonomy.non_rare_ids(),
          "taxonomy rare flags"};
}

namespace {

std::vector<int> int_list(const Json& v, std::string_view key,
                          const std::string& ctx) {
  if (!v.is_array()) {
    throw FormatError(ctx + ": '" + std::string(key) + "' must be an array");
  }
  std::vector<int> ids;
  ids.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number_integer()) {
      throw FormatError(ctx + ": non-integer entry in '" + std::string(key) +
                        "'");
    }
    ids.push_back(x.get<int>());
  }
  return ids;
}

std::vector<int> sorted_unique(std::vector<int> ids, std::string_view key,
                               const std::string& ctx) {
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw ValidationError(ctx + ": duplicate id in '" + std::string(key) +
                          "'");
  }
  return ids;
}

// Expands {"pool": "rare"|"non_rare"|"all", "count": n, "stride": k}: every
// k-th id of the pool in ascending order, first n of them.
std::vector<int> expand_rule(const Json& rule, const HoiTaxonomy& taxonomy,
                             const std::string& ctx) {
  const std::string rctx = ctx + " unseen_rule";
  const std::string pool_name = json_io::get_string(rule, "pool", rctx);
  const int count = json_io::get_int(rule, "count", rctx);
  const int stride =
      rule.contains("stride") ? json_io::get_int(rule, "stride", rctx) : 1;
  if (count < 0 || stride < 1) {
    throw ValidationError(rctx + ": count must be >= 0 and stride >= 1");
  }
  std::vector<int> pool;
  if (pool_name == "rare") {
    pool = taxonomy.rare_ids();
  } else if (pool_name == "non_rare") {
    pool = taxonomy.non_rare_ids();
  } else if (pool_name == "all") {
    pool = taxonomy.all_ids();
  } else {
    throw FormatError(rctx + ": unknown pool '" + pool_name + "'");
  }
  std::vector<int> ids;
  for (std::size_t i = static_cast<std::size_t>(stride) - 1;
       i < pool.size() && ids.size() < static_cast<std::size_t>(count);
       i += static_cast<std::size_t>(stride)) {
    ids.push_back(pool[i]);
  }
  if (ids.size() != static_cast<std::size_t>(count)) {
    throw ValidationError(rctx + ": pool '" + pool_name + "' has only " +
                          std::to_string(ids.size()) + " ids at stride " +
                          std::to_string(stride) + ", " +
                          std::to_string(count) + " requested");
  }
  return ids;
}

}  // namespace

SplitDefinition parse_split(std::istream& in, std::string_view source,
                            const HoiTaxonomy& taxonomy) {
  const std::string ctx(source);
  const Json doc = json_io::parse_document(in, source);
  if (!doc.is_object()) throw FormatError(ctx + ": split must be an object");

  SplitDefinition split;
  split.name = json_io::get_string(doc, "name", ctx);
  if (!is_known_split_name(split.name)) {
    throw ValidationError(ctx + ": unknown split name '" + split.name + "'");
  }
  split.source = doc.contains("source")
                     ? json_io::get_string(doc, "source", ctx)
                     : std::string();

  if (split.name == "default") {
    SplitDefinition d = default_split(taxonomy);
    d.source = split.source.empty() ? d.source : split.source;
    return d;
  }

  const int forms = static_cast<int>(doc.contains("unseen_hoi_ids")) +
                    static_cast<int>(doc.contains("unseen_object_ids")) +
                    static_cast<int>(doc.contains("unseen_verb_ids")) +
                    static_cast<int>(doc.contains("unseen_rule"));
  if (forms != 1) {
    throw FormatError(ctx + ": exactly one of unseen_hoi_ids, "
                            "unseen_object_ids, unseen_verb_ids, unseen_rule "
                            "is required");
  }

  std::vector<int> unseen;
  if (doc.contains("unseen_hoi_ids")) {
    unseen = sorted_unique(int_list(doc["unseen_hoi_ids"], "unseen_hoi_ids", ctx),
                           "unseen_hoi_ids", ctx);
    for (int id : unseen) {
      if (id < 1 || id > kMaxHoiId || !taxonomy.contains(id)) {
        throw ValidationError(ctx + ": unseen hoi_id " + std::to_string(id) +
                              " is not a taxonomy class");
      }
    }
  } else if (doc.contains("unseen_object_ids") ||
             doc.contains("unseen_verb_ids")) {
    const bool by_object = doc.contains("unseen_object_ids");
    const std::string key = by_object ? "unseen_object_ids" : "unseen_verb_ids";
    const int max_id = by_object ? kMaxObjectId : kMaxVerbId;
    const auto held_out = sorted_unique(int_list(doc[key], key, ctx), key, ctx);
    for (int id : held_out) {
      if (id < 1 || id > max_id) {
        throw ValidationError(ctx + ": id " + std::to_string(id) + " in '" +
                              key + "' out of range");
      }
    }
    const std::set<int> held(held_out.begin(), held_out.end());
    for (const auto& c : taxonomy.categories()) {
      if (held.count(by_object ? c.object_id : c.verb_id)) {
        unseen.push_back(c.hoi_id);
      }
    }
  } else {
    unseen = expand_rule(doc["unseen_rule"], taxonomy, ctx);
  }

  if (doc.contains("declared_count")) {
    const int declared = json_io::get_int(doc, "declared_count", ctx);
    if (declared != static_cast<int>(unseen.size())) {
      throw ValidationError(ctx + ": declared_count " +
                            std::to_string(declared) + " but " +
                            std::to_string(unseen.size()) +
                            " unseen classes");
    }
  }

  const std::unordered_set<int> unseen_set(unseen.begin(), unseen.end());
  for (int id : taxonomy.all_ids()) {
    if (!unseen_set.count(id)) split.seen_hoi_ids.push_back(id);
  }
  if (doc.contains("seen_hoi_ids")) {
    auto seen = sorted_unique(int_list(doc["seen_hoi_ids"], "seen_hoi_ids", ctx),
                              "seen_hoi_ids", ctx);
    if (seen != split.seen_hoi_ids) {
      throw ValidationError(ctx + ": seen_hoi_ids and unseen ids do not "
                                  "partition the taxonomy");
    }
  }
  split.unseen_hoi_ids = std::move(unseen);
  return split;
}

SplitDefinition load_split(std::string_view name,
                           const std::filesystem::path& path,
                           const HoiTaxonomy& taxonomy) {
  auto in = json_io::open_input(path);
  SplitDefinition split = parse_split(in, path.string(), taxonomy);
  if (split.name != name) {
    throw ValidationError(path.string() + ": expected split '" +
                          std::string(name) + "', file declares '" +
                          split.name + "'");
  }
  return split;
}

std::vector<SplitDefinition> load_split_dir(const std::filesystem::path& dir,
                                            const HoiTaxonomy& taxonomy) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error("splits directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<SplitDefinition> splits;
  std::set<std::string> seen_names;
  for (const auto& f : files) {
    auto in = json_io::open_input(f);
    auto split = parse_split(in, f.string(), taxonomy);
    if (!seen_names.insert(split.name).second) {
      throw ValidationError(f.string() + ": split '" + split.name +
                            "' defined twice in " + dir.string());
    }
    splits.push_back(std::move(split));
  }
  return splits;
}

}  // namespace hoi
