#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hoi/archive.hpp"
#include "hoi/box.hpp"
#include "hoi/dataset.hpp"
#include "hoi/pairing.hpp"

namespace hoi {

inline constexpr double kDefaultLogitScale = 100.0;

// Which text prompts compete in the softmax for a pair.
enum class CandidateMode {
  // Only the HOI classes of the pair's object category.
  object_classes,
  // Every class in the taxonomy; only the object's classes are emitted, so
  // the emitted probabilities sum to at most 1. Used for ablations.
  all_classes,
};

std::string_view candidate_mode_name(CandidateMode m) noexcept;
CandidateMode parse_candidate_mode(std::string_view name);

struct VerbDistribution {
  struct Entry {
    int hoi_id = 0;
    double probability = 0.0;
  };
  std::string image_id;
  int pair_index = 0;
  std::vector<Entry> entries;  // ascending hoi_id
};

struct HoiDetection {
  std::string image_id;
  BoundingBox human_box;
  BoundingBox object_box;
  int hoi_id = 0;
  double score = 0.0;
  friend bool operator==(const HoiDetection&, const HoiDetection&) = default;
};

// Numerically stable softmax (max subtraction), computed in double.
std::vector<double> softmax(std::span<const double> logits);

// Text key of a class in the text archive: "hoi{id}".
std::string text_key(int hoi_id);

// Softmax over logit_scale * <image_emb, text_emb(hoi)> for the candidate
// classes of the pair's object. Throws LookupError for a missing text key and
// ValidationError when the object has no classes.
VerbDistribution score_pair(const CandidatePair& pair,
                            std::span<const float> image_emb,
                            const EmbeddingArchive& text_archive,
                            const HoiTaxonomy& taxonomy,
                            double logit_scale = kDefaultLogitScale);

// Caches the candidate text matrix of every object so repeated scoring only
// pays for the similarity kernel and the softmax.
class PairScorer {
 public:
  PairScorer(const EmbeddingArchive& text_archive, const HoiTaxonomy& taxonomy,
             double logit_scale = kDefaultLogitScale,
             CandidateMode mode = CandidateMode::object_classes);

  VerbDistribution score(const CandidatePair& pair,
                         std::span<const float> image_emb) const;

  std::uint32_t dim() const noexcept { return dim_; }

 private:
  struct TextBlock {
    std::vector<int> hoi_ids;
    std::vector<float> rows;  // hoi_ids.size() x dim
  };
  const TextBlock& block_for(int object_id) const;

  std::uint32_t dim_;
  double logit_scale_;
  CandidateMode mode_;
  std::unordered_map<int, TextBlock> by_object_;
  TextBlock all_;
};

// One detection per (pair, entry), in pair order then ascending hoi_id, with
// score = probability * human_score * object_score. Throws ConsistencyError
// when pairs and distributions do not correspond one-to-one.
std::vector<HoiDetection> assemble_detections(
    std::span<const CandidatePair> pairs,
    std::span<const VerbDistribution> distributions);

enum class MissingPolicy { fail, skip };
MissingPolicy parse_missing_policy(std::string_view name);

struct ScoringOptions {
  double logit_scale = kDefaultLogitScale;
  CandidateMode mode = CandidateMode::object_classes;
  MissingPolicy on_missing = MissingPolicy::fail;
};

struct ScoringSummary {
  std::size_t pairs_scored = 0;
  std::size_t detections_emitted = 0;
  std::size_t missing_embeddings = 0;
};

// Scores every pair against its "{image_id}:{pair_index}" embedding and
// streams detections JSON Lines to `out` in pair order.
ScoringSummary run_scoring(std::span<const CandidatePair> pairs,
                           const EmbeddingArchive& pair_archive,
                           const EmbeddingArchive& text_archive,
                           const HoiTaxonomy& taxonomy,
                           const ScoringOptions& options, std::ostream& out);

// Detections JSON Lines:
// {"image_id", "human_box", "object_box", "hoi_id", "score"}.
void write_detection(std::ostream& out, const HoiDetection& d);
void write_detections(std::ostream& out,
                      std::span<const HoiDetection> detections);
std::vector<HoiDetection> read_detections(std::istream& in,
                                          std::string_view source);
std::vector<HoiDetection> load_detections(const std::filesystem::path& path);

}  // namespace hoi
