#include "hoi/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_map>

#include "hoi/error.hpp"
#include "hoi/jsonl.hpp"
#include "hoi/kernels.hpp"

namespace hoi {

using json_io::Json;

std::string_view candidate_mode_name(CandidateMode m) noexcept {
  return m == CandidateMode::object_classes ? "object" : "all";
}

CandidateMode parse_candidate_mode(std::string_view name) {
  if (name == "object") return CandidateMode::object_classes;
  if (name == "all") return CandidateMode::all_classes;
  throw Error("unknown candidate mode '" + std::string(name) +
              "' (expected object or all)");
}

MissingPolicy parse_missing_policy(std::string_view name) {
  if (name == "fail") return MissingPolicy::fail;
  if (name == "skip") return MissingPolicy::skip;
  throw Error("unknown missing-embedding policy '" + std::string(name) +
              "' (expected fail or skip)");
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - top);
    sum += p[i];
  }
  for (auto& x : p) x /= sum;
  return p;
}

std::string text_key(int hoi_id) { return "hoi" + std::to_string(hoi_id); }

namespace {

std::vector<double> scaled_similarities(std::span<const float> image_emb,
                                        std::span<const float> rows,
                                        std::size_t n, double logit_scale) {
  std::vector<float> sims(n);
  kernels::dot_rows(image_emb, rows, sims);
  std::vector<double> logits(n);
  for (std::size_t i = 0; i < n; ++i) {
    logits[i] = logit_scale * static_cast<double>(sims[i]);
  }
  return logits;
}

void check_scale(double logit_scale) {
  if (!(logit_scale > 0.0) || !std::isfinite(logit_scale)) {
    throw ValidationError("logit_scale must be a positive finite number");
  }
}

void check_dim(std::span<const float> image_emb, std::uint32_t dim,
               const CandidatePair& pair) {
  if (image_emb.size() != dim) {
    throw ConsistencyError("embedding for " + pair.embedding_key() +
                           " has dim " + std::to_string(image_emb.size()) +
                           ", text archive dim " + std::to_string(dim));
  }
}

}  // namespace

VerbDistribution score_pair(const CandidatePair& pair,
                            std::span<const float> image_emb,
                            const EmbeddingArchive& text_archive,
                            const HoiTaxonomy& taxonomy, double logit_scale) {
  check_scale(logit_scale);
  check_dim(image_emb, text_archive.dim(), pair);
  const auto& candidates = taxonomy.hois_for_object(pair.object_id);
  if (candidates.empty()) {
    throw ValidationError("no HOI classes for object_id " +
                          std::to_string(pair.object_id));
  }
  const std::size_t dim = text_archive.dim();
  std::vector<float> rows(candidates.size() * dim);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto v = text_archive.at(text_key(candidates[i]));
    std::copy(v.begin(), v.end(), rows.begin() + i * dim);
  }
  const auto probs = softmax(
      scaled_similarities(image_emb, rows, candidates.size(), logit_scale));

  VerbDistribution dist{pair.image_id, pair.pair_index, {}};
  dist.entries.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    dist.entries.push_back({candidates[i], probs[i]});
  }
  return dist;
}

PairScorer::PairScorer(const EmbeddingArchive& text_archive,
                       const HoiTaxonomy& taxonomy, double logit_scale,
                       CandidateMode mode)
    : dim_(text_archive.dim()), logit_scale_(logit_scale), mode_(mode) {
  check_scale(logit_scale);
  auto fill = [&](TextBlock& block, const std::vector<int>& ids) {
    block.hoi_ids = ids;
    block.rows.resize(ids.size() * dim_);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      auto v = text_archive.at(text_key(ids[i]));
      std::copy(v.begin(), v.end(), block.rows.begin() + i * dim_);
    }
  };
  for (int object_id : taxonomy.object_ids()) {
    fill(by_object_[object_id], taxonomy.hois_for_object(object_id));
  }
  if (mode_ == CandidateMode::all_classes) fill(all_, taxonomy.all_ids());
}

const PairScorer::TextBlock& PairScorer::block_for(int object_id) const {
  auto it = by_object_.find(object_id);
  if (it == by_object_.end()) {
    throw ValidationError("no HOI classes for object_id " +
                          std::to_string(object_id));
  }
  return it->second;
}

VerbDistribution PairScorer::score(const CandidatePair& pair,
                                   std::span<const float> image_emb) const {
  check_dim(image_emb, dim_, pair);
  const TextBlock& own = block_for(pair.object_id);
  VerbDistribution dist{pair.image_id, pair.pair_index, {}};
  dist.entries.reserve(own.hoi_ids.size());

  if (mode_ == CandidateMode::object_classes) {
    const auto probs = softmax(scaled_similarities(
        image_emb, own.rows, own.hoi_ids.size(), logit_scale_));
    for (std::size_t i = 0; i < own.hoi_ids.size(); ++i) {
      dist.entries.push_back({own.hoi_ids[i], probs[i]});
    }
    return dist;
  }

  const auto probs = softmax(scaled_similarities(
      image_emb, all_.rows, all_.hoi_ids.size(), logit_scale_));
  // Both id lists ascend; walk them together.
  std::size_t j = 0;
  for (int id : own.hoi_ids) {
    while (all_.hoi_ids[j] != id) ++j;
    dist.entries.push_back({id, probs[j]});
  }
  return dist;
}

std::vector<HoiDetection> assemble_detections(
    std::span<const CandidatePair> pairs,
    std::span<const VerbDistribution> distributions) {
  std::unordered_map<std::string, const VerbDistribution*> by_key;
  for (const auto& d : distributions) {
    const std::string key = d.image_id + ":" + std::to_string(d.pair_index);
    if (!by_key.emplace(key, &d).second) {
      throw ConsistencyError("two distributions for pair " + key);
    }
  }
  if (by_key.size() != pairs.size()) {
    throw ConsistencyError(std::to_string(distributions.size()) +
                           " distributions for " +
                           std::to_string(pairs.size()) + " pairs");
  }
  std::vector<HoiDetection> out;
  for (const auto& p : pairs) {
    auto it = by_key.find(p.embedding_key());
    if (it == by_key.end()) {
      throw ConsistencyError("no distribution for pair " + p.embedding_key());
    }
    for (const auto& e : it->second->entries) {
      out.push_back({p.image_id, p.human_box, p.object_box, e.hoi_id,
                     e.probability * p.human_score * p.object_score});
    }
  }
  return out;
}

ScoringSummary run_scoring(std::span<const CandidatePair> pairs,
                           const EmbeddingArchive& pair_archive,
                           const EmbeddingArchive& text_archive,
                           const HoiTaxonomy& taxonomy,
                           const ScoringOptions& options, std::ostream& out) {
  if (pair_archive.dim() != text_archive.dim()) {
    throw ConsistencyError("pair archive dim " +
                           std::to_string(pair_archive.dim()) +
                           " differs from text archive dim " +
                           std::to_string(text_archive.dim()));
  }
  const PairScorer scorer(text_archive, taxonomy, options.logit_scale,
                          options.mode);
  ScoringSummary summary;
  for (const auto& pair : pairs) {
    const std::string key = pair.embedding_key();
    auto emb = pair_archive.find(key);
    if (!emb) {
      if (options.on_missing == MissingPolicy::fail) {
        throw LookupError("missing pair embedding '" + key + "'");
      }
      ++summary.missing_embeddings;
      continue;
    }
    const VerbDistribution dist = scorer.score(pair, *emb);
    for (const auto& e : dist.entries) {
      write_detection(out, {pair.image_id, pair.human_box, pair.object_box,
                            e.hoi_id,
                            e.probability * pair.human_score *
                                pair.object_score});
      ++summary.detections_emitted;
    }
    ++summary.pairs_scored;
  }
  return summary;
}

void write_detection(std::ostream& out, const HoiDetection& d) {
  out << "{\"image_id\":" << Json(d.image_id).dump()
      << ",\"human_box\":" << json_io::box_to_json(d.human_box).dump()
      << ",\"object_box\":" << json_io::box_to_json(d.object_box).dump()
      << ",\"hoi_id\":" << d.hoi_id << ",\"score\":" << Json(d.score).dump()
      << "}\n";
}

void write_detections(std::ostream& out,
                      std::span<const HoiDetection> detections) {
  for (const auto& d : detections) write_detection(out, d);
}

std::vector<HoiDetection> read_detections(std::istream& in,
                                          std::string_view source) {
  std::vector<HoiDetection> out;
  json_io::for_each_line(in, source, [&](const Json& r, std::size_t line) {
    const std::string ctx = std::string(source) + ":" + std::to_string(line);
    HoiDetection d;
    d.image_id = json_io::get_string(r, "image_id", ctx);
    d.human_box = json_io::get_box_raw(r, "human_box", ctx);
    d.object_box = json_io::get_box_raw(r, "object_box", ctx);
    d.hoi_id = json_io::get_int(r, "hoi_id", ctx);
    d.score = json_io::get_number(r, "score", ctx);
    if (!d.human_box.valid() || !d.object_box.valid()) {
      throw ValidationError(ctx + ": degenerate box in image_id '" +
                            d.image_id + "'");
    }
    if (!std::isfinite(d.score)) {
      throw ValidationError(ctx + ": non-finite score");
    }
    out.push_back(std::move(d));
  });
  return out;
}

std::vector<HoiDetection> load_detections(const std::filesystem::path& path) {
  auto in = json_io::open_input(path);
  return read_detections(in, path.string());
}

}  // namespace hoi
