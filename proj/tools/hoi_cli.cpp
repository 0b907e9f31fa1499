// hoi: command-line front end for pair generation, scoring, evaluation and
// report comparison. Data goes to files or stdout, logs to stderr.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hoi/archive.hpp"
#include "hoi/dataset.hpp"
#include "hoi/error.hpp"
#include "hoi/evaluation.hpp"
#include "hoi/jsonl.hpp"
#include "hoi/kernels.hpp"
#include "hoi/pairing.hpp"
#include "hoi/report.hpp"
#include "hoi/scoring.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct RunConfig {
  std::string regime = "gt";
  std::string annotations;
  std::string taxonomy;
  std::string splits_dir;
  std::string pairs;
  std::string pair_embeddings;
  std::string text_embeddings;
  std::string detections;
  std::string out;
  double logit_scale = hoi::kDefaultLogitScale;
  double iou_threshold = hoi::kDefaultIouThreshold;
  double score_threshold = 0.25;
  std::size_t max_pairs = 100;
  std::string on_missing = "fail";
  std::string candidates = "object";
  std::vector<std::string> reports;
  std::vector<std::string> labels;
  std::string kernels = "auto";
};

// Output file written under a temporary name and renamed on commit, so a
// failed command never leaves a partial output behind.
class OutputFile {
 public:
  explicit OutputFile(fs::path path, std::ios::openmode mode = std::ios::out)
      : path_(std::move(path)), tmp_(path_.string() + ".tmp") {
    stream_.open(tmp_, mode | std::ios::trunc);
    if (!stream_) throw hoi::Error("cannot open output file " + path_.string());
  }
  ~OutputFile() {
    if (!committed_) {
      stream_.close();
      std::error_code ec;
      fs::remove(tmp_, ec);
    }
  }
  OutputFile(const OutputFile&) = delete;
  OutputFile& operator=(const OutputFile&) = delete;

  std::ostream& stream() { return stream_; }

  void commit() {
    stream_.close();
    if (!stream_) throw hoi::Error("failed writing " + path_.string());
    fs::rename(tmp_, path_);
    committed_ = true;
  }

 private:
  fs::path path_;
  fs::path tmp_;
  std::ofstream stream_;
  bool committed_ = false;
};

void log(const std::string& msg) { std::cerr << "hoi: " << msg << '\n'; }

void require(bool ok, const std::string& what) {
  if (!ok) throw CLI::ValidationError(what);
}

void check_not_input(const std::string& out,
                     std::initializer_list<std::string> inputs) {
  if (out.empty()) return;
  std::error_code ec;
  const auto target = fs::weakly_canonical(out, ec);
  for (const auto& in : inputs) {
    if (in.empty()) continue;
    if (fs::weakly_canonical(in, ec) == target) {
      throw CLI::ValidationError("--out would overwrite input " + in);
    }
  }
}

void select_kernels(const std::string& name) {
  if (name == "auto") return;
  if (name == "scalar") return hoi::kernels::set_active(hoi::kernels::Isa::scalar);
  if (name == "avx2") return hoi::kernels::set_active(hoi::kernels::Isa::avx2);
  throw CLI::ValidationError("--kernels must be auto, scalar or avx2");
}

int cmd_pairs(const RunConfig& cfg) {
  const auto regime = hoi::parse_regime(cfg.regime);
  require(!cfg.taxonomy.empty(), "--taxonomy is required");
  require(!cfg.out.empty(), "--out is required");
  if (regime == hoi::Regime::detector) {
    require(!cfg.detections.empty(), "--regime detector requires --detections");
  } else {
    require(!cfg.annotations.empty(),
            "--regime " + cfg.regime + " requires --annotations");
  }
  check_not_input(cfg.out, {cfg.annotations, cfg.taxonomy, cfg.detections});

  const auto taxonomy = hoi::load_taxonomy(cfg.taxonomy);
  hoi::Annotations annotations;
  if (!cfg.annotations.empty()) {
    annotations = hoi::load_annotations(cfg.annotations, taxonomy);
  }
  std::vector<hoi::DetectionBox> boxes;
  if (regime == hoi::Regime::detector) {
    boxes = hoi::load_detection_boxes(cfg.detections);
  }
  hoi::DetectorParams params{cfg.score_threshold, cfg.max_pairs};
  const auto pairs =
      hoi::generate_pairs(regime, annotations, boxes, taxonomy, params);

  OutputFile out(cfg.out);
  hoi::write_pairs(out.stream(), pairs);
  out.commit();

  std::set<std::string> images;
  for (const auto& p : pairs) images.insert(p.image_id);
  log("pairs: regime=" + cfg.regime + " images=" +
      std::to_string(images.size()) + " pairs=" + std::to_string(pairs.size()));
  return 0;
}

int cmd_score(const RunConfig& cfg) {
  require(!cfg.pairs.empty(), "--pairs is required");
  require(!cfg.pair_embeddings.empty(), "--pair-embeddings is required");
  require(!cfg.text_embeddings.empty(), "--text-embeddings is required");
  require(!cfg.taxonomy.empty(), "--taxonomy is required");
  require(!cfg.out.empty(), "--out is required");
  check_not_input(cfg.out, {cfg.pairs, cfg.pair_embeddings,
                            cfg.text_embeddings, cfg.taxonomy});

  hoi::ScoringOptions options;
  options.logit_scale = cfg.logit_scale;
  options.mode = hoi::parse_candidate_mode(cfg.candidates);
  options.on_missing = hoi::parse_missing_policy(cfg.on_missing);

  const auto taxonomy = hoi::load_taxonomy(cfg.taxonomy);
  const auto pairs = hoi::load_pairs(cfg.pairs);
  const auto pair_archive = hoi::load_archive(cfg.pair_embeddings);
  const auto text_archive = hoi::load_archive(cfg.text_embeddings);

  OutputFile out(cfg.out);
  const auto summary = hoi::run_scoring(pairs, pair_archive, text_archive,
                                        taxonomy, options, out.stream());
  out.commit();
  log("score: pairs_scored=" + std::to_string(summary.pairs_scored) +
      " detections=" + std::to_string(summary.detections_emitted) +
      " missing_embeddings=" + std::to_string(summary.missing_embeddings) +
      " kernels=" + std::string(hoi::kernels::isa_name(hoi::kernels::active())));
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  require(!cfg.detections.empty(), "--detections is required");
  require(!cfg.annotations.empty(), "--annotations is required");
  require(!cfg.taxonomy.empty(), "--taxonomy is required");
  require(cfg.iou_threshold > 0.0 && cfg.iou_threshold < 1.0,
          "--iou-threshold must lie in (0, 1)");
  check_not_input(cfg.out, {cfg.detections, cfg.annotations, cfg.taxonomy});

  const auto taxonomy = hoi::load_taxonomy(cfg.taxonomy);
  const auto annotations = hoi::load_annotations(cfg.annotations, taxonomy);
  std::vector<hoi::SplitDefinition> splits;
  if (!cfg.splits_dir.empty()) {
    for (auto& s : hoi::load_split_dir(cfg.splits_dir, taxonomy)) {
      if (s.name != "default") splits.push_back(std::move(s));
    }
  }
  const auto detections = hoi::load_detections(cfg.detections);
  const auto report = hoi::evaluate(detections, annotations, taxonomy, splits,
                                    cfg.iou_threshold);

  if (!cfg.out.empty()) {
    OutputFile out(cfg.out);
    out.stream() << hoi::report_to_json(report).dump(2) << '\n';
    out.commit();
  }
  std::cout << hoi::render_report_table(report);
  log("eval: images=" + std::to_string(annotations.size()) +
      " detections=" + std::to_string(detections.size()) +
      " classes_with_gt=" + std::to_string(report.per_class.size()));
  return 0;
}

int cmd_compare(const RunConfig& cfg) {
  require(cfg.reports.size() >= 2, "compare needs at least two reports");
  require(cfg.labels.empty() || cfg.labels.size() == cfg.reports.size(),
          "--labels must name every report");
  std::vector<hoi::LabeledReport> reports;
  for (std::size_t i = 0; i < cfg.reports.size(); ++i) {
    const std::string label = cfg.labels.empty()
                                  ? fs::path(cfg.reports[i]).stem().string()
                                  : cfg.labels[i];
    reports.push_back({label, hoi::load_report(cfg.reports[i])});
  }
  const auto table = hoi::render_comparison(hoi::compare_reports(reports));
  if (!cfg.out.empty()) {
    for (const auto& r : cfg.reports) check_not_input(cfg.out, {r});
    OutputFile out(cfg.out);
    out.stream() << table;
    out.commit();
  }
  std::cout << table;
  return 0;
}

// Returns the record kind of a JSON Lines detection-style file from its first
// record: "boxes" (detector output) or "hoi" (scored detections).
std::string sniff_detection_kind(const std::string& path) {
  auto in = hoi::json_io::open_input(path);
  std::string kind = "empty";
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto r = nlohmann::json::parse(line);
      kind = r.contains("box") ? "boxes" : "hoi";
    } catch (const nlohmann::json::parse_error& e) {
      throw hoi::FormatError(path + ":1: " + e.what());
    }
    break;
  }
  return kind;
}

int cmd_validate(const RunConfig& cfg) {
  bool any = false;
  auto ok = [&any](const std::string& what) {
    any = true;
    std::cout << "ok " << what << '\n';
  };

  std::optional<hoi::HoiTaxonomy> taxonomy;
  if (!cfg.taxonomy.empty()) {
    taxonomy = hoi::load_taxonomy(cfg.taxonomy);
    ok("taxonomy " + cfg.taxonomy + " (" + std::to_string(taxonomy->size()) +
       " classes, " + std::to_string(taxonomy->rare_ids().size()) + " rare)");
  }
  auto need_taxonomy = [&](const char* what) -> const hoi::HoiTaxonomy& {
    if (!taxonomy) {
      throw CLI::ValidationError(std::string(what) + " requires --taxonomy");
    }
    return *taxonomy;
  };

  hoi::Annotations annotations;
  if (!cfg.annotations.empty()) {
    annotations = hoi::load_annotations(cfg.annotations,
                                        need_taxonomy("--annotations"));
    std::size_t n = 0;
    for (const auto& img : annotations) n += img.instances.size();
    ok("annotations " + cfg.annotations + " (" +
       std::to_string(annotations.size()) + " images, " + std::to_string(n) +
       " instances)");
  }
  if (!cfg.splits_dir.empty()) {
    const auto splits =
        hoi::load_split_dir(cfg.splits_dir, need_taxonomy("--splits-dir"));
    for (const auto& s : splits) {
      ok("split " + s.name + " (" + std::to_string(s.unseen_hoi_ids.size()) +
         " unseen, " + std::to_string(s.seen_hoi_ids.size()) + " seen)");
    }
  }

  std::vector<hoi::CandidatePair> pairs;
  if (!cfg.pairs.empty()) {
    pairs = hoi::load_pairs(cfg.pairs);
    std::map<std::string, std::vector<int>> per_image;
    for (const auto& p : pairs) per_image[p.image_id].push_back(p.pair_index);
    for (auto& [image, idx] : per_image) {
      std::sort(idx.begin(), idx.end());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] != static_cast<int>(i)) {
          throw hoi::ValidationError(cfg.pairs + ": pair_index values of image '" +
                                     image + "' are not consecutive from 0");
        }
      }
    }
    ok("pairs " + cfg.pairs + " (" + std::to_string(pairs.size()) + " pairs)");
  }

  if (!cfg.detections.empty()) {
    const auto kind = sniff_detection_kind(cfg.detections);
    if (kind == "boxes") {
      const auto boxes = hoi::load_detection_boxes(cfg.detections);
      ok("detection boxes " + cfg.detections + " (" +
         std::to_string(boxes.size()) + " boxes)");
    } else {
      const auto dets = hoi::load_detections(cfg.detections);
      for (std::size_t i = 0; i < dets.size(); ++i) {
        if (!(dets[i].score >= 0.0 && dets[i].score <= 1.0)) {
          throw hoi::ValidationError(cfg.detections + ": detection " +
                                     std::to_string(i) +
                                     " has score outside [0, 1]");
        }
        if (taxonomy && !taxonomy->contains(dets[i].hoi_id)) {
          throw hoi::ValidationError(cfg.detections + ": detection " +
                                     std::to_string(i) + " has unknown hoi_id " +
                                     std::to_string(dets[i].hoi_id));
        }
      }
      ok("detections " + cfg.detections + " (" + std::to_string(dets.size()) +
         " detections)");
    }
  }

  if (!cfg.text_embeddings.empty()) {
    const auto text = hoi::load_archive(cfg.text_embeddings);
    if (taxonomy) {
      for (int id : taxonomy->all_ids()) {
        if (!text.contains(hoi::text_key(id))) {
          throw hoi::LookupError(cfg.text_embeddings + ": missing key '" +
                                 hoi::text_key(id) + "'");
        }
      }
    }
    ok("text embeddings " + cfg.text_embeddings + " (" +
       std::to_string(text.size()) + " x " + std::to_string(text.dim()) + ")");
  }
  if (!cfg.pair_embeddings.empty()) {
    const auto archive = hoi::load_archive(cfg.pair_embeddings);
    for (const auto& p : pairs) {
      if (!archive.contains(p.embedding_key())) {
        throw hoi::LookupError(cfg.pair_embeddings + ": missing key '" +
                               p.embedding_key() + "'");
      }
    }
    ok("pair embeddings " + cfg.pair_embeddings + " (" +
       std::to_string(archive.size()) + " x " + std::to_string(archive.dim()) +
       ")");
  }

  require(any, "validate: pass at least one file to check");
  return 0;
}

// Turns a JSON config object into "--key value" arguments for `sub`. Keys may
// sit at the top level or under an object named after the subcommand.
std::vector<std::string> config_args(const std::string& path,
                                     const CLI::App& sub) {
  auto in = hoi::json_io::open_input(path);
  const auto doc = hoi::json_io::parse_document(in, path);
  if (!doc.is_object()) {
    throw CLI::ValidationError("--config must hold a JSON object");
  }
  std::vector<std::string> args;
  auto add = [&](const std::string& key, const nlohmann::json& value) {
    if (key == "config") return;
    const CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr) {
      throw CLI::ValidationError("config key '" + key +
                                 "' is not an option of '" + sub.get_name() +
                                 "'");
    }
    auto scalar = [](const nlohmann::json& v) {
      return v.is_string() ? v.get<std::string>() : v.dump();
    };
    if (value.is_array()) {
      for (const auto& v : value) {
        args.push_back("--" + key);
        args.push_back(scalar(v));
      }
    } else {
      args.push_back("--" + key);
      args.push_back(scalar(value));
    }
  };
  for (const auto& [key, value] : doc.items()) {
    if (value.is_object()) {
      if (key == sub.get_name()) {
        for (const auto& [k, v] : value.items()) add(k, v);
      }
      continue;
    }
    add(key, value);
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Training-free HOI scoring and HICO-DET evaluation toolkit"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.add_option("--kernels", cfg.kernels,
                 "Kernel ISA: auto, scalar or avx2 (default auto)")
      ->capture_default_str();

  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path,
                    "JSON file with option defaults; flags override it")
        ->check(CLI::ExistingFile);
  };

  auto* pairs = app.add_subcommand("pairs", "Generate candidate pairs");
  pairs->add_option("--regime", cfg.regime, "gt, gt-r or detector")
      ->check(CLI::IsMember({"gt", "gt-r", "detector"}))
      ->capture_default_str();
  pairs->add_option("--annotations", cfg.annotations)->check(CLI::ExistingFile);
  pairs->add_option("--taxonomy", cfg.taxonomy)->check(CLI::ExistingFile);
  pairs->add_option("--detections", cfg.detections, "Detector boxes (JSONL)")
      ->check(CLI::ExistingFile);
  pairs->add_option("--score-threshold", cfg.score_threshold)
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  pairs->add_option("--max-pairs", cfg.max_pairs)->capture_default_str();
  pairs->add_option("--out", cfg.out, "Pair list (JSONL)");
  add_config(pairs);

  auto* score = app.add_subcommand("score", "Score pairs into HOI detections");
  score->add_option("--pairs", cfg.pairs)->check(CLI::ExistingFile);
  score->add_option("--pair-embeddings", cfg.pair_embeddings)
      ->check(CLI::ExistingFile);
  score->add_option("--text-embeddings", cfg.text_embeddings)
      ->check(CLI::ExistingFile);
  score->add_option("--taxonomy", cfg.taxonomy)->check(CLI::ExistingFile);
  score->add_option("--logit-scale", cfg.logit_scale)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  score->add_option("--on-missing", cfg.on_missing, "fail or skip")
      ->check(CLI::IsMember({"fail", "skip"}))
      ->capture_default_str();
  score->add_option("--candidates", cfg.candidates,
                    "Softmax over the object's classes (object) or all (all)")
      ->check(CLI::IsMember({"object", "all"}))
      ->capture_default_str();
  score->add_option("--out", cfg.out, "Detections (JSONL)");
  add_config(score);

  auto* eval = app.add_subcommand("eval", "Compute the mAP report");
  eval->add_option("--detections", cfg.detections)->check(CLI::ExistingFile);
  eval->add_option("--annotations", cfg.annotations)->check(CLI::ExistingFile);
  eval->add_option("--taxonomy", cfg.taxonomy)->check(CLI::ExistingFile);
  eval->add_option("--splits-dir", cfg.splits_dir)
      ->check(CLI::ExistingDirectory);
  eval->add_option("--iou-threshold", cfg.iou_threshold)->capture_default_str();
  eval->add_option("--out", cfg.out, "Report (JSON)");
  add_config(eval);

  auto* compare = app.add_subcommand("compare", "Compare evaluation reports");
  compare->add_option("reports", cfg.reports, "Report JSON files")
      ->check(CLI::ExistingFile)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  compare->add_option("--labels", cfg.labels, "Row labels, one per report")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  compare->add_option("--out", cfg.out, "Also write the table here");
  add_config(compare);

  auto* validate = app.add_subcommand("validate", "Check input file formats");
  validate->add_option("--taxonomy", cfg.taxonomy)->check(CLI::ExistingFile);
  validate->add_option("--annotations", cfg.annotations)
      ->check(CLI::ExistingFile);
  validate->add_option("--splits-dir", cfg.splits_dir)
      ->check(CLI::ExistingDirectory);
  validate->add_option("--pairs", cfg.pairs)->check(CLI::ExistingFile);
  validate->add_option("--detections", cfg.detections)
      ->check(CLI::ExistingFile);
  validate->add_option("--pair-embeddings", cfg.pair_embeddings)
      ->check(CLI::ExistingFile);
  validate->add_option("--text-embeddings", cfg.text_embeddings)
      ->check(CLI::ExistingFile);
  add_config(validate);

  try {
    app.parse(argc, argv);
    CLI::App* sub = app.get_subcommands().front();
    if (!config_path.empty()) {
      // Re-parse with the config values placed before the explicit flags;
      // TakeLast makes the explicit flags win.
      std::vector<std::string> args{argv[0]};
      int i = 1;
      for (; i < argc && argv[i] != sub->get_name(); ++i) args.push_back(argv[i]);
      args.push_back(argv[i++]);
      for (auto& a : config_args(config_path, *sub)) args.push_back(a);
      for (; i < argc; ++i) args.push_back(argv[i]);
      cfg = RunConfig{};
      app.clear();
      std::vector<std::string> reversed(args.rbegin(), args.rend());
      reversed.pop_back();
      app.parse(reversed);
    }
    select_kernels(cfg.kernels);

    if (sub == pairs) return cmd_pairs(cfg);
    if (sub == score) return cmd_score(cfg);
    if (sub == eval) return cmd_eval(cfg);
    if (sub == compare) return cmd_compare(cfg);
    return cmd_validate(cfg);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const hoi::Error& e) {
    log(std::string("error: ") + e.what());
    return 1;
  } catch (const std::exception& e) {
    log(std::string("error: ") + e.what());
    return 1;
  }
}
