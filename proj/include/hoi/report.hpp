#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hoi/evaluation.hpp"
#include "json.hpp"

namespace hoi {

// {"full", "rare", "non_rare", "splits": {name: {"full", "unseen", "seen"}},
//  "per_class": [{"hoi_id", "ap", "num_gt"}]}; split order is preserved.
nlohmann::ordered_json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::ordered_json& doc,
                            std::string_view source);
void save_report(const std::filesystem::path& path, const EvalReport& report);
EvalReport load_report(const std::filesystem::path& path);

// Aligned text table: a "full rare non-rare" block for the default setting
// followed by a "full unseen seen" block for the zero-shot splits.
std::string render_report_table(const EvalReport& report);

// Percentage rounded to the two decimals the tables show.
double round_percent(double value);

struct LabeledReport {
  std::string label;
  EvalReport report;
};

// Side-by-side view of several reports. Values are rounded to two decimals;
// deltas[i][c] = values[i + 1][c] - values[0][c].
struct Comparison {
  std::vector<std::string> groups;   // "default", then split names
  std::vector<std::string> columns;  // three per group
  std::vector<std::string> labels;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<double>> deltas;
};

// Throws ValidationError for fewer than two reports or reports with
// different split sets.
Comparison compare_reports(std::span<const LabeledReport> reports);
std::string render_comparison(const Comparison& comparison);

}  // namespace hoi
