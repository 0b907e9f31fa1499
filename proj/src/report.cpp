#include "hoi/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hoi/error.hpp"
#include "hoi/jsonl.hpp"

namespace hoi {

using OJson = nlohmann::ordered_json;

namespace {

double number_at(const OJson& obj, const char* key, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    throw FormatError(ctx + ": missing numeric field '" + key + "'");
  }
  return it->get<double>();
}

std::string fixed2(double v) {
  v = round_percent(v);
  if (v == 0.0) v = 0.0;  // no "-0.00"
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

double round_percent(double value) { return std::round(value * 100.0) / 100.0; }

OJson report_to_json(const EvalReport& report) {
  OJson doc;
  doc["full"] = report.full;
  doc["rare"] = report.rare;
  doc["non_rare"] = report.non_rare;
  doc["splits"] = OJson::object();
  for (const auto& s : report.splits) {
    doc["splits"][s.name] = {
        {"full", s.full}, {"unseen", s.unseen}, {"seen", s.seen}};
  }
  doc["per_class"] = OJson::array();
  for (const auto& c : report.per_class) {
    doc["per_class"].push_back(
        {{"hoi_id", c.hoi_id}, {"ap", c.ap}, {"num_gt", c.num_gt}});
  }
  return doc;
}

EvalReport report_from_json(const OJson& doc, std::string_view source) {
  const std::string ctx(source);
  if (!doc.is_object()) throw FormatError(ctx + ": report must be an object");
  EvalReport r;
  r.full = number_at(doc, "full", ctx);
  r.rare = number_at(doc, "rare", ctx);
  r.non_rare = number_at(doc, "non_rare", ctx);
  auto splits = doc.find("splits");
  if (splits == doc.end() || !splits->is_object()) {
    throw FormatError(ctx + ": missing object field 'splits'");
  }
  for (const auto& [name, v] : splits->items()) {
    const std::string sctx = ctx + " split '" + name + "'";
    r.splits.push_back({name, number_at(v, "full", sctx),
                        number_at(v, "unseen", sctx),
                        number_at(v, "seen", sctx)});
  }
  auto per_class = doc.find("per_class");
  if (per_class != doc.end()) {
    if (!per_class->is_array()) {
      throw FormatError(ctx + ": 'per_class' must be an array");
    }
    for (const auto& c : *per_class) {
      const std::string cctx = ctx + " per_class entry";
      if (!c.is_object() || !c.contains("hoi_id") ||
          !c["hoi_id"].is_number_integer() || !c.contains("num_gt") ||
          !c["num_gt"].is_number_integer()) {
        throw FormatError(cctx + ": expected integer hoi_id and num_gt");
      }
      r.per_class.push_back({c["hoi_id"].get<int>(), number_at(c, "ap", cctx),
                             c["num_gt"].get<std::size_t>(), 0});
    }
  }
  return r;
}

void save_report(const std::filesystem::path& path, const EvalReport& report) {
  auto out = json_io::open_output(path);
  out << report_to_json(report).dump(2) << '\n';
  if (!out) throw Error("failed writing report " + path.string());
}

EvalReport load_report(const std::filesystem::path& path) {
  auto in = json_io::open_input(path);
  OJson doc;
  try {
    doc = OJson::parse(in);
  } catch (const OJson::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return report_from_json(doc, path.string());
}

std::string render_report_table(const EvalReport& report) {
  std::size_t name_w = std::string("default").size();
  for (const auto& s : report.splits) name_w = std::max(name_w, s.name.size());
  name_w += 2;
  constexpr std::size_t kCol = 10;

  std::ostringstream os;
  auto header = [&](const char* a, const char* b, const char* c) {
    os << pad_right("", name_w) << pad_left(a, kCol) << pad_left(b, kCol)
       << pad_left(c, kCol) << '\n';
  };
  auto row = [&](const std::string& name, double a, double b, double c) {
    os << pad_right(name, name_w) << pad_left(fixed2(a), kCol)
       << pad_left(fixed2(b), kCol) << pad_left(fixed2(c), kCol) << '\n';
  };

  header("full", "rare", "non-rare");
  row("default", report.full, report.rare, report.non_rare);
  if (!report.splits.empty()) {
    os << '\n';
    header("full", "unseen", "seen");
    for (const auto& s : report.splits) row(s.name, s.full, s.unseen, s.seen);
  }
  return os.str();
}

Comparison compare_reports(std::span<const LabeledReport> reports) {
  if (reports.size() < 2) {
    throw ValidationError("comparison needs at least two reports");
  }
  auto split_names = [](const EvalReport& r) {
    std::vector<std::string> names;
    for (const auto& s : r.splits) names.push_back(s.name);
    return names;
  };
  const auto names = split_names(reports.front().report);
  for (const auto& r : reports) {
    if (split_names(r.report) != names) {
      throw ValidationError("report '" + r.label +
                            "' has a different split set than '" +
                            reports.front().label + "'");
    }
  }

  Comparison cmp;
  cmp.groups.push_back("default");
  for (const char* c : {"full", "rare", "non-rare"}) cmp.columns.push_back(c);
  for (const auto& n : names) {
    cmp.groups.push_back(n);
    for (const char* c : {"full", "unseen", "seen"}) cmp.columns.push_back(c);
  }
  for (const auto& r : reports) {
    cmp.labels.push_back(r.label);
    std::vector<double> row{r.report.full, r.report.rare, r.report.non_rare};
    for (const auto& s : r.report.splits) {
      row.insert(row.end(), {s.full, s.unseen, s.seen});
    }
    for (auto& v : row) v = round_percent(v);
    cmp.values.push_back(std::move(row));
  }
  for (std::size_t i = 1; i < cmp.values.size(); ++i) {
    std::vector<double> d(cmp.columns.size());
    for (std::size_t c = 0; c < d.size(); ++c) {
      d[c] = round_percent(cmp.values[i][c] - cmp.values[0][c]);
    }
    cmp.deltas.push_back(std::move(d));
  }
  return cmp;
}

std::string render_comparison(const Comparison& cmp) {
  constexpr std::size_t kCol = 10;
  std::vector<std::string> row_names = cmp.labels;
  for (std::size_t i = 1; i < cmp.labels.size(); ++i) {
    row_names.push_back(cmp.labels[i] + " - " + cmp.labels[0]);
  }
  std::size_t name_w = 0;
  for (const auto& n : row_names) name_w = std::max(name_w, n.size());
  name_w += 2;

  std::ostringstream os;
  os << pad_right("", name_w);
  for (const auto& g : cmp.groups) {
    os << "| " << pad_right(g, 3 * kCol - 1);
  }
  os << '\n' << pad_right("", name_w);
  for (std::size_t c = 0; c < cmp.columns.size(); ++c) {
    if (c % 3 == 0) os << '|';
    os << pad_left(cmp.columns[c], c % 3 == 0 ? kCol - 1 : kCol);
  }
  os << '\n';
  auto row = [&](const std::string& name, const std::vector<double>& vals) {
    os << pad_right(name, name_w);
    for (std::size_t c = 0; c < vals.size(); ++c) {
      if (c % 3 == 0) os << '|';
      os << pad_left(fixed2(vals[c]), c % 3 == 0 ? kCol - 1 : kCol);
    }
    os << '\n';
  };
  for (std::size_t i = 0; i < cmp.labels.size(); ++i) {
    row(cmp.labels[i], cmp.values[i]);
  }
  for (std::size_t i = 0; i < cmp.deltas.size(); ++i) {
    row(cmp.labels[i + 1] + " - " + cmp.labels[0], cmp.deltas[i]);
  }
  return os.str();
}

}  // namespace hoi
