#include "hoi/jsonl.hpp"

#include <istream>

#include "hoi/error.hpp"

namespace hoi::json_io {

namespace {

std::string where(std::string_view context, std::string_view key) {
  return "field '" + std::string(key) + "' in " + std::string(context);
}

const Json& require(const Json& obj, std::string_view key,
                    std::string_view context) {
  if (!obj.is_object()) {
    throw FormatError("expected a JSON object for " + std::string(context));
  }
  auto it = obj.find(key);
  if (it == obj.end()) throw FormatError("missing " + where(context, key));
  return *it;
}

}  // namespace

std::ifstream open_input(const std::filesystem::path& path,
                         std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw Error("cannot open input file " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path,
                          std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw Error("cannot open output file " + path.string());
  return out;
}

Json parse_document(std::istream& in, std::string_view source) {
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string(source) + ": " + e.what());
  }
}

void for_each_line(std::istream& in, std::string_view source,
                   const std::function<void(const Json&, std::size_t)>& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw FormatError(std::string(source) + ":" + std::to_string(line_no) +
                        ": " + e.what());
    }
    fn(record, line_no);
  }
}

int get_int(const Json& obj, std::string_view key, std::string_view context) {
  const Json& v = require(obj, key, context);
  if (!v.is_number_integer()) {
    throw FormatError("expected integer " + where(context, key));
  }
  return v.get<int>();
}

double get_number(const Json& obj, std::string_view key,
                  std::string_view context) {
  const Json& v = require(obj, key, context);
  if (!v.is_number()) {
    throw FormatError("expected number " + where(context, key));
  }
  return v.get<double>();
}

std::string get_string(const Json& obj, std::string_view key,
                       std::string_view context) {
  const Json& v = require(obj, key, context);
  if (!v.is_string()) {
    throw FormatError("expected string " + where(context, key));
  }
  return v.get<std::string>();
}

bool get_bool(const Json& obj, std::string_view key, std::string_view context) {
  const Json& v = require(obj, key, context);
  if (!v.is_boolean()) {
    throw FormatError("expected boolean " + where(context, key));
  }
  return v.get<bool>();
}

BoundingBox get_box_raw(const Json& obj, std::string_view key,
                        std::string_view context) {
  const Json& v = require(obj, key, context);
  if (!v.is_array() || v.size() != 4) {
    throw FormatError("expected [x1, y1, x2, y2] " + where(context, key));
  }
  for (const auto& c : v) {
    if (!c.is_number()) {
      throw FormatError("non-numeric coordinate " + where(context, key));
    }
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>(),
          v[3].get<double>()};
}

Json box_to_json(const BoundingBox& box) {
  return Json::array({box.x1, box.y1, box.x2, box.y2});
}

std::string dump_line(const Json& record) { return record.dump(); }

}  // namespace hoi::json_io
