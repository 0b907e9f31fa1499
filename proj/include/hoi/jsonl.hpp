#pragma once

// JSON / JSON Lines helpers shared by the file readers and writers.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>

#include "hoi/box.hpp"
#include "json.hpp"

namespace hoi::json_io {

using Json = nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path,
                         std::ios::openmode mode = std::ios::in);
std::ofstream open_output(const std::filesystem::path& path,
                          std::ios::openmode mode = std::ios::out);

// Parses a whole JSON document; FormatError names `source` on failure.
Json parse_document(std::istream& in, std::string_view source);

// Calls `fn(record, line_number)` for every non-blank line.
void for_each_line(std::istream& in, std::string_view source,
                   const std::function<void(const Json&, std::size_t)>& fn);

// Field accessors; FormatError mentions `context` and the key.
int get_int(const Json& obj, std::string_view key, std::string_view context);
double get_number(const Json& obj, std::string_view key,
                  std::string_view context);
std::string get_string(const Json& obj, std::string_view key,
                       std::string_view context);
bool get_bool(const Json& obj, std::string_view key, std::string_view context);

// Reads [x1, y1, x2, y2] without validating box geometry.
BoundingBox get_box_raw(const Json& obj, std::string_view key,
                        std::string_view context);
Json box_to_json(const BoundingBox& box);

// Compact one-line serialization used for JSON Lines output.
std::string dump_line(const Json& record);

}  // namespace hoi::json_io
