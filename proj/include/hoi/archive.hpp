#pragma once

// HOIE embedding archive: little-endian binary container of L2-normalized
// float32 vectors keyed by UTF-8 strings.
//
//   magic   "HOIE"
//   version u32 = 1
//   dim     u32
//   count   u64
//   count x { key_len u16, key bytes, dim x float32 }

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hoi {

inline constexpr std::uint32_t kArchiveVersion = 1;
inline constexpr double kNormTolerance = 1e-3;

class EmbeddingArchive {
 public:
  explicit EmbeddingArchive(std::uint32_t dim);

  std::uint32_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return keys_.size(); }
  bool empty() const noexcept { return keys_.empty(); }

  // Appends a record; throws ValidationError on duplicate keys, a dimension
  // mismatch or keys longer than 65535 bytes.
  void add(std::string key, std::span<const float> vec);

  bool contains(std::string_view key) const;
  std::optional<std::span<const float>> find(std::string_view key) const;
  // Throws LookupError naming the key.
  std::span<const float> at(std::string_view key) const;

  // Records in insertion order.
  const std::vector<std::string>& keys() const noexcept { return keys_; }
  std::span<const float> vector(std::size_t i) const;

  friend bool operator==(const EmbeddingArchive&, const EmbeddingArchive&);

 private:
  std::uint32_t dim_;
  std::vector<std::string> keys_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Returns `v / ||v||`; throws ValidationError for a zero vector.
std::vector<float> l2_normalized(std::span<const float> v);
double l2_norm(std::span<const float> v);

// Reads an archive and checks | ||v|| - 1 | <= norm_tolerance per record.
EmbeddingArchive read_archive(std::istream& in, std::string_view source,
                              double norm_tolerance = kNormTolerance);
EmbeddingArchive load_archive(const std::filesystem::path& path,
                              double norm_tolerance = kNormTolerance);

void write_archive(std::ostream& out, const EmbeddingArchive& archive);
void save_archive(const std::filesystem::path& path,
                  const EmbeddingArchive& archive);

}  // namespace hoi
