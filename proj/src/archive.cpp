#include "hoi/archive.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "hoi/error.hpp"

namespace hoi {

namespace {

constexpr char kMagic[4] = {'H', 'O', 'I', 'E'};

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
      std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    }
    std::memcpy(&v, bytes, sizeof(T));
    return v;
  }
}

template <typename T>
void put(std::ostream& out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

class Reader {
 public:
  Reader(std::istream& in, std::string_view source)
      : in_(in), source_(source) {}

  template <typename T>
  bool get(T& v) {
    if (!in_.read(reinterpret_cast<char*>(&v), sizeof(T))) return false;
    v = to_little(v);
    return true;
  }

  bool bytes(char* dst, std::size_t n) {
    return static_cast<bool>(in_.read(dst, static_cast<std::streamsize>(n)));
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

  const std::string& source() const { return source_; }

 private:
  std::istream& in_;
  std::string source_;
};

}  // namespace

EmbeddingArchive::EmbeddingArchive(std::uint32_t dim) : dim_(dim) {
  if (dim == 0) throw ValidationError("embedding dim must be positive");
}

void EmbeddingArchive::add(std::string key, std::span<const float> vec) {
  if (vec.size() != dim_) {
    throw ValidationError("embedding '" + key + "' has dim " +
                          std::to_string(vec.size()) + ", archive dim " +
                          std::to_string(dim_));
  }
  if (key.size() > 0xFFFF) {
    throw ValidationError("embedding key longer than 65535 bytes");
  }
  if (index_.count(key)) {
    throw ValidationError("duplicate embedding key '" + key + "'");
  }
  index_.emplace(key, keys_.size());
  keys_.push_back(std::move(key));
  data_.insert(data_.end(), vec.begin(), vec.end());
}

bool EmbeddingArchive::contains(std::string_view key) const {
  return index_.count(std::string(key)) != 0;
}

std::optional<std::span<const float>> EmbeddingArchive::find(
    std::string_view key) const {
  auto it = index_.find(std::string(key));
  if (it == index_.end()) return std::nullopt;
  return vector(it->second);
}

std::span<const float> EmbeddingArchive::at(std::string_view key) const {
  if (auto v = find(key)) return *v;
  throw LookupError("missing embedding for key '" + std::string(key) + "'");
}

std::span<const float> EmbeddingArchive::vector(std::size_t i) const {
  return std::span<const float>(data_).subspan(i * dim_, dim_);
}

bool operator==(const EmbeddingArchive& a, const EmbeddingArchive& b) {
  return a.dim_ == b.dim_ && a.keys_ == b.keys_ &&
         a.data_.size() == b.data_.size() &&
         std::memcmp(a.data_.data(), b.data_.data(),
                     a.data_.size() * sizeof(float)) == 0;
}

double l2_norm(std::span<const float> v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  return std::sqrt(sq);
}

std::vector<float> l2_normalized(std::span<const float> v) {
  const double n = l2_norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw ValidationError("cannot normalize a zero or non-finite vector");
  }
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<float>(v[i] / n);
  }
  return out;
}

EmbeddingArchive read_archive(std::istream& in, std::string_view source,
                              double norm_tolerance) {
  Reader r(in, source);
  const std::string src(source);

  char magic[4];
  if (!r.bytes(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(src + ": bad magic (not a HOIE archive)");
  }
  std::uint32_t version = 0, dim = 0;
  std::uint64_t count = 0;
  if (!r.get(version)) throw TruncationError(src + ": truncated header");
  if (version != kArchiveVersion) {
    throw FormatError(src + ": unsupported archive version " +
                      std::to_string(version));
  }
  if (!r.get(dim) || !r.get(count)) {
    throw TruncationError(src + ": truncated header");
  }
  if (dim == 0) throw FormatError(src + ": dim must be positive");

  EmbeddingArchive archive(dim);
  std::vector<float> vec(dim);
  std::string key;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint16_t key_len = 0;
    if (!r.get(key_len)) {
      throw TruncationError(src + ": header declares " + std::to_string(count) +
                            " records, found " + std::to_string(i));
    }
    key.resize(key_len);
    if (!r.bytes(key.data(), key_len) ||
        !r.bytes(reinterpret_cast<char*>(vec.data()), dim * sizeof(float))) {
      throw TruncationError(src + ": record " + std::to_string(i) +
                            " truncated (header declares " +
                            std::to_string(count) + " records)");
    }
    for (auto& x : vec) x = to_little(x);
    const double norm = l2_norm(vec);
    if (!(std::abs(norm - 1.0) <= norm_tolerance)) {
      throw ValidationError(src + ": vector for key '" + key +
                            "' has L2 norm " + std::to_string(norm));
    }
    try {
      archive.add(key, vec);
    } catch (const ValidationError& e) {
      throw ValidationError(src + ": " + e.what());
    }
  }
  if (!r.at_end()) {
    throw FormatError(src + ": trailing bytes after " + std::to_string(count) +
                      " records");
  }
  return archive;
}

EmbeddingArchive load_archive(const std::filesystem::path& path,
                              double norm_tolerance) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open archive " + path.string());
  return read_archive(in, path.string(), norm_tolerance);
}

void write_archive(std::ostream& out, const EmbeddingArchive& archive) {
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kArchiveVersion);
  put<std::uint32_t>(out, archive.dim());
  put<std::uint64_t>(out, archive.size());
  for (std::size_t i = 0; i < archive.size(); ++i) {
    const std::string& key = archive.keys()[i];
    put<std::uint16_t>(out, static_cast<std::uint16_t>(key.size()));
    out.write(key.data(), static_cast<std::streamsize>(key.size()));
    for (float x : archive.vector(i)) put<float>(out, x);
  }
}

void save_archive(const std::filesystem::path& path,
                  const EmbeddingArchive& archive) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file " + path.string());
  write_archive(out, archive);
  if (!out) throw Error("failed writing archive " + path.string());
}

}  // namespace hoi
