#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dcom/embedding.hpp"

// Binary formats (all integers and floats little-endian):
//   DCM1  "DCM1" | u32 n | u32 d | n*d binary32, row-major
//   DCL1  "DCL1" | u32 n | n i32, -1 = unknown
// Paths ending in ".csv" use a header row and one record per point instead.

namespace dcom {
namespace io {

namespace detail {

using dcom::detail::kDatasetModule;

inline bool is_csv(const std::filesystem::path& path) {
  return path.extension() == ".csv";
}

inline std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, kDatasetModule, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

inline void dump(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, kDatasetModule, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::Io, kDatasetModule, "write failed for " + path.string());
}

inline std::uint32_t load_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void store_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<unsigned char>(v >> shift));
}

inline void check_magic(const std::vector<unsigned char>& bytes, std::string_view magic) {
  if (bytes.size() < 4) {
    throw Error(Errc::Truncated, kDatasetModule, "file shorter than its magic", bytes.size());
  }
  if (std::memcmp(bytes.data(), magic.data(), 4) != 0) {
    throw Error(Errc::BadMagic, kDatasetModule, "expected magic " + std::string(magic), 0);
  }
}

inline std::uint32_t checked_count(std::size_t n, const char* what) {
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::Overflow, kDatasetModule, std::string(what) + " does not fit in u32");
  }
  return static_cast<std::uint32_t>(n);
}

// CSV helpers. Numbers are written in shortest round-trip form.
template <typename T>
std::string format_number(T value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), end);
}

template <typename T>
T parse_number(std::string_view text, const std::string& where) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(Errc::Parse, kDatasetModule, "cannot parse '" + std::string(text) + "' " + where);
  }
  return value;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, kDatasetModule, "cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

inline EmbeddingSet read_embedding_csv(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  if (lines.empty()) throw Error(Errc::Parse, kDatasetModule, path.string() + " has no header row");
  const std::size_t d = split_fields(lines[0]).size();
  std::vector<float> values;
  values.reserve((lines.size() - 1) * d);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto fields = split_fields(lines[r]);
    if (fields.size() != d) {
      throw Error(Errc::Parse, kDatasetModule,
                  "line " + std::to_string(r + 1) + " has " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(d));
    }
    for (auto f : fields) values.push_back(parse_number<float>(f, "on line " + std::to_string(r + 1)));
  }
  return EmbeddingSet(lines.size() - 1, d, std::move(values));
}

inline void write_embedding_csv(const EmbeddingSet& set, const std::filesystem::path& path) {
  std::ostringstream out;
  for (std::size_t j = 0; j < set.dim(); ++j) out << (j ? "," : "") << 'x' << j;
  out << '\n';
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto r = set.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << format_number(r[j]);
    out << '\n';
  }
  std::ofstream file(path, std::ios::trunc);
  if (!file || !(file << out.str())) {
    throw Error(Errc::Io, kDatasetModule, "cannot write " + path.string());
  }
}

}  // namespace detail

/// Decodes a DCM1 buffer. Every failure names the offending byte offset.
inline EmbeddingSet decode_embeddings(const std::vector<unsigned char>& bytes) {
  using detail::kDatasetModule;
  detail::check_magic(bytes, "DCM1");
  if (bytes.size() < 12) {
    throw Error(Errc::Truncated, kDatasetModule, "header needs 12 bytes", bytes.size());
  }
  const std::uint64_t n = detail::load_u32(bytes.data() + 4);
  const std::uint64_t d = detail::load_u32(bytes.data() + 8);
  if (d == 0) throw Error(Errc::InvalidArgument, kDatasetModule, "dimension is zero", 8);
  // n, d < 2^32 so n*d < 2^64; the byte count is what can overflow size_t.
  const std::uint64_t count = n * d;
  if (count > (std::numeric_limits<std::size_t>::max() - 12) / 4) {
    throw Error(Errc::Overflow, kDatasetModule, "n*d payload size overflows", 4);
  }
  const std::uint64_t expected = 12 + count * 4;
  if (bytes.size() < expected) {
    throw Error(Errc::Truncated, kDatasetModule,
                "payload needs " + std::to_string(expected) + " bytes", bytes.size());
  }
  if (bytes.size() > expected) {
    throw Error(Errc::TrailingData, kDatasetModule, "bytes after payload", expected);
  }
  std::vector<float> values(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t offset = 12 + 4 * i;
    const float v = std::bit_cast<float>(detail::load_u32(bytes.data() + offset));
    if (!std::isfinite(v)) {
      throw Error(Errc::NonFinite, kDatasetModule, "non-finite value", offset);
    }
    values[i] = v;
  }
  return EmbeddingSet(n, d, std::move(values));
}

inline std::vector<unsigned char> encode_embeddings(const EmbeddingSet& set) {
  using detail::kDatasetModule;
  std::vector<unsigned char> out;
  out.reserve(12 + set.values().size() * 4);
  for (char ch : std::string_view("DCM1")) out.push_back(static_cast<unsigned char>(ch));
  detail::store_u32(out, detail::checked_count(set.size(), "n"));
  detail::store_u32(out, detail::checked_count(set.dim(), "d"));
  for (std::size_t i = 0; i < set.values().size(); ++i) {
    const float v = set.values()[i];
    if (!std::isfinite(v)) {
      throw Error(Errc::NonFinite, kDatasetModule, "non-finite value", 12 + 4 * i);
    }
    detail::store_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

inline std::vector<Label> decode_labels(const std::vector<unsigned char>& bytes) {
  using detail::kDatasetModule;
  detail::check_magic(bytes, "DCL1");
  if (bytes.size() < 8) throw Error(Errc::Truncated, kDatasetModule, "header needs 8 bytes", bytes.size());
  const std::uint64_t n = detail::load_u32(bytes.data() + 4);
  const std::uint64_t expected = 8 + 4 * n;
  if (bytes.size() < expected) {
    throw Error(Errc::Truncated, kDatasetModule,
                "payload needs " + std::to_string(expected) + " bytes", bytes.size());
  }
  if (bytes.size() > expected) {
    throw Error(Errc::TrailingData, kDatasetModule, "bytes after payload", expected);
  }
  std::vector<Label> labels(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t offset = 8 + 4 * i;
    labels[i] = std::bit_cast<std::int32_t>(detail::load_u32(bytes.data() + offset));
    if (labels[i] < kUnknownLabel) {
      throw Error(Errc::InvalidArgument, kDatasetModule, "label below -1", offset);
    }
  }
  return labels;
}

inline std::vector<unsigned char> encode_labels(const std::vector<Label>& labels) {
  std::vector<unsigned char> out;
  out.reserve(8 + labels.size() * 4);
  for (char ch : std::string_view("DCL1")) out.push_back(static_cast<unsigned char>(ch));
  detail::store_u32(out, detail::checked_count(labels.size(), "n"));
  for (Label l : labels) {
    if (l < kUnknownLabel) {
      throw Error(Errc::InvalidArgument, detail::kDatasetModule, "label below -1");
    }
    detail::store_u32(out, std::bit_cast<std::uint32_t>(l));
  }
  return out;
}

inline EmbeddingSet read_embedding_file(const std::filesystem::path& path) {
  if (detail::is_csv(path)) return detail::read_embedding_csv(path);
  return decode_embeddings(detail::slurp(path));
}

inline void write_embedding_file(const EmbeddingSet& set, const std::filesystem::path& path) {
  if (detail::is_csv(path)) return detail::write_embedding_csv(set, path);
  detail::dump(path, encode_embeddings(set));
}

inline std::vector<Label> read_label_file(const std::filesystem::path& path) {
  if (!detail::is_csv(path)) return decode_labels(detail::slurp(path));
  auto lines = detail::read_lines(path);
  if (lines.empty()) {
    throw Error(Errc::Parse, detail::kDatasetModule, path.string() + " has no header row");
  }
  std::vector<Label> labels;
  labels.reserve(lines.size() - 1);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    labels.push_back(detail::parse_number<Label>(lines[r], "on line " + std::to_string(r + 1)));
    if (labels.back() < kUnknownLabel) {
      throw Error(Errc::InvalidArgument, detail::kDatasetModule,
                  "label below -1 on line " + std::to_string(r + 1));
    }
  }
  return labels;
}

inline void write_label_file(const std::vector<Label>& labels, const std::filesystem::path& path) {
  if (!detail::is_csv(path)) return detail::dump(path, encode_labels(labels));
  std::ostringstream out;
  out << "label\n";
  for (Label l : labels) out << l << '\n';
  std::ofstream file(path, std::ios::trunc);
  if (!file || !(file << out.str())) {
    throw Error(Errc::Io, detail::kDatasetModule, "cannot write " + path.string());
  }
}

/// Embeddings plus an optional label file.
inline EmbeddingSet load_dataset(const std::filesystem::path& embeddings,
                                 const std::filesystem::path& labels = {}) {
  EmbeddingSet set = read_embedding_file(embeddings);
  if (!labels.empty()) set.set_labels(read_label_file(labels));
  return set;
}

}  // namespace io
}  // namespace dcom
