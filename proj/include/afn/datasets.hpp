#pragma once

// Dataset generation and file ingestion.
//
// ascii-vectors: UTF-8 text, one vector per line, whitespace-separated
// decimals, LF or CRLF. An optional first line "n d" (two nonnegative
// integers) is treated as a header iff n >= 2, exactly n lines follow, and
// each has d tokens; otherwise the whole file is data. save_vectors writes
// the header for n >= 2 and omits it for n == 1, which makes load(save(x))
// exact in both cases.
//
// binary container (for sparse conversions): magic "AFNVEC1\n", then
// little-endian u64 dim, u64 n, and per point u8 tag (0 dense, 1 sparse)
// followed by d f64s (dense) or u64 nnz + nnz * (u32 index, f64 value).

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "afn/random.hpp"
#include "afn/serialize_util.hpp"
#include "afn/vector.hpp"

namespace afn {

enum class GeneratorKind { uniform_cube, multivariate_normal };

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::multivariate_normal;
  std::size_t n = 1;
  std::size_t d = 1;
  std::uint64_t seed = 0;
};

inline VectorDataset generate(const GeneratorSpec& spec) {
  if (spec.n < 1 || spec.d < 1) throw std::invalid_argument("generate: need n >= 1, d >= 1");
  Rng rng(derive_stream(spec.seed, 0));
  std::vector<Vector> points;
  points.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    std::vector<double> coords(spec.d);
    for (double& c : coords) {
      c = spec.kind == GeneratorKind::uniform_cube ? rng.uniform01() : rng.normal();
    }
    points.push_back(Vector::dense(std::move(coords)));
  }
  return VectorDataset(spec.d, std::move(points));
}

namespace detail {

struct Token {
  std::string text;
  std::size_t column;  // 1-based
};

inline std::vector<Token> split_ws(const std::string& line) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) break;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    tokens.push_back(Token{line.substr(start, i - start), start + 1});
  }
  return tokens;
}

inline bool parse_uint(const std::string& s, std::uint64_t& out) {
  if (s.empty()) return false;
  std::uint64_t v = 0;
  for (char ch : s) {
    if (ch < '0' || ch > '9') return false;
    if (v > (UINT64_MAX - (ch - '0')) / 10) return false;
    v = v * 10 + (ch - '0');
  }
  out = v;
  return true;
}

inline double parse_real(const Token& tok, std::size_t line_no) {
  const char* begin = tok.text.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + tok.text.size() || !std::isfinite(v)) {
    throw DataError("line " + std::to_string(line_no) + ", column " + std::to_string(tok.column) +
                    ": invalid number '" + tok.text + "'");
  }
  return v;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace detail

inline VectorDataset load_vectors(const std::string& path) {
  std::vector<std::string> raw = detail::read_lines(path);
  // Keep (line_no, tokens) for non-empty lines only; blank lines are skipped.
  std::vector<std::pair<std::size_t, std::vector<detail::Token>>> rows;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto tokens = detail::split_ws(raw[i]);
    if (!tokens.empty()) rows.emplace_back(i + 1, std::move(tokens));
  }
  if (rows.empty()) throw DataError("empty file: " + path);

  std::size_t first_data = 0;
  if (rows[0].second.size() == 2) {
    std::uint64_t n = 0, d = 0;
    if (detail::parse_uint(rows[0].second[0].text, n) &&
        detail::parse_uint(rows[0].second[1].text, d) && n >= 2 && d >= 1 &&
        rows.size() - 1 == n) {
      bool shapes_match = true;
      for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].second.size() != d) {
          shapes_match = false;
          break;
        }
      }
      if (shapes_match) first_data = 1;
    }
  }

  std::size_t dim = rows[first_data].second.size();
  std::vector<Vector> points;
  points.reserve(rows.size() - first_data);
  for (std::size_t i = first_data; i < rows.size(); ++i) {
    const auto& [line_no, tokens] = rows[i];
    if (tokens.size() != dim) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                      " values, got " + std::to_string(tokens.size()));
    }
    std::vector<double> coords;
    coords.reserve(dim);
    for (const auto& tok : tokens) coords.push_back(detail::parse_real(tok, line_no));
    points.push_back(Vector::dense(std::move(coords)));
  }
  return VectorDataset(dim, std::move(points));
}

inline void save_vectors(const VectorDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  if (data.size() >= 2) out << data.size() << ' ' << data.dim() << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vector& p = data[i];
    for (std::size_t j = 0; j < data.dim(); ++j) out << (j ? " " : "") << io::fmt(p.at(j));
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

namespace detail {

inline constexpr char kBinaryMagic[8] = {'A', 'F', 'N', 'V', 'E', 'C', '1', '\n'};

template <typename T>
void write_raw(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_raw(std::ifstream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw DataError("truncated binary vector file: " + path);
  return v;
}

}  // namespace detail

inline void save_vectors_binary(const VectorDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out.write(detail::kBinaryMagic, sizeof detail::kBinaryMagic);
  detail::write_raw<std::uint64_t>(out, data.dim());
  detail::write_raw<std::uint64_t>(out, data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vector& p = data[i];
    if (p.is_dense()) {
      detail::write_raw<std::uint8_t>(out, 0);
      for (double v : p.dense_coords()) detail::write_raw(out, v);
    } else {
      detail::write_raw<std::uint8_t>(out, 1);
      detail::write_raw<std::uint64_t>(out, p.sparse_entries().size());
      for (const auto& [idx, val] : p.sparse_entries()) {
        detail::write_raw<std::uint32_t>(out, idx);
        detail::write_raw(out, val);
      }
    }
  }
  if (!out) throw DataError("write failed: " + path);
}

inline VectorDataset load_vectors_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, detail::kBinaryMagic, sizeof magic) != 0) {
    throw DataError("not a binary vector file: " + path);
  }
  auto dim = detail::read_raw<std::uint64_t>(in, path);
  auto n = detail::read_raw<std::uint64_t>(in, path);
  if (dim == 0 || n == 0) throw DataError("degenerate binary vector file: " + path);
  std::vector<Vector> points;
  points.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    auto tag = detail::read_raw<std::uint8_t>(in, path);
    if (tag == 0) {
      std::vector<double> coords(dim);
      for (double& v : coords) v = detail::read_raw<double>(in, path);
      points.push_back(Vector::dense(std::move(coords)));
    } else if (tag == 1) {
      auto nnz = detail::read_raw<std::uint64_t>(in, path);
      if (nnz > dim) throw DataError("sparse entry count exceeds dimension: " + path);
      std::vector<Vector::SparseEntry> entries;
      entries.reserve(nnz);
      for (std::uint64_t e = 0; e < nnz; ++e) {
        auto idx = detail::read_raw<std::uint32_t>(in, path);
        auto val = detail::read_raw<double>(in, path);
        entries.emplace_back(idx, val);
      }
      points.push_back(Vector::sparse(dim, std::move(entries)));
    } else {
      throw DataError("unknown point tag in binary vector file: " + path);
    }
  }
  return VectorDataset(dim, std::move(points));
}

// Sniffs the binary magic and falls back to the ascii format.
inline VectorDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  char magic[8] = {};
  in.read(magic, sizeof magic);
  bool binary = in.gcount() == 8 && std::memcmp(magic, detail::kBinaryMagic, 8) == 0;
  in.close();
  return binary ? load_vectors_binary(path) : load_vectors(path);
}

struct MovielensResult {
  VectorDataset data;              // one sparse vector per movie, d = user count
  std::vector<std::int64_t> movie_ids;  // internal id -> original movieId
  std::size_t duplicate_ratings = 0;    // (user, movie) pairs seen more than once
};

// ratings.csv rows (userId,movieId,rating,timestamp) become sparse movie
// vectors whose coordinate u is the rating by (re-indexed) user u. Ratings
// are used raw. Duplicate (user, movie) pairs keep the last value; the count
// is surfaced so callers can warn.
inline MovielensResult load_movielens(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty ratings file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  // Tolerate a UTF-8 BOM before the header.
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (line != "userId,movieId,rating,timestamp") {
    throw DataError("missing ratings header (expected userId,movieId,rating,timestamp): " + path);
  }

  std::unordered_map<std::int64_t, std::uint32_t> user_index, movie_index;
  std::vector<std::int64_t> movie_ids;
  // Per movie: user -> rating with last-write-wins.
  std::vector<std::unordered_map<std::uint32_t, double>> ratings;
  std::size_t duplicates = 0;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<std::string, 4> fields;
    std::size_t field = 0, start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (field >= 4) {
          throw DataError("row " + std::to_string(line_no) + ": expected 4 fields");
        }
        fields[field++] = line.substr(start, i - start);
        start = i + 1;
      }
    }
    if (field != 4) throw DataError("row " + std::to_string(line_no) + ": expected 4 fields");

    std::uint64_t user_raw = 0, movie_raw = 0;
    if (!detail::parse_uint(fields[0], user_raw) || !detail::parse_uint(fields[1], movie_raw)) {
      throw DataError("row " + std::to_string(line_no) + ": bad user/movie id");
    }
    const char* begin = fields[2].c_str();
    char* end = nullptr;
    double rating = std::strtod(begin, &end);
    if (end != begin + fields[2].size() || !std::isfinite(rating)) {
      throw DataError("row " + std::to_string(line_no) + ": bad rating '" + fields[2] + "'");
    }

    auto [uit, user_new] = user_index.try_emplace(static_cast<std::int64_t>(user_raw),
                                                  static_cast<std::uint32_t>(user_index.size()));
    auto [mit, movie_new] = movie_index.try_emplace(static_cast<std::int64_t>(movie_raw),
                                                    static_cast<std::uint32_t>(movie_index.size()));
    if (movie_new) {
      movie_ids.push_back(static_cast<std::int64_t>(movie_raw));
      ratings.emplace_back();
    }
    auto [rit, rating_new] = ratings[mit->second].insert_or_assign(uit->second, rating);
    if (!rating_new) ++duplicates;
  }
  if (movie_ids.empty()) throw DataError("no rating rows in " + path);

  const std::size_t d = user_index.size();
  std::vector<Vector> points;
  points.reserve(movie_ids.size());
  for (const auto& per_movie : ratings) {
    std::vector<Vector::SparseEntry> entries(per_movie.begin(), per_movie.end());
    points.push_back(Vector::sparse(d, std::move(entries)));
  }
  return MovielensResult{VectorDataset(d, std::move(points)), std::move(movie_ids), duplicates};
}

inline void write_movie_mapping(const MovielensResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "internal_id,original_movieId\n";
  for (std::size_t i = 0; i < result.movie_ids.size(); ++i) {
    out << i << ',' << result.movie_ids[i] << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace afn
