#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "afn/datasets.hpp"
#include "afn/vector.hpp"

using afn::GeneratorKind;
using afn::GeneratorSpec;
using afn::Vector;
using afn::VectorDataset;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out);
  out << content;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct TempFile {
  std::string path;
  explicit TempFile(std::string p) : path(std::move(p)) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("uniform generator stays in [0, 1) with the right mean") {
  auto data = afn::generate({GeneratorKind::uniform_cube, 20000, 3, 5});
  REQUIRE(data.size() == 20000);
  REQUIRE(data.dim() == 3);
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double v = data[i].at(j);
      REQUIRE(v >= 0.0);
      REQUIRE(v < 1.0);
      sum += v;
    }
  }
  REQUIRE_THAT(sum / (20000.0 * 3.0), WithinAbs(0.5, 0.02));
}

TEST_CASE("normal generator has the right per-coordinate moments") {
  auto data = afn::generate({GeneratorKind::multivariate_normal, 100000, 2, 9});
  for (std::size_t j = 0; j < 2; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) mean += data[i].at(j);
    mean /= static_cast<double>(data.size());
    REQUIRE_THAT(mean, WithinAbs(0.0, 0.02));
    double var = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      var += (data[i].at(j) - mean) * (data[i].at(j) - mean);
    }
    var /= static_cast<double>(data.size());
    REQUIRE_THAT(var, WithinAbs(1.0, 0.05));
  }
}

TEST_CASE("generation is a pure function of (kind, n, d, seed)") {
  GeneratorSpec spec{GeneratorKind::multivariate_normal, 50, 4, 77};
  auto a = afn::generate(spec);
  auto b = afn::generate(spec);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < 4; ++j) REQUIRE(a[i].at(j) == b[i].at(j));
  }
  spec.seed = 78;
  auto c = afn::generate(spec);
  bool differs = false;
  for (std::size_t i = 0; i < a.size() && !differs; ++i) {
    for (std::size_t j = 0; j < 4 && !differs; ++j) differs = a[i].at(j) != c[i].at(j);
  }
  REQUIRE(differs);
  CHECK_THROWS_AS(afn::generate({GeneratorKind::uniform_cube, 0, 3, 1}), std::invalid_argument);
  CHECK_THROWS_AS(afn::generate({GeneratorKind::uniform_cube, 3, 0, 1}), std::invalid_argument);
}

TEST_CASE("two plain rows load as two points") {
  TempFile f("test_ds_plain.txt");
  write_file(f.path, "1 2\n3 4\n");
  auto data = afn::load_vectors(f.path);
  REQUIRE(data.size() == 2);
  REQUIRE(data.dim() == 2);
  REQUIRE(data[0].at(0) == 1.0);
  REQUIRE(data[0].at(1) == 2.0);
  REQUIRE(data[1].at(0) == 3.0);
  REQUIRE(data[1].at(1) == 4.0);
}

TEST_CASE("a consistent count line is consumed as a header") {
  TempFile f("test_ds_header.txt");
  write_file(f.path, "2 2\n1 2\n3 4\n");
  auto data = afn::load_vectors(f.path);
  REQUIRE(data.size() == 2);
  REQUIRE(data.dim() == 2);
  REQUIRE(data[0].at(0) == 1.0);
  REQUIRE(data[1].at(1) == 4.0);
}

TEST_CASE("a count line that does not match the remaining rows is data") {
  TempFile f("test_ds_not_header.txt");
  write_file(f.path, "10 20\n30 40\n");  // claims 10 rows, only 1 follows
  auto data = afn::load_vectors(f.path);
  REQUIRE(data.size() == 2);
  REQUIRE(data[0].at(0) == 10.0);
  REQUIRE(data[1].at(1) == 40.0);
}

TEST_CASE("header detection needs matching widths everywhere") {
  TempFile f("test_ds_width.txt");
  // Second row too short for d = 3, so the header interpretation is dropped
  // and the file reparses as raw 2-wide rows — failing on the 3-wide line.
  write_file(f.path, "2 3\n1 2 3\n4 5\n");
  CHECK_THROWS_WITH(afn::load_vectors(f.path),
                    ContainsSubstring("line 2") && ContainsSubstring("expected 2 values, got 3"));
}

TEST_CASE("ragged rows report their line number") {
  TempFile f("test_ds_ragged.txt");
  write_file(f.path, "1 2\n3\n");
  CHECK_THROWS_WITH(afn::load_vectors(f.path),
                    ContainsSubstring("line 2") && ContainsSubstring("expected 2"));
}

TEST_CASE("bad numbers report line and column") {
  TempFile f("test_ds_badnum.txt");
  write_file(f.path, "1 2\nx 4\n");
  CHECK_THROWS_WITH(afn::load_vectors(f.path),
                    ContainsSubstring("line 2") && ContainsSubstring("column 1") &&
                        ContainsSubstring("'x'"));
}

TEST_CASE("empty and blank-only files are rejected") {
  TempFile f("test_ds_empty.txt");
  write_file(f.path, "");
  CHECK_THROWS_WITH(afn::load_vectors(f.path), ContainsSubstring("empty"));
  write_file(f.path, "\n   \n\n");
  CHECK_THROWS_WITH(afn::load_vectors(f.path), ContainsSubstring("empty"));
}

TEST_CASE("blank lines between rows are skipped; CRLF is tolerated") {
  TempFile f("test_ds_blank.txt");
  write_file(f.path, "1 2\r\n\r\n3 4\r\n");
  auto data = afn::load_vectors(f.path);
  REQUIRE(data.size() == 2);
  REQUIRE(data[1].at(0) == 3.0);
}

TEST_CASE("save then load returns the exact same values") {
  TempFile f("test_ds_roundtrip.txt");

  // Multi-point: header path. Values chosen to stress %.17g round-tripping.
  VectorDataset data(3, {Vector::dense({0.1, -2.5e-300, 3e300}),
                         Vector::dense({1.0 / 3.0, -0.0, 5e-324}),
                         Vector::dense({123456789.123456789, 2.0, -7.25})});
  afn::save_vectors(data, f.path);
  auto back = afn::load_vectors(f.path);
  REQUIRE(back.size() == data.size());
  REQUIRE(back.dim() == data.dim());
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) REQUIRE(back[i].at(j) == data[i].at(j));
  }

  // Single point: headerless path. %.17g spells -1e-12 out in full.
  VectorDataset one(2, {Vector::dense({42.5, -1e-12})});
  afn::save_vectors(one, f.path);
  REQUIRE(slurp(f.path) == "42.5 -9.9999999999999998e-13\n");
  auto one_back = afn::load_vectors(f.path);
  REQUIRE(one_back.size() == 1);
  REQUIRE(one_back[0].at(0) == 42.5);
  REQUIRE(one_back[0].at(1) == -1e-12);

  // Data whose first row could be mistaken for a header still round-trips,
  // because saving n >= 2 points always writes a real header.
  VectorDataset tricky(2, {Vector::dense({2, 2}), Vector::dense({1, 2}),
                           Vector::dense({3, 4})});
  afn::save_vectors(tricky, f.path);
  REQUIRE(slurp(f.path) == "3 2\n2 2\n1 2\n3 4\n");
  auto tricky_back = afn::load_vectors(f.path);
  REQUIRE(tricky_back.size() == 3);
  REQUIRE(tricky_back[0].at(0) == 2.0);
}

TEST_CASE("binary container round-trips dense and sparse points") {
  std::vector<Vector::SparseEntry> entries;
  entries.emplace_back(1, 2.5);
  entries.emplace_back(4, -3.25);
  VectorDataset data(6, {Vector::dense({1, 2, 3, 4, 5, 6}),
                         Vector::sparse(6, std::move(entries)),
                         Vector::sparse(6, {})});
  TempFile f("test_ds_bin.afnvec");
  afn::save_vectors_binary(data, f.path);
  auto back = afn::load_vectors_binary(f.path);
  REQUIRE(back.size() == 3);
  REQUIRE(back.dim() == 6);
  REQUIRE(back[0].is_dense());
  REQUIRE_FALSE(back[1].is_dense());
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 6; ++j) REQUIRE(back[i].at(j) == data[i].at(j));
  }
  REQUIRE(back[1].sparse_entries().size() == 2);

  // The sniffing loader picks the right decoder for both formats.
  auto sniffed = afn::load_dataset(f.path);
  REQUIRE(sniffed.size() == 3);
  TempFile g("test_ds_ascii_sniff.txt");
  write_file(g.path, "5 6\n");
  auto ascii = afn::load_dataset(g.path);
  REQUIRE(ascii.size() == 1);
  REQUIRE(ascii.dim() == 2);
}

TEST_CASE("binary loader rejects junk and truncation") {
  TempFile f("test_ds_bin_bad.afnvec");
  write_file(f.path, "AFNVEC1\n");  // magic only, no counts
  CHECK_THROWS_AS(afn::load_vectors_binary(f.path), afn::DataError);
  write_file(f.path, "NOTMAGIC????");
  CHECK_THROWS_AS(afn::load_vectors_binary(f.path), afn::DataError);
}

TEST_CASE("ratings become sparse movie vectors over re-indexed users") {
  TempFile f("test_ml_basic.csv");
  write_file(f.path,
             "userId,movieId,rating,timestamp\n"
             "1,10,4.0,111\n"
             "2,10,3.5,112\n"
             "1,20,5.0,113\n");
  auto res = afn::load_movielens(f.path);
  REQUIRE(res.data.size() == 2);  // two movies
  REQUIRE(res.data.dim() == 2);   // two users
  REQUIRE(res.duplicate_ratings == 0);
  REQUIRE(res.movie_ids == std::vector<std::int64_t>{10, 20});

  // Movie 10 (internal 0): user 1 -> 4.0, user 2 -> 3.5.
  REQUIRE(res.data[0].at(0) == 4.0);
  REQUIRE(res.data[0].at(1) == 3.5);
  REQUIRE_THAT(afn::l2_norm(res.data[0]), WithinAbs(std::sqrt(28.25), 1e-12));
  // Movie 20 (internal 1): rated once with 5.0, so its norm is exactly 5.
  REQUIRE(res.data[1].at(0) == 5.0);
  REQUIRE(res.data[1].at(1) == 0.0);
  REQUIRE(afn::l2_norm(res.data[1]) == 5.0);
  // Shared user 1 is the only overlap: dot = 4 * 5.
  REQUIRE(afn::dot(res.data[0], res.data[1]) == 20.0);
  REQUIRE_FALSE(res.data[0].is_dense());

  TempFile map("test_ml_map.csv");
  afn::write_movie_mapping(res, map.path);
  REQUIRE(slurp(map.path) == "internal_id,original_movieId\n0,10\n1,20\n");
}

TEST_CASE("duplicate ratings keep the last value and are counted") {
  TempFile f("test_ml_dup.csv");
  write_file(f.path,
             "userId,movieId,rating,timestamp\n"
             "1,10,4.0,1\n"
             "1,10,2.0,2\n"
             "2,10,3.0,3\n"
             "1,10,1.5,4\n");
  auto res = afn::load_movielens(f.path);
  REQUIRE(res.duplicate_ratings == 2);
  REQUIRE(res.data.size() == 1);
  REQUIRE(res.data[0].at(0) == 1.5);
  REQUIRE(res.data[0].at(1) == 3.0);
}

TEST_CASE("movielens sparse dot agrees with a densified computation") {
  TempFile f("test_ml_dot.csv");
  write_file(f.path,
             "userId,movieId,rating,timestamp\n"
             "1,100,4.0,1\n"
             "2,100,2.0,1\n"
             "3,100,1.0,1\n"
             "2,200,5.0,1\n"
             "3,200,3.0,1\n"
             "4,200,2.5,1\n");
  auto res = afn::load_movielens(f.path);
  REQUIRE(res.data.size() == 2);
  REQUIRE(res.data.dim() == 4);
  double dense_dot = 0.0;
  for (std::size_t u = 0; u < 4; ++u) dense_dot += res.data[0].at(u) * res.data[1].at(u);
  REQUIRE(afn::dot(res.data[0], res.data[1]) == dense_dot);
  REQUIRE(dense_dot == 2.0 * 5.0 + 1.0 * 3.0);
}

TEST_CASE("movielens loader tolerates a UTF-8 BOM and CRLF") {
  TempFile f("test_ml_bom.csv");
  write_file(f.path,
             "\xEF\xBB\xBFuserId,movieId,rating,timestamp\r\n"
             "7,42,3.5,99\r\n");
  auto res = afn::load_movielens(f.path);
  REQUIRE(res.data.size() == 1);
  REQUIRE(res.movie_ids == std::vector<std::int64_t>{42});
  REQUIRE(res.data[0].at(0) == 3.5);
}

TEST_CASE("movielens loader rejects malformed input with row numbers") {
  TempFile f("test_ml_bad.csv");
  write_file(f.path, "userId,movieId,rating,timestamp\n1,10,abc,1\n");
  CHECK_THROWS_WITH(afn::load_movielens(f.path),
                    ContainsSubstring("row 2") && ContainsSubstring("abc"));
  write_file(f.path, "userId,movieId,rating,timestamp\n1,10,4.0\n");
  CHECK_THROWS_WITH(afn::load_movielens(f.path), ContainsSubstring("row 2"));
  write_file(f.path, "userId,movieId,rating,timestamp\n1,10,4.0,1,9\n");
  CHECK_THROWS_WITH(afn::load_movielens(f.path), ContainsSubstring("row 2"));
  write_file(f.path, "wrong,header\n1,10,4.0,1\n");
  CHECK_THROWS_WITH(afn::load_movielens(f.path), ContainsSubstring("header"));
  write_file(f.path, "userId,movieId,rating,timestamp\n");
  CHECK_THROWS_WITH(afn::load_movielens(f.path), ContainsSubstring("no rating rows"));
}
