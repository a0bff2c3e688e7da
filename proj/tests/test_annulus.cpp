#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <vector>

#include "afn/annulus.hpp"
#include "afn/oracles.hpp"
#include "afn/random.hpp"
#include "afn/vector.hpp"

using afn::AnnulusIndex;
using afn::AnnulusParams;
using afn::Vector;
using afn::VectorDataset;
using Catch::Matchers::WithinRel;

namespace {

VectorDataset gaussian_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
  afn::Rng rng(seed);
  std::vector<Vector> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pts.push_back(afn::sample_gaussian_vector(d, rng));
  return VectorDataset(d, std::move(pts));
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// A single point at a chosen distance from the origin along the first axis.
Vector point_at(double distance, std::size_t d) {
  std::vector<double> coords(d, 0.0);
  coords[0] = distance;
  return Vector::dense(std::move(coords));
}

}  // namespace

TEST_CASE("derive_params frozen values") {
  auto p = afn::derive_params(10000, 2, 1.0, 2.0, 2.0, 8.0);
  CHECK(p.k == 19);
  CHECK(p.L == 79);
  CHECK(p.ell == 46);
  CHECK(p.m == 341);
  CHECK(p.cap == 578);
  CHECK(p.r == 1.0);
  CHECK(p.w == 2.0);
  CHECK(p.c == 2.0);
  CHECK(p.bucket_width == 8.0);

  auto q = afn::derive_params(10000, 8, 1.0, 2.0, 3.0, 8.0);
  CHECK(q.k == 13);
  CHECK(q.L == 19);
  CHECK(q.ell == 15);
  CHECK(q.m == 112);
  CHECK(q.cap == 169);
}

TEST_CASE("derived cap is always m + 3L") {
  for (std::size_t n : {100u, 2000u, 50000u}) {
    for (double c : {1.5, 2.0, 4.0}) {
      auto p = afn::derive_params(n, 3, 1.0, 2.0, c, 8.0);
      REQUIRE(p.cap == p.m + 3 * p.L);
      REQUIRE(p.k >= 1);
      REQUIRE(p.L >= 1);
    }
  }
}

TEST_CASE("a huge approximation factor drives the table count to ceil(1/p1)") {
  // rho -> 0 as c grows, so n^rho -> 1 and L -> ceil(1/p1).
  auto p = afn::derive_params(10000, 3, 1.0, 2.0, 1000.0, 8.0);
  double p1 = afn::collision_probability(2.0, 8.0);
  CHECK(p.L == static_cast<std::size_t>(std::ceil(1.0 / p1)));
}

TEST_CASE("derive_params validates n and d") {
  CHECK_THROWS_AS(afn::derive_params(1, 2, 1.0, 2.0, 2.0, 8.0), std::invalid_argument);
  CHECK_THROWS_AS(afn::derive_params(100, 0, 1.0, 2.0, 2.0, 8.0), std::invalid_argument);
}

TEST_CASE("build validates parameters and refuses oversized head counts") {
  auto data = gaussian_dataset(5, 2, 1);
  AnnulusParams p{1.0, 2.0, 2.0, 1, 1, 1, 1, 1, 4.0};
  for (auto* field : {&p.k, &p.L, &p.ell, &p.m, &p.cap}) {
    auto saved = *field;
    *field = 0;
    CHECK_THROWS_AS(AnnulusIndex::build(data, p, 1), std::invalid_argument);
    *field = saved;
  }
  AnnulusParams bad = p;
  bad.w = 1.0;
  CHECK_THROWS_AS(AnnulusIndex::build(data, bad, 1), std::invalid_argument);
  bad = p;
  bad.r = 0.0;
  CHECK_THROWS_AS(AnnulusIndex::build(data, bad, 1), std::invalid_argument);
  bad = p;
  bad.bucket_width = 0.0;
  CHECK_THROWS_AS(AnnulusIndex::build(data, bad, 1), std::invalid_argument);

  AnnulusParams huge = p;
  huge.L = 3000;
  huge.ell = 2000;  // 6,000,000 heads > 2^22
  CHECK_THROWS_AS(AnnulusIndex::build(data, huge, 1), std::invalid_argument);
}

TEST_CASE("identical points land in one bucket per table with id-ordered lists") {
  VectorDataset data(3, {Vector::dense({1, 2, 3}), Vector::dense({1, 2, 3}),
                         Vector::dense({1, 2, 3}), Vector::dense({1, 2, 3})});
  AnnulusParams p{1.0, 2.0, 2.0, 2, 3, 2, 4, 16, 4.0};
  auto idx = AnnulusIndex::build(data, p, 7);
  for (const auto& table : idx.tables()) {
    REQUIRE(table.size() == 1);
    const auto& bucket = table.begin()->second;
    REQUIRE(bucket.lists.size() == p.ell);
    for (const auto& list : bucket.lists) {
      REQUIRE(list.size() == 4);
      for (std::size_t i = 0; i < 4; ++i) REQUIRE(list[i].id == i);  // value ties -> id order
    }
  }
}

TEST_CASE("a singleton dataset builds L one-bucket tables") {
  VectorDataset data(2, {Vector::dense({3, 4})});
  AnnulusParams p{1.0, 2.0, 2.0, 1, 5, 2, 1, 3, 8.0};
  auto idx = AnnulusIndex::build(data, p, 11);
  REQUIRE(idx.tables().size() == 5);
  for (const auto& table : idx.tables()) {
    REQUIRE(table.size() == 1);
    for (const auto& list : table.begin()->second.lists) REQUIRE(list.size() == 1);
  }
}

TEST_CASE("every point is findable through its own hash key, values recompute") {
  auto data = gaussian_dataset(40, 3, 13);
  AnnulusParams p{1.0, 2.0, 2.0, 2, 4, 3, 5, 30, 4.0};
  auto idx = AnnulusIndex::build(data, p, 17);
  for (std::size_t j = 0; j < p.L; ++j) {
    std::size_t members_total = 0;
    for (const auto& [key, bucket] : idx.tables()[j]) {
      REQUIRE(bucket.lists.size() == p.ell);
      // All lists of a bucket cover the same id set, each sorted descending.
      std::set<std::uint32_t> base;
      for (const auto& e : bucket.lists[0]) base.insert(e.id);
      for (const auto& list : bucket.lists) {
        std::set<std::uint32_t> ids;
        for (const auto& e : list) ids.insert(e.id);
        REQUIRE(ids == base);
        for (std::size_t i = 0; i + 1 < list.size(); ++i) {
          bool ordered = list[i].value > list[i + 1].value ||
                         (list[i].value == list[i + 1].value && list[i].id < list[i + 1].id);
          REQUIRE(ordered);
        }
      }
      members_total += base.size();
    }
    REQUIRE(members_total == data.size());

    for (std::size_t x = 0; x < data.size(); ++x) {
      auto key = afn::hash_point(idx.hashes()[j], data[x]);
      auto it = idx.tables()[j].find(key);
      REQUIRE(it != idx.tables()[j].end());
      for (std::size_t i = 0; i < p.ell; ++i) {
        const auto& list = it->second.lists[i];
        auto hit = std::find_if(list.begin(), list.end(),
                                [&](const afn::Bucket::Entry& e) { return e.id == x; });
        REQUIRE(hit != list.end());
        REQUIRE_THAT(hit->value, WithinRel(afn::dot(idx.projections()[i], data[x]), 1e-12));
      }
    }
  }
}

TEST_CASE("any returned point lies inside the relaxed annulus") {
  auto data = gaussian_dataset(200, 4, 19);
  auto p = afn::derive_params(200, 4, 2.0, 2.0, 2.0, 8.0);
  auto idx = AnnulusIndex::build(data, p, 23);
  afn::Rng qrng(29);
  const double lo = p.r / (p.c * p.w), hi = p.c * p.w * p.r;
  for (std::size_t t = 0; t < 50; ++t) {
    Vector q = afn::sample_gaussian_vector(4, qrng);
    auto res = idx.query(q);
    REQUIRE(res.candidates <= p.cap);
    if (res.id) {
      double dist = afn::l2_distance(q, data[*res.id]);
      REQUIRE(dist >= lo);
      REQUIRE(dist <= hi);
    }
  }
}

TEST_CASE("nothing is returned when everything sits inside the inner radius") {
  afn::Rng rng(31);
  std::vector<Vector> pts;
  for (std::size_t i = 0; i < 60; ++i) {
    Vector u = afn::sample_unit_vector(3, rng);
    std::vector<double> coords(3);
    for (std::size_t k = 0; k < 3; ++k) coords[k] = 0.02 * u.at(k);  // far inside r/(cw) = 0.25
    pts.push_back(Vector::dense(std::move(coords)));
  }
  VectorDataset data(3, std::move(pts));
  AnnulusParams p{1.0, 2.0, 2.0, 2, 3, 2, 5, 20, 8.0};
  auto idx = AnnulusIndex::build(data, p, 37);
  auto res = idx.query(point_at(0.0, 3));
  REQUIRE_FALSE(res.id.has_value());
  REQUIRE(res.candidates <= p.cap);
}

TEST_CASE("a planted witness is found with high probability") {
  // q at the origin, the witness at distance r, everything else far outside
  // the outer radius. The structure should return the witness on almost every
  // build; demand at least half to stay noise-proof.
  const std::size_t n = 100, d = 4;
  afn::Rng rng(41);
  std::vector<Vector> pts;
  pts.push_back(point_at(1.0, d));  // id 0: the only annulus member
  for (std::size_t i = 1; i < n; ++i) {
    Vector u = afn::sample_unit_vector(d, rng);
    std::vector<double> coords(d);
    for (std::size_t k = 0; k < d; ++k) coords[k] = 13.0 * u.at(k);
    pts.push_back(Vector::dense(std::move(coords)));
  }
  VectorDataset data(d, std::move(pts));
  Vector q = point_at(0.0, d);
  auto p = afn::derive_params(n, d, 1.0, 2.0, 2.0, 8.0);
  REQUIRE(afn::brute_annulus(data, q, p.r, p.w) == 0u);

  std::size_t hits = 0, trials = 40;
  for (std::size_t t = 0; t < trials; ++t) {
    auto idx = AnnulusIndex::build(data, p, 1000 + t);
    auto res = idx.query(q);
    if (res.id) {
      REQUIRE(*res.id == 0);  // nothing else is inside even the relaxed annulus
      ++hits;
    }
  }
  REQUIRE(hits * 2 >= trials);
}

TEST_CASE("the candidate cap counts dequeues, not distinct points") {
  // One far-outside point, huge bucket width so it always shares q's bucket.
  VectorDataset data(2, {point_at(10.0, 2)});
  Vector q = point_at(0.0, 2);

  // cap = 1: the first dequeue both spends the budget and ends the query.
  AnnulusParams one{1.0, 2.0, 2.0, 1, 1, 3, 1, 1, 1e6};
  auto idx1 = AnnulusIndex::build(data, one, 43);
  auto res1 = idx1.query(q);
  REQUIRE_FALSE(res1.id.has_value());
  REQUIRE(res1.candidates == 1);
  REQUIRE_FALSE(res1.queue_exhausted);

  // Roomy cap: the same point is dequeued once per list (ell = 3 lists).
  AnnulusParams three = one;
  three.cap = 10;
  auto idx3 = AnnulusIndex::build(data, three, 43);
  auto res3 = idx3.query(q);
  REQUIRE_FALSE(res3.id.has_value());
  REQUIRE(res3.candidates == 3);
  REQUIRE(res3.queue_exhausted);

  // Two tables, one list each: one dequeue per table for the same point.
  AnnulusParams twotab{1.0, 2.0, 2.0, 1, 2, 1, 1, 10, 1e6};
  auto idx2 = AnnulusIndex::build(data, twotab, 47);
  auto res2 = idx2.query(q);
  REQUIRE_FALSE(res2.id.has_value());
  REQUIRE(res2.candidates == 2);
  REQUIRE(res2.queue_exhausted);
}

TEST_CASE("a sound point ends the query on its first dequeue") {
  VectorDataset data(2, {point_at(1.0, 2)});
  AnnulusParams p{1.0, 2.0, 2.0, 1, 1, 3, 2, 10, 1e6};
  auto idx = AnnulusIndex::build(data, p, 53);
  auto res = idx.query(point_at(0.0, 2));
  REQUIRE(res.id == 0u);
  REQUIRE(res.candidates == 1);
  REQUIRE_FALSE(res.queue_exhausted);
}

TEST_CASE("dequeue priorities never increase") {
  auto data = gaussian_dataset(60, 3, 59);
  AnnulusParams p{1.0, 2.0, 2.0, 2, 4, 3, 5, 30, 4.0};
  auto idx = AnnulusIndex::build(data, p, 61);
  afn::Rng qrng(67);
  for (std::size_t t = 0; t < 20; ++t) {
    Vector q = afn::sample_gaussian_vector(3, qrng);
    std::vector<double> trace;
    auto res = idx.query(q, &trace);
    REQUIRE(trace.size() == res.candidates);
    for (std::size_t i = 0; i + 1 < trace.size(); ++i) REQUIRE(trace[i] >= trace[i + 1]);
  }
}

TEST_CASE("annulus index serialization round-trips") {
  auto data = gaussian_dataset(30, 3, 71);
  AnnulusParams p{1.5, 2.0, 2.0, 2, 3, 2, 4, 16, 4.0};
  auto idx = AnnulusIndex::build(data, p, 73);

  std::string path = "test_annulus_rt.afn";
  idx.save(path);
  auto loaded = AnnulusIndex::load(path, data);
  std::string path2 = "test_annulus_rt2.afn";
  loaded.save(path2);
  REQUIRE(slurp(path) == slurp(path2));

  REQUIRE(loaded.params().k == p.k);
  REQUIRE(loaded.params().cap == p.cap);
  REQUIRE(loaded.seed() == idx.seed());

  afn::Rng qrng(79);
  for (std::size_t t = 0; t < 15; ++t) {
    Vector q = afn::sample_gaussian_vector(3, qrng);
    auto a = idx.query(q);
    auto b = loaded.query(q);
    REQUIRE(a.id == b.id);
    REQUIRE(a.candidates == b.candidates);
    REQUIRE(a.queue_exhausted == b.queue_exhausted);
  }

  auto other = gaussian_dataset(30, 4, 71);
  CHECK_THROWS_AS(AnnulusIndex::load(path, other), afn::DataError);
  std::remove(path.c_str());
  std::remove(path2.c_str());

  std::string junk = "test_annulus_junk.afn";
  {
    std::ofstream out(junk);
    out << "something-else 1\n";
  }
  CHECK_THROWS_AS(AnnulusIndex::load(junk, data), afn::DataError);
  std::remove(junk.c_str());
}

TEST_CASE("identical seeds build identical indexes") {
  auto data = gaussian_dataset(25, 3, 83);
  AnnulusParams p{1.0, 2.0, 2.0, 2, 2, 2, 3, 9, 4.0};
  auto a = AnnulusIndex::build(data, p, 89);
  auto b = AnnulusIndex::build(data, p, 89);
  std::string pa = "test_annulus_a.afn", pb = "test_annulus_b.afn";
  a.save(pa);
  b.save(pb);
  REQUIRE(slurp(pa) == slurp(pb));
  std::remove(pa.c_str());
  std::remove(pb.c_str());
}

TEST_CASE("query rejects dimension mismatches") {
  auto data = gaussian_dataset(10, 3, 97);
  AnnulusParams p{1.0, 2.0, 2.0, 1, 1, 1, 1, 4, 4.0};
  auto idx = AnnulusIndex::build(data, p, 101);
  CHECK_THROWS_AS(idx.query(Vector::dense({1, 2})), std::invalid_argument);
}
