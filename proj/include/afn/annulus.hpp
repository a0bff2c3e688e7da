#pragma once

// Approximate annulus query: find a point whose distance to q lies in
// [r/(c w), c w r] whenever the tighter annulus [r/w, w r] is populated.
// Structure: L hash tables under k-wide concatenated LSH keys; each bucket
// stores ell lists of (a_i.x, id) sorted descending, sharing one member set.
// A query merges the matched buckets' lists by a_i.(x - q) priority and
// distance-checks dequeued points until a hit, queue exhaustion, or the
// candidate cap.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "afn/lsh.hpp"
#include "afn/random.hpp"
#include "afn/serialize_util.hpp"
#include "afn/vector.hpp"

namespace afn {

struct AnnulusParams {
  double r = 1.0;           // annulus scale
  double w = 2.0;           // annulus width, > 1
  double c = 2.0;           // approximation factor, > 1
  std::size_t k = 1;        // atoms per concatenated hash
  std::size_t L = 1;        // table count
  std::size_t ell = 1;      // projection count
  std::size_t m = 1;        // near-point budget
  std::size_t cap = 4;      // max distance evaluations per query
  double bucket_width = 1;  // W for the hash atoms (the sensitivity's width)
};

// Parameter derivation from the sensitivity of the (w r, w c r) family:
//   k = ceil(ln n / ln(1/p2)),  L = ceil(n^rho / p1),
//   phi = n^(1/c^2) (ln n)^((1-1/c^2)/2),  ell = ceil(2 phi),
//   m = ceil(1 + e^2 ell),  cap = m + 3L.
// d is carried for completeness; the formulas are dimension-free.
inline AnnulusParams derive_params(std::size_t n, std::size_t d, double r, double w, double c,
                                   double W) {
  if (n < 2) throw std::invalid_argument("derive_params: need n >= 2");
  if (d < 1) throw std::invalid_argument("derive_params: need d >= 1");
  Sensitivity sens = sensitivity_for(r, w, c, W);
  double ln_n = std::log(static_cast<double>(n));
  AnnulusParams p;
  p.r = r;
  p.w = w;
  p.c = c;
  p.bucket_width = W;
  p.k = static_cast<std::size_t>(std::ceil(ln_n / std::log(1.0 / sens.p2)));
  p.L = static_cast<std::size_t>(
      std::ceil(std::pow(static_cast<double>(n), sens.rho) / sens.p1));
  double inv_cc = 1.0 / (c * c);
  double phi = std::pow(static_cast<double>(n), inv_cc) * std::pow(ln_n, (1.0 - inv_cc) / 2.0);
  p.ell = static_cast<std::size_t>(std::ceil(2.0 * phi));
  p.m = static_cast<std::size_t>(std::ceil(1.0 + std::exp(2.0) * static_cast<double>(p.ell)));
  p.cap = p.m + 3 * p.L;
  return p;
}

struct Bucket {
  struct Entry {
    double value;  // a_i . x
    std::uint32_t id;
  };
  // ell lists over the same member set, each sorted by value descending.
  std::vector<std::vector<Entry>> lists;
};

struct AnnulusResult {
  std::optional<std::uint32_t> id;     // empty = failed / nothing in range
  std::size_t candidates = 0;          // distance evaluations spent
  bool queue_exhausted = false;        // failed because the queue ran dry
};

class AnnulusIndex {
 public:
  // Refuse configurations whose per-query seeding alone (L*ell heads) would
  // be unreasonable; silent truncation would skew the success analysis.
  static constexpr std::size_t kMaxInitialHeads = std::size_t(1) << 22;

  static AnnulusIndex build(const VectorDataset& data, const AnnulusParams& params,
                            std::uint64_t seed) {
    if (params.k == 0 || params.L == 0 || params.ell == 0 || params.m == 0 || params.cap == 0) {
      throw std::invalid_argument("annulus build: k, L, ell, m, cap must all be >= 1");
    }
    if (!(params.r > 0.0) || !(params.w > 1.0) || !(params.c > 1.0) ||
        !(params.bucket_width > 0.0)) {
      throw std::invalid_argument("annulus build: need r > 0, w > 1, c > 1, bucket_width > 0");
    }
    if (params.L * params.ell > kMaxInitialHeads) {
      throw std::invalid_argument("annulus build: L*ell exceeds the head budget, refusing");
    }
    AnnulusIndex idx;
    idx.params_ = params;
    idx.data_ = &data;
    idx.seed_ = seed;

    Rng rng(derive_stream(seed, 0));
    idx.hashes_.reserve(params.L);
    for (std::size_t j = 0; j < params.L; ++j) {
      idx.hashes_.push_back(
          sample_concatenated_hash(params.k, data.dim(), params.bucket_width, rng));
    }
    idx.projections_.reserve(params.ell);
    for (std::size_t i = 0; i < params.ell; ++i) {
      idx.projections_.push_back(sample_gaussian_vector(data.dim(), rng));
    }

    const std::size_t n = data.size();
    std::vector<std::vector<double>> proj_values(params.ell, std::vector<double>(n));
    for (std::size_t i = 0; i < params.ell; ++i) {
      for (std::size_t x = 0; x < n; ++x) proj_values[i][x] = dot(idx.projections_[i], data[x]);
    }

    idx.tables_.resize(params.L);
    for (std::size_t j = 0; j < params.L; ++j) {
      auto& table = idx.tables_[j];
      for (std::size_t x = 0; x < n; ++x) {
        BucketKey key = hash_point(idx.hashes_[j], data[x]);
        Bucket& bucket = table[std::move(key)];
        if (bucket.lists.empty()) bucket.lists.resize(params.ell);
        for (std::size_t i = 0; i < params.ell; ++i) {
          bucket.lists[i].push_back(Bucket::Entry{proj_values[i][x], static_cast<std::uint32_t>(x)});
        }
      }
      for (auto& [key, bucket] : table) {
        for (auto& list : bucket.lists) {
          std::sort(list.begin(), list.end(), [](const Bucket::Entry& a, const Bucket::Entry& b) {
            if (a.value != b.value) return a.value > b.value;
            return a.id < b.id;
          });
        }
      }
    }
    return idx;
  }

  // priority_trace, when given, receives the priority of every dequeue in
  // order (they come out non-increasing; useful for diagnostics).
  AnnulusResult query(const Vector& q, std::vector<double>* priority_trace = nullptr) const {
    detail::check_same_dim(q, (*data_)[0], "annulus query");
    std::vector<double> proj_q(params_.ell);
    for (std::size_t i = 0; i < params_.ell; ++i) proj_q[i] = dot(projections_[i], q);

    struct HeapItem {
      double priority;
      std::uint32_t table;
      std::uint32_t list;
      std::uint32_t pos;
      const Bucket* bucket;
    };
    struct HeapLess {
      bool operator()(const HeapItem& a, const HeapItem& b) const {
        if (a.priority != b.priority) return a.priority < b.priority;
        if (a.table != b.table) return a.table > b.table;
        if (a.list != b.list) return a.list > b.list;
        return a.bucket->lists[a.list][a.pos].id > b.bucket->lists[b.list][b.pos].id;
      }
    };
    std::priority_queue<HeapItem, std::vector<HeapItem>, HeapLess> heap;

    for (std::size_t j = 0; j < params_.L; ++j) {
      BucketKey key = hash_point(hashes_[j], q);
      auto it = tables_[j].find(key);
      if (it == tables_[j].end()) continue;
      const Bucket& bucket = it->second;
      for (std::size_t i = 0; i < params_.ell; ++i) {
        if (bucket.lists[i].empty()) continue;
        heap.push(HeapItem{bucket.lists[i][0].value - proj_q[i], static_cast<std::uint32_t>(j),
                           static_cast<std::uint32_t>(i), 0, &bucket});
      }
    }

    const double lo = params_.r / (params_.c * params_.w);
    const double hi = params_.c * params_.w * params_.r;
    AnnulusResult result;
    while (!heap.empty()) {
      HeapItem top = heap.top();
      heap.pop();
      if (priority_trace != nullptr) priority_trace->push_back(top.priority);
      const auto& entry = top.bucket->lists[top.list][top.pos];
      // Every dequeue spends cap budget, even for a point already seen via
      // another (bucket, list): candidates counts dequeues, not distinct ids.
      ++result.candidates;
      double dist = l2_distance(q, (*data_)[entry.id]);
      if (dist >= lo && dist <= hi) {
        result.id = entry.id;
        return result;
      }
      if (result.candidates >= params_.cap) return result;
      std::uint32_t next = top.pos + 1;
      if (next < top.bucket->lists[top.list].size()) {
        heap.push(HeapItem{top.bucket->lists[top.list][next].value - proj_q[top.list], top.table,
                           top.list, next, top.bucket});
      }
    }
    result.queue_exhausted = true;
    return result;
  }

  const AnnulusParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<ConcatenatedHash>& hashes() const { return hashes_; }
  const std::vector<Vector>& projections() const { return projections_; }
  const std::vector<std::unordered_map<BucketKey, Bucket, BucketKeyHash>>& tables() const {
    return tables_;
  }
  const VectorDataset& dataset() const { return *data_; }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "afn-annulus-index 1\n";
    out << io::fmt(params_.r) << ' ' << io::fmt(params_.w) << ' ' << io::fmt(params_.c) << ' '
        << params_.k << ' ' << params_.L << ' ' << params_.ell << ' ' << params_.m << ' '
        << params_.cap << ' ' << io::fmt(params_.bucket_width) << ' ' << seed_ << ' '
        << data_->dim() << '\n';
    for (const ConcatenatedHash& g : hashes_) {
      for (const HashAtom& atom : g.atoms) {
        const auto& c = atom.direction.dense_coords();
        for (std::size_t i = 0; i < c.size(); ++i) out << (i ? " " : "") << io::fmt(c[i]);
        out << ' ' << io::fmt(atom.offset) << '\n';
      }
    }
    for (const Vector& p : projections_) {
      const auto& c = p.dense_coords();
      for (std::size_t i = 0; i < c.size(); ++i) out << (i ? " " : "") << io::fmt(c[i]);
      out << '\n';
    }
    // Buckets serialize in lexicographic key order so equal indexes produce
    // identical bytes regardless of hash-map iteration order.
    for (const auto& table : tables_) {
      std::vector<const BucketKey*> keys;
      keys.reserve(table.size());
      for (const auto& [key, bucket] : table) keys.push_back(&key);
      std::sort(keys.begin(), keys.end(),
                [](const BucketKey* a, const BucketKey* b) { return *a < *b; });
      out << keys.size() << '\n';
      for (const BucketKey* key : keys) {
        const Bucket& bucket = table.at(*key);
        for (std::size_t i = 0; i < key->size(); ++i) out << (i ? " " : "") << (*key)[i];
        out << ' ' << bucket.lists[0].size() << '\n';
        for (const auto& list : bucket.lists) {
          for (std::size_t i = 0; i < list.size(); ++i) {
            out << (i ? " " : "") << io::fmt(list[i].value) << ' ' << list[i].id;
          }
          out << '\n';
        }
      }
    }
    if (!out) throw DataError("write failed: " + path);
  }

  static AnnulusIndex load(const std::string& path, const VectorDataset& data) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "afn-annulus-index" || version != 1) {
      throw DataError("not an annulus index file: " + path);
    }
    AnnulusIndex idx;
    idx.data_ = &data;
    std::size_t dim = 0;
    in >> idx.params_.r >> idx.params_.w >> idx.params_.c >> idx.params_.k >> idx.params_.L >>
        idx.params_.ell >> idx.params_.m >> idx.params_.cap >> idx.params_.bucket_width >>
        idx.seed_ >> dim;
    if (!in || dim != data.dim()) throw DataError("index/dataset dimension mismatch: " + path);
    idx.hashes_.resize(idx.params_.L);
    for (auto& g : idx.hashes_) {
      g.atoms.reserve(idx.params_.k);
      for (std::size_t a = 0; a < idx.params_.k; ++a) {
        std::vector<double> coords(dim);
        for (double& v : coords) in >> v;
        double offset = 0;
        in >> offset;
        if (!in) throw DataError("truncated hash table spec: " + path);
        g.atoms.push_back(HashAtom{Vector::dense(std::move(coords)), offset, idx.params_.bucket_width});
      }
    }
    idx.projections_.reserve(idx.params_.ell);
    for (std::size_t i = 0; i < idx.params_.ell; ++i) {
      std::vector<double> coords(dim);
      for (double& v : coords) in >> v;
      if (!in) throw DataError("truncated projection table: " + path);
      idx.projections_.push_back(Vector::dense(std::move(coords)));
    }
    idx.tables_.resize(idx.params_.L);
    for (auto& table : idx.tables_) {
      std::size_t buckets = 0;
      in >> buckets;
      if (!in) throw DataError("truncated bucket table: " + path);
      for (std::size_t b = 0; b < buckets; ++b) {
        BucketKey key(idx.params_.k);
        for (auto& v : key) in >> v;
        std::size_t members = 0;
        in >> members;
        if (!in || members == 0 || members > data.size()) {
          throw DataError("bad bucket spec: " + path);
        }
        Bucket bucket;
        bucket.lists.assign(idx.params_.ell, {});
        for (auto& list : bucket.lists) {
          list.resize(members);
          for (auto& e : list) {
            in >> e.value >> e.id;
            if (!in || e.id >= data.size()) throw DataError("bad bucket entry: " + path);
          }
        }
        table.emplace(std::move(key), std::move(bucket));
      }
    }
    return idx;
  }

 private:
  AnnulusIndex() = default;

  AnnulusParams params_;
  std::uint64_t seed_ = 0;
  std::vector<ConcatenatedHash> hashes_;
  std::vector<Vector> projections_;
  std::vector<std::unordered_map<BucketKey, Bucket, BucketKeyHash>> tables_;
  const VectorDataset* data_ = nullptr;
};

}  // namespace afn
