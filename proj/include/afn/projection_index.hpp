#pragma once

// Query-dependent approximate furthest neighbor. Build: draw ell Gaussian
// projection vectors a_i and keep, per projection, the m points with the
// largest a_i.x as a list sorted descending. Query: k-way merge of those
// lists by a max-heap keyed a_i.x - a_i.q, evaluating true distances until m
// distinct points have been checked.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "afn/random.hpp"
#include "afn/serialize_util.hpp"
#include "afn/vector.hpp"

namespace afn {

struct AfnParams {
  double c = 2.0;   // target approximation factor; informational for build/query
  std::size_t ell = 1;
  std::size_t m = 1;
};

// ell = ceil(2 n^(1/c^2)), m = min(n, ceil(1 + e^2 ell ln(n)^(c^2/2 - 1/3))).
// The log base is natural: the analysis that produced the formula is e-based.
// m is clamped to n because a per-projection list cannot exceed n entries.
inline AfnParams default_params(std::size_t n, double c) {
  if (n < 2) throw std::invalid_argument("default_params: need n >= 2");
  if (!(c > 1.0)) throw std::invalid_argument("default_params: need c > 1");
  double cc = c * c;
  double ell_raw = 2.0 * std::pow(static_cast<double>(n), 1.0 / cc);
  std::size_t ell = static_cast<std::size_t>(std::ceil(ell_raw));
  double m_raw = 1.0 + std::exp(2.0) * static_cast<double>(ell) *
                           std::pow(std::log(static_cast<double>(n)), cc / 2.0 - 1.0 / 3.0);
  std::size_t m = static_cast<std::size_t>(std::ceil(m_raw));
  if (m > n) m = n;
  return AfnParams{c, ell, m};
}

struct QueryResult {
  std::uint32_t point_id = 0;
  double distance = 0.0;
  std::size_t candidates_examined = 0;
};

// Test instrumentation: every key popped from the queue, in pop order.
struct QueryTrace {
  std::vector<double> dequeued_keys;
};

class ProjectionIndex {
 public:
  struct Entry {
    double value;      // a_i . x, recomputable from the dataset
    std::uint32_t id;
  };

  static ProjectionIndex build(const VectorDataset& data, const AfnParams& params,
                               std::uint64_t seed) {
    if (params.ell == 0 || params.m == 0) {
      throw std::invalid_argument("build: ell and m must be >= 1");
    }
    ProjectionIndex idx;
    idx.data_ = &data;
    idx.ell_ = params.ell;
    idx.m_ = params.m;
    idx.seed_ = seed;

    Rng rng(derive_stream(seed, 0));
    const std::size_t n = data.size();
    const std::size_t keep = std::min(params.m, n);
    idx.projections_.reserve(params.ell);
    idx.lists_.reserve(params.ell);
    std::vector<std::uint32_t> order(n);
    std::vector<double> values(n);
    for (std::size_t i = 0; i < params.ell; ++i) {
      idx.projections_.push_back(sample_gaussian_vector(data.dim(), rng));
      for (std::size_t j = 0; j < n; ++j) values[j] = dot(idx.projections_.back(), data[j]);
      std::iota(order.begin(), order.end(), 0u);
      auto better = [&values](std::uint32_t a, std::uint32_t b) {
        if (values[a] != values[b]) return values[a] > values[b];
        return a < b;
      };
      if (keep < n) {
        std::partial_sort(order.begin(), order.begin() + keep, order.end(), better);
      } else {
        std::sort(order.begin(), order.end(), better);
      }
      std::vector<Entry> list(keep);
      for (std::size_t r = 0; r < keep; ++r) list[r] = Entry{values[order[r]], order[r]};
      idx.lists_.push_back(std::move(list));
    }
    return idx;
  }

  QueryResult query(const Vector& q, QueryTrace* trace = nullptr) const {
    return run_query(q, std::nullopt, trace);
  }

  // Early-exit variant for when the furthest distance r is known: returns the
  // first candidate at distance >= r/c.
  QueryResult query_with_radius(const Vector& q, double r, double c,
                                QueryTrace* trace = nullptr) const {
    if (!(r > 0.0)) throw std::invalid_argument("query_with_radius: need r > 0");
    if (!(c > 0.0)) throw std::invalid_argument("query_with_radius: need c > 0");
    return run_query(q, r / c, trace);
  }

  std::size_t ell() const { return ell_; }
  std::size_t m() const { return m_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Vector>& projections() const { return projections_; }
  const std::vector<std::vector<Entry>>& lists() const { return lists_; }
  const VectorDataset& dataset() const { return *data_; }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "afn-projection-index 1\n";
    out << ell_ << ' ' << m_ << ' ' << seed_ << ' ' << data_->dim() << '\n';
    for (const Vector& p : projections_) {
      const auto& c = p.dense_coords();
      for (std::size_t i = 0; i < c.size(); ++i) out << (i ? " " : "") << io::fmt(c[i]);
      out << '\n';
    }
    for (const auto& list : lists_) {
      out << list.size();
      for (const Entry& e : list) out << ' ' << io::fmt(e.value) << ' ' << e.id;
      out << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
  }

  static ProjectionIndex load(const std::string& path, const VectorDataset& data) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "afn-projection-index" || version != 1) {
      throw DataError("not a projection index file: " + path);
    }
    ProjectionIndex idx;
    idx.data_ = &data;
    std::size_t dim = 0;
    in >> idx.ell_ >> idx.m_ >> idx.seed_ >> dim;
    if (!in || dim != data.dim()) throw DataError("index/dataset dimension mismatch: " + path);
    idx.projections_.reserve(idx.ell_);
    for (std::size_t i = 0; i < idx.ell_; ++i) {
      std::vector<double> coords(dim);
      for (double& v : coords) in >> v;
      if (!in) throw DataError("truncated projection table: " + path);
      idx.projections_.push_back(Vector::dense(std::move(coords)));
    }
    idx.lists_.reserve(idx.ell_);
    for (std::size_t i = 0; i < idx.ell_; ++i) {
      std::size_t len = 0;
      in >> len;
      if (!in || len > data.size()) throw DataError("bad list length: " + path);
      std::vector<Entry> list(len);
      for (Entry& e : list) {
        in >> e.value >> e.id;
        if (!in || e.id >= data.size()) throw DataError("bad list entry: " + path);
      }
      idx.lists_.push_back(std::move(list));
    }
    return idx;
  }

 private:
  ProjectionIndex() = default;

  struct HeapItem {
    double key;
    std::uint32_t list;
    std::uint32_t pos;
  };
  struct HeapLess {
    const std::vector<std::vector<Entry>>* lists;
    bool operator()(const HeapItem& a, const HeapItem& b) const {
      if (a.key != b.key) return a.key < b.key;
      if (a.list != b.list) return a.list > b.list;  // equal keys: smaller list index first
      return (*lists)[a.list][a.pos].id > (*lists)[b.list][b.pos].id;
    }
  };

  QueryResult run_query(const Vector& q, std::optional<double> stop_at,
                        QueryTrace* trace) const {
    detail::check_same_dim(q, (*data_)[0], "query");
    std::vector<double> proj_q(ell_);
    for (std::size_t i = 0; i < ell_; ++i) proj_q[i] = dot(projections_[i], q);

    HeapLess less{&lists_};
    std::priority_queue<HeapItem, std::vector<HeapItem>, HeapLess> heap(less);
    for (std::size_t i = 0; i < ell_; ++i) {
      if (!lists_[i].empty()) {
        heap.push(HeapItem{lists_[i][0].value - proj_q[i], static_cast<std::uint32_t>(i), 0});
      }
    }

    std::vector<char> seen(data_->size(), 0);
    QueryResult best;
    best.distance = -1.0;
    std::size_t evaluated = 0;
    while (evaluated < m_ && !heap.empty()) {
      HeapItem top = heap.top();
      heap.pop();
      if (trace) trace->dequeued_keys.push_back(top.key);
      std::uint32_t id = lists_[top.list][top.pos].id;
      // A point can sit in several lists; only its first dequeue costs budget
      // and triggers a distance evaluation. Repeat dequeues advance for free.
      if (!seen[id]) {
        seen[id] = 1;
        ++evaluated;
        double dist = l2_distance(q, (*data_)[id]);
        if (dist > best.distance || (dist == best.distance && id < best.point_id)) {
          best.point_id = id;
          best.distance = dist;
        }
        if (stop_at && dist >= *stop_at) break;
      }
      std::uint32_t next = top.pos + 1;
      if (next < lists_[top.list].size()) {
        heap.push(HeapItem{lists_[top.list][next].value - proj_q[top.list], top.list, next});
      }
    }
    best.candidates_examined = evaluated;
    return best;
  }

  const VectorDataset* data_ = nullptr;
  std::size_t ell_ = 0;
  std::size_t m_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<Vector> projections_;
  std::vector<std::vector<Entry>> lists_;
};

}  // namespace afn
