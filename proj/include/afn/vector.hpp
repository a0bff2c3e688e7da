#pragma once

// Dense/sparse vectors over double, plus the two primitives everything else is
// built from: dot products and Euclidean distance. Accumulation always walks
// coordinates in ascending index order, so dot(a,b) and dot(b,a) round
// identically regardless of representation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace afn {

// Raised for malformed external data (files, CSV rows); the CLI maps it to
// exit code 2, while std::invalid_argument (bad parameters) maps to 1.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Vector {
 public:
  using SparseEntry = std::pair<std::uint32_t, double>;

  static Vector dense(std::vector<double> coords) {
    if (coords.empty()) throw std::invalid_argument("dense vector needs dimension >= 1");
    for (double v : coords) {
      if (!std::isfinite(v)) throw std::invalid_argument("vector coordinate not finite");
    }
    Vector v;
    v.dim_ = coords.size();
    v.dense_ = std::move(coords);
    v.is_dense_ = true;
    return v;
  }

  // Entries are canonicalized: sorted by index, duplicate indices keep the
  // last occurrence, exact zeros dropped.
  static Vector sparse(std::size_t dim, std::vector<SparseEntry> entries) {
    if (dim == 0) throw std::invalid_argument("sparse vector needs dimension >= 1");
    std::stable_sort(entries.begin(), entries.end(),
                     [](const SparseEntry& a, const SparseEntry& b) { return a.first < b.first; });
    std::vector<SparseEntry> kept;
    kept.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].first >= dim) {
        throw std::invalid_argument("sparse index " + std::to_string(entries[i].first) +
                                    " out of range for dimension " + std::to_string(dim));
      }
      if (!std::isfinite(entries[i].second)) {
        throw std::invalid_argument("vector coordinate not finite");
      }
      if (i + 1 < entries.size() && entries[i + 1].first == entries[i].first) continue;
      if (entries[i].second != 0.0) kept.push_back(entries[i]);
    }
    Vector v;
    v.dim_ = dim;
    v.sparse_ = std::move(kept);
    v.is_dense_ = false;
    return v;
  }

  bool is_dense() const { return is_dense_; }
  std::size_t dim() const { return dim_; }

  const std::vector<double>& dense_coords() const { return dense_; }
  const std::vector<SparseEntry>& sparse_entries() const { return sparse_; }

  double at(std::size_t i) const {
    if (i >= dim_) throw std::invalid_argument("coordinate index out of range");
    if (is_dense_) return dense_[i];
    auto it = std::lower_bound(sparse_.begin(), sparse_.end(), i,
                               [](const SparseEntry& e, std::size_t idx) { return e.first < idx; });
    if (it != sparse_.end() && it->first == i) return it->second;
    return 0.0;
  }

 private:
  Vector() = default;
  std::size_t dim_ = 0;
  bool is_dense_ = true;
  std::vector<double> dense_;
  std::vector<SparseEntry> sparse_;
};

namespace detail {

inline void check_same_dim(const Vector& a, const Vector& b, const char* op) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch (" +
                                std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
  }
}

inline double dot_dense_dense(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double dot_dense_sparse(const std::vector<double>& d,
                               const std::vector<Vector::SparseEntry>& s) {
  double acc = 0.0;
  for (const auto& [idx, val] : s) acc += d[idx] * val;
  return acc;
}

inline double dot_sparse_sparse(const std::vector<Vector::SparseEntry>& a,
                                const std::vector<Vector::SparseEntry>& b) {
  double acc = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first < b[j].first) {
      ++i;
    } else if (b[j].first < a[i].first) {
      ++j;
    } else {
      acc += a[i].second * b[j].second;
      ++i;
      ++j;
    }
  }
  return acc;
}

}  // namespace detail

inline double dot(const Vector& a, const Vector& b) {
  detail::check_same_dim(a, b, "dot");
  if (a.is_dense() && b.is_dense()) return detail::dot_dense_dense(a.dense_coords(), b.dense_coords());
  if (a.is_dense()) return detail::dot_dense_sparse(a.dense_coords(), b.sparse_entries());
  if (b.is_dense()) return detail::dot_dense_sparse(b.dense_coords(), a.sparse_entries());
  return detail::dot_sparse_sparse(a.sparse_entries(), b.sparse_entries());
}

inline double l2_distance(const Vector& a, const Vector& b) {
  detail::check_same_dim(a, b, "l2_distance");
  double acc = 0.0;
  if (a.is_dense() && b.is_dense()) {
    const auto& x = a.dense_coords();
    const auto& y = b.dense_coords();
    for (std::size_t i = 0; i < x.size(); ++i) {
      double diff = x[i] - y[i];
      acc += diff * diff;
    }
  } else if (a.is_dense() || b.is_dense()) {
    const auto& d = (a.is_dense() ? a : b).dense_coords();
    const auto& s = (a.is_dense() ? b : a).sparse_entries();
    std::size_t j = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      double sv = 0.0;
      if (j < s.size() && s[j].first == i) {
        sv = s[j].second;
        ++j;
      }
      double diff = d[i] - sv;
      acc += diff * diff;
    }
  } else {
    const auto& x = a.sparse_entries();
    const auto& y = b.sparse_entries();
    std::size_t i = 0, j = 0;
    while (i < x.size() || j < y.size()) {
      if (j == y.size() || (i < x.size() && x[i].first < y[j].first)) {
        acc += x[i].second * x[i].second;
        ++i;
      } else if (i == x.size() || y[j].first < x[i].first) {
        acc += y[j].second * y[j].second;
        ++j;
      } else {
        double diff = x[i].second - y[j].second;
        acc += diff * diff;
        ++i;
        ++j;
      }
    }
  }
  return std::sqrt(acc);
}

inline double l2_norm(const Vector& v) { return std::sqrt(dot(v, v)); }

// A point set with implicit ids 0..n-1. Indexes hold a pointer to the dataset
// they were built over; the caller keeps it alive.
class VectorDataset {
 public:
  VectorDataset(std::size_t dim, std::vector<Vector> points) : dim_(dim), points_(std::move(points)) {
    if (dim_ == 0) throw std::invalid_argument("dataset dimension must be >= 1");
    if (points_.empty()) throw std::invalid_argument("dataset must hold at least one point");
    for (const Vector& p : points_) {
      if (p.dim() != dim_) throw std::invalid_argument("dataset point dimension mismatch");
    }
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return points_.size(); }
  const Vector& operator[](std::size_t id) const { return points_[id]; }
  const std::vector<Vector>& points() const { return points_; }

 private:
  std::size_t dim_;
  std::vector<Vector> points_;
};

}  // namespace afn
