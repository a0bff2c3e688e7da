#pragma once

// Query-independent approximate furthest neighbor: the index is one fixed
// ranking of the points, and a query scans its first m entries, keeping the
// furthest. Three ranking strategies:
//   extremes        per-direction argmax of x.y_i over uniform unit vectors,
//                   ranked by how many directions each point won
//   max_projection  key(x) = max_i a_i.x over Gaussian projections, descending
//   min_depth       rank-based projection depth min(k, n-1-k), ascending,
//                   ties broken by how many projections achieve the minimum

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "afn/projection_index.hpp"
#include "afn/random.hpp"
#include "afn/serialize_util.hpp"
#include "afn/vector.hpp"

namespace afn {

enum class OrderStrategy { extremes, max_projection, min_depth };

inline const char* strategy_name(OrderStrategy s) {
  switch (s) {
    case OrderStrategy::extremes: return "extremes";
    case OrderStrategy::max_projection: return "max_projection";
    case OrderStrategy::min_depth: return "min_depth";
  }
  return "?";
}

struct QueryIndependentOrder {
  OrderStrategy strategy = OrderStrategy::max_projection;
  std::vector<std::uint32_t> ranked_ids;
  // Key that produced each rank: directions won (extremes), max projection
  // value (max_projection), or depth (min_depth, with depth_counts carrying
  // the tie-break count of projections achieving that depth).
  std::vector<double> keys;
  std::vector<std::uint32_t> depth_counts;
  std::size_t ell = 0;
  const VectorDataset* data = nullptr;
};

// Spherical cap covering size, gamma * cos(phi) * sin(phi)^-(d+1) * (d+1)^(3/2)
// * ln(1 + (d+1) cos^2(phi)). Angles are accepted up to arccos(1/sqrt(d)) with
// 1e-12 slack, since the boundary value itself is meaningful.
struct CoveringParams {
  double phi = 0.0;
  std::size_t d = 2;
  double gamma = 1.0;
  double c = std::numeric_limits<double>::quiet_NaN();  // set when derived from c

  // phi_c = arccos(1/c) / 2, the cap angle that makes covered directions
  // c-approximate witnesses.
  static CoveringParams for_approximation(double c, std::size_t d, double gamma = 1.0) {
    if (!(c > 1.0 && c < 2.0)) {
      throw std::invalid_argument("CoveringParams: need 1 < c < 2");
    }
    CoveringParams p;
    p.phi = 0.5 * std::acos(1.0 / c);
    p.d = d;
    p.gamma = gamma;
    p.c = c;
    return p;
  }

  static CoveringParams for_angle(double phi, std::size_t d, double gamma = 1.0) {
    CoveringParams p;
    p.phi = phi;
    p.d = d;
    p.gamma = gamma;
    return p;
  }
};

inline double covering_number(const CoveringParams& p) {
  if (p.d < 1) throw std::invalid_argument("covering_number: need d >= 1");
  double limit = std::acos(1.0 / std::sqrt(static_cast<double>(p.d)));
  if (!(p.phi > 0.0) || p.phi > limit + 1e-12) {
    throw std::invalid_argument("covering_number: phi out of (0, arccos(1/sqrt(d))]");
  }
  double dp1 = static_cast<double>(p.d) + 1.0;
  double cphi = std::cos(p.phi);
  return p.gamma * cphi * std::pow(std::sin(p.phi), -dp1) * std::pow(dp1, 1.5) *
         std::log(1.0 + dp1 * cphi * cphi);
}

struct SuggestedEll {
  std::size_t value = 1;
  bool capped = false;  // warning flag: the formula exceeded the cap
};

// ceil(2 C ln C) with C the covering number at phi_c, clamped to [1, cap].
// n does not enter the formula; it is kept so callers can pass their full
// problem description in one place.
inline SuggestedEll suggested_ell(std::size_t n, double c, std::size_t d, double gamma = 1.0,
                                  std::size_t cap = 1000000) {
  (void)n;
  if (cap == 0) throw std::invalid_argument("suggested_ell: cap must be >= 1");
  double C = covering_number(CoveringParams::for_approximation(c, d, gamma));
  double raw = 2.0 * C * std::log(C);
  SuggestedEll out;
  if (!(raw > 1.0)) {
    out.value = 1;
    return out;
  }
  if (raw > static_cast<double>(cap)) {
    out.value = cap;
    out.capped = true;
    return out;
  }
  out.value = static_cast<std::size_t>(std::ceil(raw));
  return out;
}

inline QueryIndependentOrder build_extremes(const VectorDataset& data, std::size_t ell,
                                            std::uint64_t seed) {
  if (ell == 0) throw std::invalid_argument("build_extremes: need ell >= 1");
  Rng rng(derive_stream(seed, 0));
  const std::size_t n = data.size();
  std::vector<std::uint32_t> wins(n, 0);
  for (std::size_t i = 0; i < ell; ++i) {
    Vector y = sample_unit_vector(data.dim(), rng);
    std::uint32_t arg = 0;
    double best = dot(y, data[0]);
    for (std::size_t j = 1; j < n; ++j) {
      double v = dot(y, data[j]);
      if (v > best) {
        best = v;
        arg = static_cast<std::uint32_t>(j);
      }
    }
    ++wins[arg];
  }
  QueryIndependentOrder order;
  order.strategy = OrderStrategy::extremes;
  order.ell = ell;
  order.data = &data;
  for (std::uint32_t j = 0; j < n; ++j) {
    if (wins[j] > 0) order.ranked_ids.push_back(j);
  }
  std::sort(order.ranked_ids.begin(), order.ranked_ids.end(),
            [&wins](std::uint32_t a, std::uint32_t b) {
              if (wins[a] != wins[b]) return wins[a] > wins[b];
              return a < b;
            });
  order.keys.reserve(order.ranked_ids.size());
  for (std::uint32_t id : order.ranked_ids) order.keys.push_back(static_cast<double>(wins[id]));
  return order;
}

inline QueryIndependentOrder build_max_projection(const VectorDataset& data, std::size_t ell,
                                                  std::uint64_t seed) {
  if (ell == 0) throw std::invalid_argument("build_max_projection: need ell >= 1");
  Rng rng(derive_stream(seed, 0));
  const std::size_t n = data.size();
  std::vector<double> key(n, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < ell; ++i) {
    Vector a = sample_gaussian_vector(data.dim(), rng);
    for (std::size_t j = 0; j < n; ++j) key[j] = std::max(key[j], dot(a, data[j]));
  }
  QueryIndependentOrder order;
  order.strategy = OrderStrategy::max_projection;
  order.ell = ell;
  order.data = &data;
  order.ranked_ids.resize(n);
  std::iota(order.ranked_ids.begin(), order.ranked_ids.end(), 0u);
  std::sort(order.ranked_ids.begin(), order.ranked_ids.end(),
            [&key](std::uint32_t a, std::uint32_t b) {
              if (key[a] != key[b]) return key[a] > key[b];
              return a < b;
            });
  order.keys.reserve(n);
  for (std::uint32_t id : order.ranked_ids) order.keys.push_back(key[id]);
  return order;
}

inline QueryIndependentOrder build_min_depth(const VectorDataset& data, std::size_t ell,
                                             std::uint64_t seed) {
  if (ell == 0) throw std::invalid_argument("build_min_depth: need ell >= 1");
  Rng rng(derive_stream(seed, 0));
  const std::size_t n = data.size();
  std::vector<std::uint32_t> min_depth(n, std::numeric_limits<std::uint32_t>::max());
  std::vector<std::uint32_t> count(n, 0);
  std::vector<double> values(n);
  std::vector<std::uint32_t> order_ids(n);
  for (std::size_t i = 0; i < ell; ++i) {
    Vector a = sample_gaussian_vector(data.dim(), rng);
    for (std::size_t j = 0; j < n; ++j) values[j] = dot(a, data[j]);
    std::iota(order_ids.begin(), order_ids.end(), 0u);
    // Equal projection values resolve by id before ranks are assigned.
    std::sort(order_ids.begin(), order_ids.end(), [&values](std::uint32_t a_, std::uint32_t b_) {
      if (values[a_] != values[b_]) return values[a_] > values[b_];
      return a_ < b_;
    });
    for (std::size_t k = 0; k < n; ++k) {
      std::uint32_t id = order_ids[k];
      std::uint32_t depth = static_cast<std::uint32_t>(std::min(k, n - 1 - k));
      if (depth < min_depth[id]) {
        min_depth[id] = depth;
        count[id] = 1;
      } else if (depth == min_depth[id]) {
        ++count[id];
      }
    }
  }
  QueryIndependentOrder order;
  order.strategy = OrderStrategy::min_depth;
  order.ell = ell;
  order.data = &data;
  order.ranked_ids.resize(n);
  std::iota(order.ranked_ids.begin(), order.ranked_ids.end(), 0u);
  std::sort(order.ranked_ids.begin(), order.ranked_ids.end(),
            [&](std::uint32_t a, std::uint32_t b) {
              if (min_depth[a] != min_depth[b]) return min_depth[a] < min_depth[b];
              if (count[a] != count[b]) return count[a] > count[b];
              return a < b;
            });
  order.keys.reserve(n);
  order.depth_counts.reserve(n);
  for (std::uint32_t id : order.ranked_ids) {
    order.keys.push_back(static_cast<double>(min_depth[id]));
    order.depth_counts.push_back(count[id]);
  }
  return order;
}

// Scan the first min(m, |ranked_ids|) points, return the furthest from q
// (distance ties toward the smaller id). candidates_examined is the scan
// length, which makes resuming cheap: pass the previous result back with a
// larger m and only new positions are visited.
inline QueryResult query_prefix(const QueryIndependentOrder& order, const Vector& q,
                                std::size_t m) {
  if (m == 0) throw std::invalid_argument("query_prefix: need m >= 1");
  if (order.ranked_ids.empty()) throw std::invalid_argument("query_prefix: empty order");
  QueryResult best;
  best.distance = -1.0;
  std::size_t end = std::min(m, order.ranked_ids.size());
  for (std::size_t r = 0; r < end; ++r) {
    std::uint32_t id = order.ranked_ids[r];
    double dist = l2_distance(q, (*order.data)[id]);
    if (dist > best.distance || (dist == best.distance && id < best.point_id)) {
      best.point_id = id;
      best.distance = dist;
    }
  }
  best.candidates_examined = end;
  return best;
}

inline QueryResult query_prefix_resume(const QueryIndependentOrder& order, const Vector& q,
                                       const QueryResult& prev, std::size_t m) {
  if (m == 0) throw std::invalid_argument("query_prefix_resume: need m >= 1");
  if (order.ranked_ids.empty()) throw std::invalid_argument("query_prefix_resume: empty order");
  QueryResult best = prev;
  std::size_t end = std::min(m, order.ranked_ids.size());
  for (std::size_t r = prev.candidates_examined; r < end; ++r) {
    std::uint32_t id = order.ranked_ids[r];
    double dist = l2_distance(q, (*order.data)[id]);
    if (dist > best.distance || (dist == best.distance && id < best.point_id)) {
      best.point_id = id;
      best.distance = dist;
    }
  }
  best.candidates_examined = std::max(prev.candidates_examined, end);
  return best;
}

inline void save_order(const QueryIndependentOrder& order, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "afn-order 1\n";
  out << strategy_name(order.strategy) << ' ' << order.ell << ' ' << order.ranked_ids.size()
      << '\n';
  for (std::size_t i = 0; i < order.ranked_ids.size(); ++i) {
    out << order.ranked_ids[i] << ' ' << io::fmt(order.keys[i]);
    if (order.strategy == OrderStrategy::min_depth) out << ' ' << order.depth_counts[i];
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

inline QueryIndependentOrder load_order(const std::string& path, const VectorDataset& data) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  std::string magic, strat;
  int version = 0;
  in >> magic >> version >> strat;
  if (magic != "afn-order" || version != 1) throw DataError("not an order file: " + path);
  QueryIndependentOrder order;
  if (strat == "extremes") {
    order.strategy = OrderStrategy::extremes;
  } else if (strat == "max_projection") {
    order.strategy = OrderStrategy::max_projection;
  } else if (strat == "min_depth") {
    order.strategy = OrderStrategy::min_depth;
  } else {
    throw DataError("unknown strategy in " + path);
  }
  std::size_t count = 0;
  in >> order.ell >> count;
  if (!in || count == 0 || count > data.size()) throw DataError("bad order size: " + path);
  order.data = &data;
  order.ranked_ids.resize(count);
  order.keys.resize(count);
  if (order.strategy == OrderStrategy::min_depth) order.depth_counts.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    in >> order.ranked_ids[i] >> order.keys[i];
    if (order.strategy == OrderStrategy::min_depth) in >> order.depth_counts[i];
    if (!in || order.ranked_ids[i] >= data.size()) throw DataError("bad order entry: " + path);
  }
  return order;
}

}  // namespace afn
