#pragma once

// Brute-force oracles and analysis helpers: exact furthest neighbor, exact
// annulus membership, the intrinsic-dimensionality statistic mu^2/(2 sigma^2)
// over sampled pairwise distances, and the projection-threshold root t with
// its Monte Carlo tail check.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "afn/random.hpp"
#include "afn/vector.hpp"

namespace afn {

struct BruteResult {
  std::uint32_t point_id = 0;
  double distance = 0.0;
};

inline BruteResult brute_furthest(const VectorDataset& data, const Vector& q) {
  detail::check_same_dim(q, data[0], "brute_furthest");
  BruteResult best{0, l2_distance(q, data[0])};
  for (std::size_t j = 1; j < data.size(); ++j) {
    double dist = l2_distance(q, data[j]);
    if (dist > best.distance) {
      best.point_id = static_cast<std::uint32_t>(j);
      best.distance = dist;
    }
  }
  return best;
}

// Smallest id with distance in [r/w, w r], or empty.
inline std::optional<std::uint32_t> brute_annulus(const VectorDataset& data, const Vector& q,
                                                  double r, double w) {
  if (!(r > 0.0)) throw std::invalid_argument("brute_annulus: need r > 0");
  if (!(w > 1.0)) throw std::invalid_argument("brute_annulus: need w > 1");
  detail::check_same_dim(q, data[0], "brute_annulus");
  for (std::size_t j = 0; j < data.size(); ++j) {
    double dist = l2_distance(q, data[j]);
    if (dist >= r / w && dist <= w * r) return static_cast<std::uint32_t>(j);
  }
  return std::nullopt;
}

// Intrinsic dimensionality: mean and (population) variance of the distance
// between `sample_pairs` uniformly drawn unordered point pairs.
inline double rho_statistic(const VectorDataset& data, std::size_t sample_pairs,
                            std::uint64_t seed) {
  if (data.size() < 2) throw std::invalid_argument("rho_statistic: need n >= 2");
  if (sample_pairs < 1) throw std::invalid_argument("rho_statistic: need sample_pairs >= 1");
  Rng rng(derive_stream(seed, 0));
  std::vector<double> dists;
  dists.reserve(sample_pairs);
  for (std::size_t s = 0; s < sample_pairs; ++s) {
    std::uint64_t i = rng.uniform_index(data.size());
    std::uint64_t j = rng.uniform_index(data.size() - 1);
    if (j >= i) ++j;
    dists.push_back(l2_distance(data[i], data[j]));
  }
  double mean = 0.0;
  for (double d : dists) mean += d;
  mean /= static_cast<double>(dists.size());
  double var = 0.0;
  for (double d : dists) var += (d - mean) * (d - mean);
  var /= static_cast<double>(dists.size());
  if (var == 0.0) throw DataError("rho_statistic: degenerate sample, all distances equal");
  return mean * mean / (2.0 * var);
}

// Unique root t > 1 of e^(t^2/2) t^(c^2) = n / (2 pi)^(c^2/2), solved in log
// space by bisection. The left side is increasing for t >= 1, so a sign
// change over [1, 10 sqrt(ln n)] brackets the root; absent one, the root
// (if any) lies at t <= 1 and we refuse.
inline double solve_t(std::size_t n, double c) {
  if (n < 3) throw std::invalid_argument("solve_t: need n >= 3");
  if (!(c > 1.0)) throw std::invalid_argument("solve_t: need c > 1");
  const double cc = c * c;
  const double target = std::log(static_cast<double>(n)) - 0.5 * cc * std::log(2.0 * M_PI);
  auto f = [cc, target](double t) { return 0.5 * t * t + cc * std::log(t) - target; };
  double lo = 1.0;
  double hi = 10.0 * std::sqrt(std::log(static_cast<double>(n)));
  if (!(f(lo) < 0.0) || !(f(hi) > 0.0)) {
    throw std::invalid_argument("solve_t: no root bracket in [1, 10 sqrt(ln n)]");
  }
  while (hi - lo > 1e-10) {
    double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct TailCheckReport {
  std::size_t n = 0;
  double c = 0.0;
  double t = 0.0;        // root of the threshold equation
  double delta = 0.0;    // r t / c with r = 1
  double epsilon = 0.0;  // relative pullback of the near point from r/c
  std::size_t trials = 0;
  double far_rate = 0.0;    // empirical P[a.(p - q) >= delta], |p - q| = 1
  double near_rate = 0.0;   // empirical P[a.(p' - q) >= delta], |p' - q| = (1 - eps)/c
  double far_bound = 0.0;   // n^(-1/c^2), the guaranteed lower bound's scale
  double near_bound = 0.0;  // (ln n)^(c^2/2 - 1/3) / n
};

// Monte Carlo check of the projection-tail bounds behind the candidate-list
// analysis: q at the origin, p on the unit sphere (r = 1), p' at distance
// (1 - epsilon)/c. epsilon is pinned at 0.05: the near bound only covers
// points strictly inside radius r/c, and at epsilon -> 0 the true tail rate
// exceeds the finite-n bound (the analysis absorbs that gap asymptotically).
inline TailCheckReport lemma3_montecarlo(std::size_t n, double c, std::size_t trials,
                                         std::uint64_t seed) {
  if (trials < 10000) throw std::invalid_argument("lemma3_montecarlo: need trials >= 10^4");
  constexpr double kEpsilon = 0.05;
  constexpr std::size_t kDim = 3;

  TailCheckReport report;
  report.n = n;
  report.c = c;
  report.t = solve_t(n, c);
  report.delta = report.t / c;
  report.epsilon = kEpsilon;
  report.trials = trials;
  const double cc = c * c;
  report.far_bound = std::pow(static_cast<double>(n), -1.0 / cc);
  report.near_bound =
      std::pow(std::log(static_cast<double>(n)), cc / 2.0 - 1.0 / 3.0) / static_cast<double>(n);

  // p - q is a fixed unit vector and p' - q the same direction scaled down;
  // the Gaussian is sampled in kDim and projected with real dot products
  // rather than collapsing the statement to one dimension analytically.
  std::vector<double> far_diff(kDim, 0.0), near_diff(kDim, 0.0);
  far_diff[0] = 1.0;
  near_diff[0] = (1.0 - kEpsilon) / c;
  Rng rng(derive_stream(seed, 0));
  std::size_t far_hits = 0, near_hits = 0;
  std::vector<double> a(kDim);
  for (std::size_t s = 0; s < trials; ++s) {
    for (double& v : a) v = rng.normal();
    double proj_far = 0.0, proj_near = 0.0;
    for (std::size_t i = 0; i < kDim; ++i) {
      proj_far += a[i] * far_diff[i];
      proj_near += a[i] * near_diff[i];
    }
    if (proj_far >= report.delta) ++far_hits;
    if (proj_near >= report.delta) ++near_hits;
  }
  report.far_rate = static_cast<double>(far_hits) / static_cast<double>(trials);
  report.near_rate = static_cast<double>(near_hits) / static_cast<double>(trials);
  return report;
}

}  // namespace afn
