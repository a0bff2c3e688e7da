#pragma once

// Euclidean locality-sensitive hashing: the Gaussian-projection atom
// h(x) = floor((a.x + b) / W) with b uniform in [0, W), concatenated k-wide
// into bucket keys. Collision probabilities have a closed form, which is what
// lets table counts be derived instead of tuned.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "afn/random.hpp"
#include "afn/vector.hpp"

namespace afn {

struct HashAtom {
  Vector direction;  // Gaussian, dataset dimension
  double offset;     // uniform in [0, W)
  double width;      // W
};

struct ConcatenatedHash {
  std::vector<HashAtom> atoms;
  std::size_t k() const { return atoms.size(); }
};

// P[h(x) == h(y)] for the atom at inter-point distance s:
//   p(s) = 1 - 2 Phi(-W/s) - (2 s / (sqrt(2 pi) W)) (1 - exp(-W^2 / (2 s^2)))
// Monotone decreasing in s; -> 1 as s -> 0 and -> 0 as s -> inf.
inline double collision_probability(double s, double W) {
  if (!(s > 0.0)) throw std::invalid_argument("collision_probability: need s > 0");
  if (!(W > 0.0)) throw std::invalid_argument("collision_probability: need W > 0");
  double ratio = W / s;
  double phi_neg = 0.5 * std::erfc(ratio / std::sqrt(2.0));  // Phi(-W/s)
  return 1.0 - 2.0 * phi_neg -
         (2.0 / (std::sqrt(2.0 * M_PI) * ratio)) * (1.0 - std::exp(-0.5 * ratio * ratio));
}

struct Sensitivity {
  double r1, r2;  // collide-within / separate-beyond distances
  double p1, p2;  // collision probability at r1 resp. r2
  double rho;     // log(1/p1) / log(1/p2)
};

// The (w r, w c r, p1, p2)-sensitive instantiation used by the annulus
// structure. rho here is the LSH exponent, not the intrinsic-dimensionality
// statistic of the same letter.
inline Sensitivity sensitivity_for(double r, double w, double c, double W) {
  if (!(r > 0.0)) throw std::invalid_argument("sensitivity_for: need r > 0");
  if (!(w > 1.0)) throw std::invalid_argument("sensitivity_for: need w > 1");
  if (!(c > 1.0)) throw std::invalid_argument("sensitivity_for: need c > 1");
  Sensitivity s;
  s.r1 = w * r;
  s.r2 = w * c * r;
  s.p1 = collision_probability(s.r1, W);
  s.p2 = collision_probability(s.r2, W);
  s.rho = std::log(1.0 / s.p1) / std::log(1.0 / s.p2);
  return s;
}

using BucketKey = std::vector<std::int64_t>;

struct BucketKeyHash {
  std::size_t operator()(const BucketKey& key) const {
    // FNV-1a over the key words; keys themselves stay exact, this only drives
    // the hash-map placement.
    std::uint64_t h = 1469598103934665603ULL;
    for (std::int64_t v : key) {
      std::uint64_t u = static_cast<std::uint64_t>(v);
      for (int byte = 0; byte < 8; ++byte) {
        h ^= (u >> (8 * byte)) & 0xFFu;
        h *= 1099511628211ULL;
      }
    }
    return static_cast<std::size_t>(h);
  }
};

inline ConcatenatedHash sample_concatenated_hash(std::size_t k, std::size_t d, double W,
                                                 Rng& rng) {
  if (k == 0) throw std::invalid_argument("sample_concatenated_hash: need k >= 1");
  ConcatenatedHash g;
  g.atoms.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    Vector dir = sample_gaussian_vector(d, rng);
    double offset = rng.uniform(0.0, W);
    g.atoms.push_back(HashAtom{std::move(dir), offset, W});
  }
  return g;
}

inline BucketKey hash_point(const ConcatenatedHash& g, const Vector& x) {
  BucketKey key;
  key.reserve(g.atoms.size());
  for (const HashAtom& atom : g.atoms) {
    detail::check_same_dim(atom.direction, x, "hash_point");
    key.push_back(static_cast<std::int64_t>(
        std::floor((dot(atom.direction, x) + atom.offset) / atom.width)));
  }
  return key;
}

}  // namespace afn
