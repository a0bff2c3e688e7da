#pragma once

// Seeded sampling with bit-stable output. The engine is std::mt19937_64 (its
// output sequence is pinned by the C++ standard), uniforms take the top 53
// bits, and normals use the Box-Muller cosine branch, consuming exactly two
// uniforms per draw. Draw k is therefore a pure function of (seed, k), and
// golden experiment outputs survive compiler/platform changes up to libm
// rounding. The method is fixed: changing it invalidates recorded outputs.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "afn/vector.hpp"

namespace afn {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// Independent stream seed for task `index` under master seed `master`.
// Two mixing rounds so that related (master, index) pairs decorrelate.
inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t index) {
  return detail::splitmix64(detail::splitmix64(master) ^ detail::splitmix64(index + 0x51ED2701FFULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal, Box-Muller cosine branch. The radical's uniform is
  // shifted into (0, 1] so the log argument is never zero.
  double normal() {
    double u = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    double v = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
  }

  // Uniform integer in [0, n), unbiased via rejection.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 engine_;
};

inline Vector sample_gaussian_vector(std::size_t d, Rng& rng) {
  if (d == 0) throw std::invalid_argument("sample_gaussian_vector: dimension must be >= 1");
  std::vector<double> coords(d);
  for (double& c : coords) c = rng.normal();
  return Vector::dense(std::move(coords));
}

// Uniform on the unit sphere: normalized Gaussian draw. An exactly-zero draw
// (probability 0, but cheap to guard) is resampled.
inline Vector sample_unit_vector(std::size_t d, Rng& rng) {
  if (d == 0) throw std::invalid_argument("sample_unit_vector: dimension must be >= 1");
  for (;;) {
    std::vector<double> coords(d);
    double norm_sq = 0.0;
    for (double& c : coords) {
      c = rng.normal();
      norm_sq += c * c;
    }
    if (norm_sq == 0.0) continue;
    double inv = 1.0 / std::sqrt(norm_sq);
    for (double& c : coords) c *= inv;
    return Vector::dense(std::move(coords));
  }
}

}  // namespace afn
