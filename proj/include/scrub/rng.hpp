#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include "scrub/types.hpp"

namespace scrub {

/// Seeded random stream with a fixed Gaussian transform (Box-Muller over
/// mt19937_64 uniforms), so outputs do not depend on the standard
/// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Derived stream for (seed, subject, run)-style substreams.
  static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    // splitmix-style mixing of the key triple
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (a + 1) +
                      0xbf58476d1ce4e5b9ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return Rng(z ^ (z >> 31));
  }

  double uniform() {
    // in (0, 1)
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Vector gaussian_vector(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = gaussian();
    return v;
  }

  Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = gaussian();
    return m;
  }

  /// Uniform integer in [0, n), rejection sampled for portability.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t r;
    do r = eng_();
    while (r >= limit);
    return r % n;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace scrub
