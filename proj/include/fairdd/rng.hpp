#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace fairdd {

// Deterministic random source. std::mt19937_64 output is bit-exact per the
// standard; all distribution transforms are implemented here because the
// std::*_distribution classes are implementation-defined and would break the
// bitwise-reproducibility guarantees the test suite pins.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  // Uniform integer in [0, n), rejection-sampled (no modulo bias). n > 0.
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal via Box-Muller (no spare caching; draw order is pinned).
  double gaussian();
  double gaussian(double mean, double sd);

  // Gamma(shape, 1), Marsaglia-Tsang; shape > 0.
  double gamma(double shape);

  // Beta(a, b) as Gamma(a) / (Gamma(a) + Gamma(b)); a, b > 0.
  double beta(double a, double b);

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace fairdd
