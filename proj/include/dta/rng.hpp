#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dta {

// Deterministic RNG: mt19937_64 with hand-rolled distributions, so the
// sample sequence is identical across standard libraries and platforms.
class RngState {
 public:
  explicit RngState(std::uint64_t seed = 0) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard Gumbel(0,1); u clamped away from the support boundary.
  double gumbel() {
    double u = uniform();
    if (u < 1e-10) u = 1e-10;
    if (u > 1.0 - 1e-10) u = 1.0 - 1e-10;
    return -std::log(-std::log(u));
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace dta
