#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace gdse {

// Seeded generator threaded explicitly through every stochastic operation.
// split() derives an independent child stream from the construction seed
// and a stream id, without touching the parent's state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  Rng split(std::uint64_t stream) const;

  double normal();
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  std::uint64_t below(std::uint64_t n);   // {0, ..., n-1}

  // Circularly-symmetric unit-variance complex normal: real and imaginary
  // parts are independent N(0, 1/2).
  std::complex<double> complex_normal();

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace gdse
