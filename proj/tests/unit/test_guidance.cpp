#include <doctest.h>

#include <cmath>

#include "gdse/errors.hpp"
#include "gdse/guidance.hpp"
#include "support/util.hpp"

using namespace gdse;

namespace {

// Textbook form: angle difference, cosine, magnitude ratio, clip.
double psm_oracle(Complex x0, Complex y) {
  if (std::abs(y) == 0.0) return 0.0;
  const double theta = std::arg(x0) - std::arg(y);
  return std::clamp(std::cos(theta) * std::abs(x0) / std::abs(y), 0.0, 1.0);
}

double single(Complex x0, Complex y) {
  ComplexGrid a(1, 1, x0), b(1, 1, y);
  return phase_sensitive_mask(a, b).values[0];
}

}  // namespace

TEST_CASE("mask spot values") {
  CHECK(single({1, 0}, {1, 0}) == 1.0);
  CHECK(single({1, 0}, {2, 0}) == 0.5);
  CHECK(single({1, 0}, {0, 1}) == 0.0);
  CHECK(single({3, 0}, {1, 0}) == 1.0);
  CHECK(single({1, 0}, {0, 0}) == 0.0);
  CHECK(single({-1, 0}, {1, 0}) == 0.0);
}

TEST_CASE("mask matches the direct complex-arithmetic oracle") {
  Rng rng(21);
  const std::size_t n = 10000;
  ComplexGrid x0(1, n), y(1, n);
  for (std::size_t i = 0; i < n; ++i) {
    x0[i] = Complex(rng.normal(), rng.normal());
    switch (i % 10) {
      case 0: y[i] = 0.0; break;                      // |y| = 0
      case 1: y[i] = x0[i]; break;                    // exactly 1
      case 2: y[i] = x0[i] * 0.5; break;              // clipped at 1
      case 3: y[i] = -x0[i]; break;                   // clipped at 0
      case 4: y[i] = x0[i] * Complex(0.0, 1.0); break;  // orthogonal
      default: y[i] = Complex(rng.normal(), rng.normal());
    }
  }
  const Mask m = phase_sensitive_mask(x0, y);
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(m.values[i] - psm_oracle(x0[i], y[i])) <= 1e-12);
  CHECK_NOTHROW(m.validate());
}

TEST_CASE("mask of identical spectrograms is exactly one") {
  Rng rng(22);
  const ComplexGrid y = gdse::testing::random_grid(20, 256, rng);
  for (double v : phase_sensitive_mask(y, y).values) CHECK(v == 1.0);
}

TEST_CASE("mask input checks") {
  CHECK_THROWS_AS(phase_sensitive_mask(ComplexGrid(2, 3), ComplexGrid(3, 2)), InvalidInputError);
  SpectralConfig cfg;
  ComplexSpectrogram a{ComplexGrid(1, 1), SpectralDomain::raw, cfg};
  ComplexSpectrogram b{ComplexGrid(1, 1), SpectralDomain::compressed, cfg};
  CHECK_THROWS_AS(phase_sensitive_mask(a, b), DomainTagError);
}

TEST_CASE("guidance is one minus the mask") {
  Mask ones{RealGrid(3, 4, 1.0)};
  for (double g : guidance_from_mask(ones).values) CHECK(g == 0.0);
  Mask zeros{RealGrid(3, 4, 0.0)};
  for (double g : guidance_from_mask(zeros).values) CHECK(g == 1.0);
  Mask q{RealGrid(1, 1, 0.25)};
  CHECK(guidance_from_mask(q).values[0] == 0.75);

  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const Mask m = gdse::testing::random_mask(5, 7, rng);
    const GuidanceField g = guidance_from_mask(m);
    for (std::size_t i = 0; i < m.values.size(); ++i) {
      CHECK(g.values[i] == 1.0 - m.values[i]);
      CHECK(1.0 - g.values[i] == m.values[i]);
    }
  }
}

TEST_CASE("out-of-range masks are rejected") {
  Mask bad{RealGrid(1, 2, 0.5)};
  bad.values[1] = 1.5;
  CHECK_THROWS_AS(guidance_from_mask(bad), InvalidInputError);
  bad.values[1] = NAN;
  CHECK_THROWS_AS(bad.validate(), InvalidInputError);
}
