#include "gdse/guidance.hpp"

#include <algorithm>
#include <cmath>

#include "gdse/errors.hpp"

namespace gdse {

void Mask::validate() const {
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw InvalidInputError("mask value outside [0, 1]: " + std::to_string(v));
  }
}

GuidanceField GuidanceField::uniform(std::size_t frames, std::size_t bins, double value) {
  return GuidanceField{RealGrid(frames, bins, value)};
}

namespace {

// Re(a conj(b)). One code path for numerator and denominator, so x0 == y
// yields a ratio of exactly 1.
[[gnu::noinline]] double real_dot(Complex a, Complex b) { return a.real() * b.real() + a.imag() * b.imag(); }

}  // namespace

Mask phase_sensitive_mask(const ComplexGrid& x0, const ComplexGrid& y) {
  if (!x0.same_shape(y)) throw InvalidInputError("phase_sensitive_mask: shape mismatch");
  Mask m{RealGrid(x0.frames(), x0.bins())};
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const double ymag2 = real_dot(y[i], y[i]);
    if (ymag2 == 0.0) {
      m.values[i] = 0.0;
      continue;
    }
    // cos(theta) |x0| / |y| = Re(x0 conj(y)) / |y|^2
    const double r = real_dot(x0[i], y[i]) / ymag2;
    m.values[i] = std::clamp(r, 0.0, 1.0);
  }
  return m;
}

Mask phase_sensitive_mask(const ComplexSpectrogram& x0, const ComplexSpectrogram& y) {
  if (x0.domain != y.domain) throw DomainTagError("phase_sensitive_mask: domain tags differ");
  return phase_sensitive_mask(x0.values, y.values);
}

GuidanceField guidance_from_mask(const Mask& m) {
  m.validate();
  GuidanceField g{RealGrid(m.values.frames(), m.values.bins())};
  for (std::size_t i = 0; i < m.values.size(); ++i) g.values[i] = 1.0 - m.values[i];
  return g;
}

}  // namespace gdse
