#pragma once

#include "gdse/grid.hpp"
#include "gdse/spectral.hpp"

namespace gdse {

// Per-bin speech proportion, every value in [0, 1].
struct Mask {
  RealGrid values;

  // Throws InvalidInputError if any value is non-finite or outside [0, 1].
  void validate() const;
};

// Per-bin noise guidance: the diagonal of the guidance matrix laid out on
// the time-frequency grid. Every value in [0, 1].
struct GuidanceField {
  RealGrid values;

  static GuidanceField uniform(std::size_t frames, std::size_t bins, double value);
};

// Truncated phase-sensitive mask clip(cos(theta) |x0| / |y|, 0, 1), where
// theta is the phase difference between x0 and y. Bins with |y| = 0 get 0.
Mask phase_sensitive_mask(const ComplexGrid& x0, const ComplexGrid& y);
Mask phase_sensitive_mask(const ComplexSpectrogram& x0, const ComplexSpectrogram& y);

GuidanceField guidance_from_mask(const Mask& m);

}  // namespace gdse
