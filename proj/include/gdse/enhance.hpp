#pragma once

#include <cstdint>

#include "gdse/checkpoint.hpp"
#include "gdse/diffusion.hpp"
#include "gdse/guidance.hpp"
#include "gdse/spectral.hpp"

namespace gdse {

struct EnhanceResult {
  Waveform enhanced;
  Mask mask;
  ComplexSpectrogram prior_state;  // compressed
  ComplexSpectrogram final_state;  // compressed
  int steps_used = 0;
  std::uint64_t seed = 0;
};

// normalize -> stft -> compress -> mask estimate -> guidance -> reverse
// sampling -> decompress -> istft -> denormalize. Output length equals the
// input length; other sample rates are converted to the model rate and back.
EnhanceResult enhance(const Waveform& noisy, const LoadedCheckpoint& ck, const SamplerConfig& cfg);

// Same pipeline with guidance from the phase-sensitive mask of the clean
// reference instead of the estimator.
EnhanceResult enhance_with_oracle_mask(const Waveform& noisy, const Waveform& clean, const LoadedCheckpoint& ck,
                                       const SamplerConfig& cfg);

// Spectral core shared by both entry points: y is the compressed noisy
// spectrogram and `mask` drives the guidance.
ReverseResult enhance_spectrogram(const ComplexGrid& y, const Mask& mask, const Denoiser& denoiser,
                                  const NoiseSchedule& sch, const SamplerConfig& cfg);

}  // namespace gdse
