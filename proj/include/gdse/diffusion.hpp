#pragma once

#include <cstdint>
#include <string>

#include "gdse/grid.hpp"
#include "gdse/guidance.hpp"
#include "gdse/rng.hpp"
#include "gdse/schedule.hpp"

namespace gdse {

// Which field shapes the sampling noise. The denoiser is always conditioned
// on the estimated guidance; only the noise changes between modes.
enum class GuidanceMode { anisotropic, isotropic, none };

// Standard deviation used for the prior draw x_T = y + s z.
//   paper:    s = reverse_std_coeff(T) * g
//   marginal: s = kappa * sqrt(alpha_bar_T) * g
enum class PriorStd { paper, marginal };

std::string to_string(GuidanceMode m);
GuidanceMode guidance_mode_from_string(const std::string& name);
std::string to_string(PriorStd m);
PriorStd prior_std_from_string(const std::string& name);

struct SamplerConfig {
  GuidanceMode guidance_mode = GuidanceMode::anisotropic;
  VarianceMode variance_mode = VarianceMode::paper;
  PriorStd prior_std = PriorStd::paper;
  bool noise_free = false;
  std::uint64_t seed = 0;

  bool operator==(const SamplerConfig&) const = default;
};

struct DiffusionState {
  ComplexGrid x;
  int t = 0;
};

// Estimates x0 from (x_t, y, g, t). Implementations must be deterministic
// and shape-preserving.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual ComplexGrid predict(const ComplexGrid& x_t, const ComplexGrid& y, const GuidanceField& g,
                              int t) const = 0;
};

// Field that scales the sampling noise under `cfg`: g itself, all ones
// (isotropic) or all zeros (none / noise_free). Idempotent.
GuidanceField sampling_field(const GuidanceField& g, const SamplerConfig& cfg);

// One forward step: x_t = x_{t-1} + alpha_t (y - x0) + kappa sqrt(alpha_t) g z.
ComplexGrid forward_step(const ComplexGrid& x_prev, const ComplexGrid& x0, const ComplexGrid& y,
                         const GuidanceField& g, const NoiseSchedule& sch, int t, Rng& rng);

// Direct draw from q(x_t | x0, y):
//   mean (1 - alpha_bar_t) x0 + alpha_bar_t y, variance kappa^2 alpha_bar_t g^2.
ComplexGrid forward_marginal_sample(const ComplexGrid& x0, const ComplexGrid& y, const GuidanceField& g,
                                    const NoiseSchedule& sch, int t, Rng& rng);

// Same draw with caller-supplied unit complex noise z.
ComplexGrid forward_marginal_with_noise(const ComplexGrid& x0, const ComplexGrid& y, const GuidanceField& g,
                                        const NoiseSchedule& sch, int t, const ComplexGrid& z);

double prior_std_coeff(const NoiseSchedule& sch, const SamplerConfig& cfg);

ComplexGrid sample_prior(const ComplexGrid& y, const GuidanceField& g, const NoiseSchedule& sch,
                         const SamplerConfig& cfg, Rng& rng);

// x_{t-1} = (1 - beta_t) x_t + beta_t x0_hat + reverse_std_coeff(t) g z.
ComplexGrid reverse_step(const ComplexGrid& x_t, const ComplexGrid& x0_hat, const GuidanceField& g,
                         const NoiseSchedule& sch, int t, const SamplerConfig& cfg, Rng& rng);

struct ReverseResult {
  ComplexGrid prior_state;
  ComplexGrid final_state;
  int denoiser_calls = 0;
};

// Prior draw followed by reverse steps t = T, ..., 1. `g` conditions the
// denoiser; the sampling noise uses sampling_field(g, cfg).
ReverseResult run_reverse(const ComplexGrid& y, const GuidanceField& g, const Denoiser& denoiser,
                          const NoiseSchedule& sch, const SamplerConfig& cfg, Rng& rng);

}  // namespace gdse
