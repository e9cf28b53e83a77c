#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "gdse/diffusion.hpp"
#include "gdse/nets.hpp"
#include "gdse/schedule.hpp"
#include "gdse/spectral.hpp"

namespace gdse {

using Json = nlohmann::ordered_json;

struct TrainConfig {
  int batch_size = 15;
  double learning_rate = 1e-4;
  std::int64_t steps = 100000;
  std::uint64_t seed = 0;
  double diffusion_weight = 1.0;
  double cmen_weight = 1.0;
  std::int64_t checkpoint_every = 0;  // 0 writes only the initial and final checkpoints
  double crop_seconds = 4.0;
  int nonfinite_streak = 3;  // consecutive non-finite steps before aborting

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// Everything a run needs, defaulting to full-scale hyperparameters.
struct RunConfig {
  int sample_rate = 16000;
  SpectralConfig spectral;
  ScheduleSettings schedule;
  NetConfig net = NetConfig::paper();
  TrainConfig train;
  SamplerConfig sampler;

  void validate() const;
};

// Flat key/value view. Keys: sample_rate, fft_size, hop, window,
// comp_exponent, comp_scale, T, kappa, p, alpha_bar_1, alpha_bar_T,
// guidance_mode, variance_mode, prior_std, noise_free, seed, batch_size,
// learning_rate, steps, net_preset, crop_seconds, diffusion_weight,
// cmen_weight, checkpoint_every, nonfinite_streak.
Json to_json(const RunConfig& cfg);

// Overlays `j` on `base`. Unknown keys and wrongly-typed values raise
// ConfigError naming the key.
RunConfig apply_json(RunConfig base, const Json& j);

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

Json to_json(const SpectralConfig& c);
Json to_json(const ScheduleSettings& s);
Json to_json(const NetConfig& c);
Json to_json(const SamplerConfig& c);
SpectralConfig spectral_from_json(const Json& j);
ScheduleSettings schedule_from_json(const Json& j);
NetConfig net_from_json(const Json& j);

}  // namespace gdse
