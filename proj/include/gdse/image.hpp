#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gdse/checkpoint.hpp"
#include "gdse/diffusion.hpp"
#include "gdse/grid.hpp"
#include "gdse/spectral.hpp"

namespace gdse {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, top row first
};

// One pixel per bin: time runs left to right, frequency bottom to top.
// Values in [lo, hi] map through a dark-to-bright colour ramp.
Image render_grid(const RealGrid& values, double lo, double hi);

// 20 log10 |s| per bin with a floor.
RealGrid log_magnitude(const ComplexGrid& s, double floor_db = -120.0);

void write_png(const std::filesystem::path& path, const Image& img);

struct VisualizeInputs {
  Waveform noisy;
  std::optional<Waveform> clean;
  std::optional<LoadedCheckpoint> checkpoint;
  SpectralConfig spectral;  // used when no checkpoint is given
  std::uint64_t seed = 0;
  double dynamic_range_db = 60.0;
};

// Panels: noisy; clean if given; with a checkpoint also the estimated mask,
// prior states with isotropic and with mask-shaped noise, and the
// enhanced output. Returns the written paths.
std::vector<std::filesystem::path> visualize(const VisualizeInputs& in, const std::filesystem::path& out_dir);

}  // namespace gdse
