#pragma once

#include <cstdint>
#include <filesystem>

#include "gdse/nets.hpp"
#include "gdse/schedule.hpp"
#include "gdse/spectral.hpp"

namespace gdse {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  NetConfig net;
  SpectralConfig spectral;
  ScheduleSettings schedule;
  int sample_rate = 16000;
  std::int64_t step = 0;
};

struct LoadedCheckpoint {
  Model model;
  CheckpointMeta meta;
};

// Binary layout: magic, version, JSON metadata, named float64 parameter
// arrays, CRC-32 of everything before it.
void save_checkpoint(const std::filesystem::path& path, const Model& model, const CheckpointMeta& meta);

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

// Also verifies that the stored spectral and schedule settings equal the
// requested ones unless `allow_mismatch` is set.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const SpectralConfig& spectral,
                                 const ScheduleSettings& schedule, bool allow_mismatch = false);

}  // namespace gdse
