#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gdse/guidance.hpp"
#include "gdse/spectral.hpp"

namespace gdse {

struct ManifestEntry {
  std::filesystem::path clean_path;
  std::filesystem::path noise_path;
  double snr_lo = 0.0;  // equal bounds mean a fixed SNR
  double snr_hi = 0.0;
  std::size_t line = 0;  // 1-based source line, 0 when built in code

  bool is_range() const noexcept { return snr_lo != snr_hi; }
  void validate() const;
};

struct DataConfig {
  SpectralConfig spectral;
  int sample_rate = 16000;
  double crop_seconds = 4.0;  // <= 0 keeps the full clean clip

  void validate() const;
};

struct TrainPair {
  std::string id;
  ComplexSpectrogram x0;  // compressed
  ComplexSpectrogram y;   // compressed
  Mask oracle_mask;
  double snr_db = 0.0;
  // Time-domain parts after scaling and normalization: mixture = clean + noise.
  Waveform clean;
  Waveform noise;
  Waveform mixture;
};

// Noise gain g such that clean vs g * noise has the requested SNR. Uses the
// first clean.size() samples of noise.
double snr_gain(const Waveform& clean, const Waveform& noise, double snr_db);

// clean + g * noise[0:len(clean)].
Waveform mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db);

// CSV with header `clean_path,noise_path,snr_db`; snr_db is `x` or `lo:hi`.
// Relative paths resolve against the manifest directory.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

// Deterministic in (entry, seed): SNR draw, noise tiling and crop offsets,
// peak normalization of the mixture, compressed spectra and oracle mask.
TrainPair make_pair(const ManifestEntry& entry, std::uint64_t seed, const DataConfig& cfg);

// Same assembly from in-memory waveforms.
TrainPair make_pair(const Waveform& clean, const Waveform& noise, double snr_lo, double snr_hi,
                    std::uint64_t seed, const DataConfig& cfg, std::string id = {});

// Seeded permutation of {0, ..., n-1} for one epoch.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch);

}  // namespace gdse
