#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gdse/checkpoint.hpp"
#include "gdse/config.hpp"
#include "gdse/data.hpp"
#include "gdse/spectral.hpp"

namespace gdse {

inline constexpr double kSiSnrCap = 100.0;

// Scale-invariant SNR in dB after removing each signal's mean, clamped to
// [-100, 100].
double si_snr(const Waveform& estimate, const Waveform& reference);

struct ItemRecord {
  std::string id;
  double snr_db = 0.0;
  double si_snr_noisy = 0.0;
  double si_snr_enhanced = 0.0;
  std::optional<std::string> error;  // set when the item failed; excluded from aggregates
};

struct BandAggregate {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  bool hi_inclusive = false;
  std::size_t count = 0;
  double mean_si_snr_noisy = 0.0;
  double mean_si_snr_enhanced = 0.0;
  double mean_improvement = 0.0;

  bool contains(double snr) const { return snr >= lo && (hi_inclusive ? snr <= hi : snr < hi); }
};

struct MetricReport {
  Json config_echo;
  std::vector<ItemRecord> items;
  std::vector<BandAggregate> bands;  // [-15,-5), [-5,5), [5,15]
  BandAggregate overall;
};

// Pure fold over the records.
MetricReport aggregate(std::vector<ItemRecord> items, Json config_echo = Json::object());

Json to_json(const MetricReport& r);

// Maps a noisy waveform (item `index`) to its enhanced version.
using Enhancer = std::function<Waveform(const Waveform& noisy, std::size_t index)>;

// Items are mixed at full length with seed mix_seed(seed, index). Failing
// items are recorded and the run continues.
MetricReport evaluate(const std::vector<ManifestEntry>& manifest, const Enhancer& enhancer, const DataConfig& data,
                      std::uint64_t seed, Json config_echo = Json::object());

MetricReport evaluate(const std::vector<ManifestEntry>& manifest, const LoadedCheckpoint& ck, const RunConfig& cfg);

}  // namespace gdse
