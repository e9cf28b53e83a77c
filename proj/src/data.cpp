#include "gdse/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gdse/errors.hpp"
#include "gdse/rng.hpp"
#include "gdse/wav.hpp"

namespace gdse {

namespace {

double mean_square(const std::vector<double>& v, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += v[i] * v[i];
  return acc / static_cast<double>(n);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidInputError(where + ": bad snr_db value '" + s + "'");
  }
}

Waveform load_at_rate(const std::filesystem::path& p, int rate) {
  Waveform w = read_wav(p);
  if (w.sample_rate != rate) w = resample(w, rate);
  return w;
}

}  // namespace

void ManifestEntry::validate() const {
  if (!(snr_lo <= snr_hi)) throw InvalidInputError("manifest entry: snr range has lo > hi");
  if (!std::isfinite(snr_lo) || !std::isfinite(snr_hi)) throw InvalidInputError("manifest entry: non-finite snr");
}

void DataConfig::validate() const {
  spectral.validate();
  if (sample_rate <= 0) throw ConfigError("sample_rate", "must be positive");
  if (!std::isfinite(crop_seconds)) throw ConfigError("crop_seconds", "must be finite");
}

double snr_gain(const Waveform& clean, const Waveform& noise, double snr_db) {
  clean.validate();
  noise.validate();
  if (clean.sample_rate != noise.sample_rate) throw InvalidInputError("mix_at_snr: sample rates differ");
  if (noise.size() < clean.size()) throw InvalidInputError("mix_at_snr: noise shorter than clean");
  if (clean.samples.empty()) throw DegenerateInputError("mix_at_snr: clean is empty");
  if (!std::isfinite(snr_db)) throw InvalidInputError("mix_at_snr: non-finite snr");
  const double pc = mean_square(clean.samples, clean.size());
  const double pn = mean_square(noise.samples, clean.size());
  if (!(pc > 0.0)) throw DegenerateInputError("mix_at_snr: clean is silent");
  if (!(pn > 0.0)) throw DegenerateInputError("mix_at_snr: noise is silent");
  return std::sqrt(pc / (pn * std::pow(10.0, snr_db / 10.0)));
}

Waveform mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db) {
  const double g = snr_gain(clean, noise, snr_db);
  Waveform out = clean;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += g * noise.samples[i];
  return out;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("manifest not found: " + path.string());
  const auto base = path.parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto fields = split_csv(line);
    if (!header_seen) {
      if (fields != std::vector<std::string>{"clean_path", "noise_path", "snr_db"})
        throw InvalidInputError(where + ": expected header 'clean_path,noise_path,snr_db'");
      header_seen = true;
      continue;
    }
    if (fields.size() != 3) throw InvalidInputError(where + ": expected 3 fields, got " + std::to_string(fields.size()));
    ManifestEntry e;
    e.line = lineno;
    for (int k = 0; k < 2; ++k) {
      if (fields[k].empty()) throw InvalidInputError(where + ": empty path");
      std::filesystem::path p(fields[k]);
      if (p.is_relative()) p = base / p;
      if (!std::filesystem::is_regular_file(p)) throw IoError(where + ": cannot resolve " + p.string());
      (k == 0 ? e.clean_path : e.noise_path) = p;
    }
    const auto colon = fields[2].find(':');
    if (colon == std::string::npos) {
      e.snr_lo = e.snr_hi = parse_number(fields[2], where);
    } else {
      e.snr_lo = parse_number(trim(fields[2].substr(0, colon)), where);
      e.snr_hi = parse_number(trim(fields[2].substr(colon + 1)), where);
      if (e.snr_lo > e.snr_hi) throw InvalidInputError(where + ": snr range has lo > hi");
    }
    entries.push_back(std::move(e));
  }
  if (!header_seen) throw InvalidInputError(path.string() + ": missing header");
  return entries;
}

TrainPair make_pair(const Waveform& clean_in, const Waveform& noise_in, double snr_lo, double snr_hi,
                    std::uint64_t seed, const DataConfig& cfg, std::string id) {
  cfg.validate();
  clean_in.validate();
  noise_in.validate();
  if (!(snr_lo <= snr_hi)) throw InvalidInputError("make_pair: snr range has lo > hi");
  if (clean_in.sample_rate != noise_in.sample_rate) throw InvalidInputError("make_pair: sample rates differ");
  if (noise_in.samples.empty()) throw DegenerateInputError("make_pair: noise is empty");

  Rng rng(seed);
  const double snr = snr_lo == snr_hi ? snr_lo : rng.uniform(snr_lo, snr_hi);

  Waveform clean = clean_in;
  const auto crop = static_cast<std::size_t>(std::llround(cfg.crop_seconds * clean.sample_rate));
  if (cfg.crop_seconds > 0.0 && clean.size() > crop) {
    const auto off = rng.below(clean.size() - crop + 1);
    clean.samples.assign(clean_in.samples.begin() + static_cast<std::ptrdiff_t>(off),
                         clean_in.samples.begin() + static_cast<std::ptrdiff_t>(off + crop));
  }
  if (clean.size() < static_cast<std::size_t>(cfg.spectral.fft_size))
    throw DegenerateInputError("make_pair: clip shorter than one frame");

  Waveform noise;
  noise.sample_rate = noise_in.sample_rate;
  std::vector<double> tiled = noise_in.samples;
  while (tiled.size() < clean.size()) tiled.insert(tiled.end(), noise_in.samples.begin(), noise_in.samples.end());
  const auto noff = tiled.size() > clean.size() ? rng.below(tiled.size() - clean.size() + 1) : 0;
  noise.samples.assign(tiled.begin() + static_cast<std::ptrdiff_t>(noff),
                       tiled.begin() + static_cast<std::ptrdiff_t>(noff + clean.size()));

  const double g = snr_gain(clean, noise, snr);
  for (double& s : noise.samples) s *= g;
  Waveform mix = clean;
  for (std::size_t i = 0; i < mix.size(); ++i) mix.samples[i] += noise.samples[i];

  const auto [mix_n, peak] = normalize(mix);
  for (double& s : clean.samples) s /= peak;
  for (double& s : noise.samples) s /= peak;

  TrainPair p;
  p.id = std::move(id);
  p.snr_db = snr;
  p.x0 = compress(stft(clean, cfg.spectral));
  p.y = compress(stft(mix_n, cfg.spectral));
  p.oracle_mask = phase_sensitive_mask(p.x0, p.y);
  p.clean = std::move(clean);
  p.noise = std::move(noise);
  p.mixture = mix_n;
  return p;
}

TrainPair make_pair(const ManifestEntry& entry, std::uint64_t seed, const DataConfig& cfg) {
  entry.validate();
  const Waveform clean = load_at_rate(entry.clean_path, cfg.sample_rate);
  const Waveform noise = load_at_rate(entry.noise_path, cfg.sample_rate);
  std::string id = entry.clean_path.stem().string();
  if (entry.line > 0) id += "@" + std::to_string(entry.line);
  return make_pair(clean, noise, entry.snr_lo, entry.snr_hi, seed, cfg, std::move(id));
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng(seed).split(epoch);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

}  // namespace gdse
