#include "gdse/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "gdse/enhance.hpp"
#include "gdse/errors.hpp"
#include "gdse/rng.hpp"

namespace gdse {

namespace {

std::vector<double> centered(const Waveform& w) {
  double mean = 0.0;
  for (double s : w.samples) mean += s;
  mean /= static_cast<double>(w.size());
  std::vector<double> out(w.samples);
  for (double& s : out) s -= mean;
  return out;
}

Json nullable(double v, bool valid) { return valid ? Json(v) : Json(nullptr); }

Json band_json(const BandAggregate& b) {
  const bool any = b.count > 0;
  return Json{{"lo", b.lo},
              {"hi", b.hi},
              {"hi_inclusive", b.hi_inclusive},
              {"count", b.count},
              {"mean_si_snr_noisy", nullable(b.mean_si_snr_noisy, any)},
              {"mean_si_snr_enhanced", nullable(b.mean_si_snr_enhanced, any)},
              {"mean_improvement", nullable(b.mean_improvement, any)}};
}

}  // namespace

double si_snr(const Waveform& estimate, const Waveform& reference) {
  estimate.validate();
  reference.validate();
  if (estimate.size() != reference.size()) throw InvalidInputError("si_snr: length mismatch");
  if (reference.samples.empty()) throw DegenerateInputError("si_snr: empty reference");
  const auto e = centered(estimate);
  const auto s = centered(reference);
  double es = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    es += e[i] * s[i];
    ss += s[i] * s[i];
  }
  if (!(ss > 0.0)) throw DegenerateInputError("si_snr: reference is silent");
  const double a = es / ss;
  double target = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double t = a * s[i];
    target += t * t;
    noise += (e[i] - t) * (e[i] - t);
  }
  if (noise == 0.0) return target > 0.0 ? kSiSnrCap : -kSiSnrCap;
  if (target == 0.0) return -kSiSnrCap;
  return std::clamp(10.0 * std::log10(target / noise), -kSiSnrCap, kSiSnrCap);
}

MetricReport aggregate(std::vector<ItemRecord> items, Json config_echo) {
  MetricReport r;
  r.config_echo = std::move(config_echo);
  r.bands = {{"[-15,-5)", -15.0, -5.0, false}, {"[-5,5)", -5.0, 5.0, false}, {"[5,15]", 5.0, 15.0, true}};
  r.overall = {"all", -HUGE_VAL, HUGE_VAL, true};
  auto add = [](BandAggregate& b, const ItemRecord& it) {
    ++b.count;
    b.mean_si_snr_noisy += it.si_snr_noisy;
    b.mean_si_snr_enhanced += it.si_snr_enhanced;
  };
  for (const auto& it : items) {
    if (it.error) continue;
    add(r.overall, it);
    for (auto& b : r.bands)
      if (b.contains(it.snr_db)) add(b, it);
  }
  auto finish = [](BandAggregate& b) {
    if (b.count == 0) return;
    b.mean_si_snr_noisy /= static_cast<double>(b.count);
    b.mean_si_snr_enhanced /= static_cast<double>(b.count);
    b.mean_improvement = b.mean_si_snr_enhanced - b.mean_si_snr_noisy;
  };
  finish(r.overall);
  for (auto& b : r.bands) finish(b);
  r.items = std::move(items);
  return r;
}

Json to_json(const MetricReport& r) {
  Json items = Json::array();
  for (const auto& it : r.items) {
    const bool ok = !it.error;
    Json j{{"id", it.id},
           {"snr_db", it.snr_db},
           {"si_snr_noisy", nullable(it.si_snr_noisy, ok)},
           {"si_snr_enhanced", nullable(it.si_snr_enhanced, ok)},
           {"si_snr_improvement", nullable(it.si_snr_enhanced - it.si_snr_noisy, ok)}};
    // Slots for externally computed metrics.
    for (const char* k : {"pesq", "estoi", "dnsmos", "csig", "cbak", "covl"}) j[k] = nullptr;
    if (it.error) j["error"] = *it.error;
    items.push_back(std::move(j));
  }
  Json bands = Json::object();
  for (const auto& b : r.bands) bands[b.name] = band_json(b);
  return Json{{"config_echo", r.config_echo},
              {"items", std::move(items)},
              {"aggregates_by_band", std::move(bands)},
              {"aggregate_all", band_json(r.overall)}};
}

MetricReport evaluate(const std::vector<ManifestEntry>& manifest, const Enhancer& enhancer, const DataConfig& data,
                      std::uint64_t seed, Json config_echo) {
  if (manifest.empty()) throw InvalidInputError("evaluate: manifest is empty");
  DataConfig full = data;
  full.crop_seconds = 0.0;
  std::vector<ItemRecord> items;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    ItemRecord rec;
    rec.id = manifest[i].clean_path.stem().string();
    if (manifest[i].line > 0) rec.id += "@" + std::to_string(manifest[i].line);
    rec.snr_db = manifest[i].snr_lo;
    try {
      const TrainPair p = make_pair(manifest[i], mix_seed(seed, i), full);
      rec.id = p.id;
      rec.snr_db = p.snr_db;
      rec.si_snr_noisy = si_snr(p.mixture, p.clean);
      rec.si_snr_enhanced = si_snr(enhancer(p.mixture, i), p.clean);
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
    items.push_back(std::move(rec));
  }
  return aggregate(std::move(items), std::move(config_echo));
}

MetricReport evaluate(const std::vector<ManifestEntry>& manifest, const LoadedCheckpoint& ck, const RunConfig& cfg) {
  DataConfig data;
  data.spectral = ck.meta.spectral;
  data.sample_rate = ck.meta.sample_rate;
  const Enhancer enh = [&](const Waveform& noisy, std::size_t index) {
    SamplerConfig sc = cfg.sampler;
    sc.seed = mix_seed(cfg.sampler.seed, index);
    return enhance(noisy, ck, sc).enhanced;
  };
  Json echo = to_json(cfg);
  echo["net"] = to_json(ck.meta.net);
  return evaluate(manifest, enh, data, cfg.sampler.seed, std::move(echo));
}

}  // namespace gdse
