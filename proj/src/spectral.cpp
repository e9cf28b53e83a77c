#include "gdse/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "gdse/errors.hpp"

namespace gdse {

namespace {

// FFTW planning is not thread-safe; execution with new-array functions is.
class PlanCache {
 public:
  struct Plans {
    fftw_plan forward = nullptr;
    fftw_plan inverse = nullptr;
  };

  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  Plans get(int n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    double* real = fftw_alloc_real(n);
    fftw_complex* spec = fftw_alloc_complex(n / 2 + 1);
    Plans p;
    p.forward = fftw_plan_dft_r2c_1d(n, real, spec, FFTW_ESTIMATE);
    p.inverse = fftw_plan_dft_c2r_1d(n, spec, real, FFTW_ESTIMATE);
    fftw_free(real);
    fftw_free(spec);
    plans_.emplace(n, p);
    return p;
  }

  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.inverse);
    }
  }

 private:
  std::mutex mutex_;
  std::map<int, Plans> plans_;
};

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

using RealBuffer = std::unique_ptr<double, FftwDeleter>;
using ComplexBuffer = std::unique_ptr<fftw_complex, FftwDeleter>;

std::size_t pad_amount(const SpectralConfig& cfg) {
  return cfg.center_pad ? static_cast<std::size_t>(cfg.fft_size / 2) : 0;
}

// Reflect-without-repeat index folding, valid for any signal length >= 1.
std::size_t reflect_index(long long i, std::size_t len) {
  if (len == 1) return 0;
  const long long period = 2 * (static_cast<long long>(len) - 1);
  i %= period;
  if (i < 0) i += period;
  if (i >= static_cast<long long>(len)) i = period - i;
  return static_cast<std::size_t>(i);
}

}  // namespace

void Waveform::validate() const {
  if (sample_rate <= 0) throw InvalidInputError("waveform: sample_rate must be positive");
  for (double s : samples) {
    if (!std::isfinite(s)) throw InvalidInputError("waveform: non-finite sample");
  }
}

std::string to_string(Window w) {
  switch (w) {
    case Window::hann: return "hann";
    case Window::sqrt_hann: return "sqrt_hann";
  }
  return "unknown";
}

Window window_from_string(const std::string& name) {
  if (name == "hann") return Window::hann;
  if (name == "sqrt_hann") return Window::sqrt_hann;
  throw ConfigError("window", "unknown window '" + name + "'");
}

void SpectralConfig::validate() const {
  if (fft_size < 2) throw ConfigError("fft_size", "must be >= 2");
  if (hop <= 0 || hop > fft_size) throw ConfigError("hop", "must satisfy 0 < hop <= fft_size");
  if (!(comp_exponent > 0.0 && comp_exponent <= 1.0))
    throw ConfigError("comp_exponent", "must lie in (0, 1]");
  if (!(comp_scale > 0.0)) throw ConfigError("comp_scale", "must be positive");
}

std::vector<double> analysis_window(const SpectralConfig& cfg) {
  const int n = cfg.fft_size;
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
    w[i] = cfg.window == Window::hann ? hann : std::sqrt(hann);
  }
  return w;
}

std::size_t frame_count(std::size_t length, const SpectralConfig& cfg) {
  const auto hop = static_cast<std::size_t>(cfg.hop);
  if (cfg.center_pad) return 1 + length / hop;
  const auto n = static_cast<std::size_t>(cfg.fft_size);
  if (length < n) return 0;
  return 1 + (length - n) / hop;
}

ComplexSpectrogram stft(const Waveform& w, const SpectralConfig& cfg) {
  cfg.validate();
  if (w.samples.empty()) throw InvalidInputError("stft: empty waveform");
  w.validate();

  const std::size_t frames = frame_count(w.size(), cfg);
  if (frames == 0) throw InvalidInputError("stft: waveform shorter than one frame");

  const int n = cfg.fft_size;
  const std::size_t bins = static_cast<std::size_t>(cfg.bins());
  const std::size_t pad = pad_amount(cfg);
  const auto window = analysis_window(cfg);
  const auto plans = PlanCache::instance().get(n);

  RealBuffer in(fftw_alloc_real(n));
  ComplexBuffer out(fftw_alloc_complex(bins));

  ComplexSpectrogram s{ComplexGrid(frames, bins), SpectralDomain::raw, cfg};
  for (std::size_t k = 0; k < frames; ++k) {
    const long long start = static_cast<long long>(k) * cfg.hop - static_cast<long long>(pad);
    for (int i = 0; i < n; ++i) {
      const long long pos = start + i;
      const std::size_t src = cfg.center_pad ? reflect_index(pos, w.size()) : static_cast<std::size_t>(pos);
      in.get()[i] = w.samples[src] * window[i];
    }
    fftw_execute_dft_r2c(plans.forward, in.get(), out.get());
    for (std::size_t f = 0; f < bins; ++f) s.values(k, f) = Complex(out.get()[f][0], out.get()[f][1]);
  }
  return s;
}

Waveform istft(const ComplexSpectrogram& s, std::size_t out_len, int sample_rate) {
  const SpectralConfig& cfg = s.config;
  cfg.validate();
  if (s.domain != SpectralDomain::raw) throw DomainTagError("istft: expected a raw spectrogram");
  if (s.bins() != static_cast<std::size_t>(cfg.bins()))
    throw InvalidInputError("istft: bin count does not match fft_size");
  if (s.frames() == 0 || out_len == 0) throw InvalidInputError("istft: empty input");
  for (const auto& v : s.values) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw InvalidInputError("istft: non-finite spectrogram value");
  }
  const long long expected = static_cast<long long>(frame_count(out_len, cfg));
  if (std::llabs(expected - static_cast<long long>(s.frames())) > 1)
    throw InvalidInputError("istft: out_len inconsistent with frame count");

  const int n = cfg.fft_size;
  const std::size_t bins = s.bins();
  const std::size_t pad = pad_amount(cfg);
  const auto window = analysis_window(cfg);
  const auto plans = PlanCache::instance().get(n);

  const std::size_t total = (s.frames() - 1) * static_cast<std::size_t>(cfg.hop) + n;
  std::vector<double> acc(std::max(total, out_len + pad), 0.0);
  std::vector<double> norm(acc.size(), 0.0);

  ComplexBuffer in(fftw_alloc_complex(bins));
  RealBuffer out(fftw_alloc_real(n));
  for (std::size_t k = 0; k < s.frames(); ++k) {
    for (std::size_t f = 0; f < bins; ++f) {
      in.get()[f][0] = s.values(k, f).real();
      in.get()[f][1] = s.values(k, f).imag();
    }
    fftw_execute_dft_c2r(plans.inverse, in.get(), out.get());
    const std::size_t start = k * static_cast<std::size_t>(cfg.hop);
    for (int i = 0; i < n; ++i) {
      acc[start + i] += out.get()[i] / n * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }

  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double d = norm[i + pad];
    if (d < 1e-10) throw NumericalError("istft: zero window normalization at sample " + std::to_string(i));
    w.samples[i] = acc[i + pad] / d;
  }
  return w;
}

ComplexSpectrogram compress(const ComplexSpectrogram& s) {
  if (s.domain != SpectralDomain::raw) throw DomainTagError("compress: spectrogram is already compressed");
  const double gamma = s.config.comp_exponent;
  const double scale = s.config.comp_scale;
  ComplexSpectrogram c{s.values, SpectralDomain::compressed, s.config};
  for (auto& v : c.values) {
    const double mag = std::abs(v);
    v = mag > 0.0 ? v * (scale * std::pow(mag, gamma) / mag) : Complex(0.0, 0.0);
  }
  return c;
}

ComplexSpectrogram decompress(const ComplexSpectrogram& c) {
  if (c.domain != SpectralDomain::compressed) throw DomainTagError("decompress: spectrogram is not compressed");
  const double inv_gamma = 1.0 / c.config.comp_exponent;
  const double scale = c.config.comp_scale;
  ComplexSpectrogram s{c.values, SpectralDomain::raw, c.config};
  for (auto& v : s.values) {
    const double mag = std::abs(v);
    v = mag > 0.0 ? v * (std::pow(mag / scale, inv_gamma) / mag) : Complex(0.0, 0.0);
  }
  return s;
}

std::pair<Waveform, double> normalize(const Waveform& w) {
  w.validate();
  double peak = 0.0;
  for (double s : w.samples) peak = std::max(peak, std::abs(s));
  if (!(peak > 0.0)) throw DegenerateInputError("normalize: waveform is silent");
  Waveform out = w;
  for (double& s : out.samples) s /= peak;
  return {std::move(out), peak};
}

}  // namespace gdse
