#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gdse/grid.hpp"
#include "gdse/guidance.hpp"
#include "gdse/rng.hpp"
#include "gdse/spectral.hpp"

namespace gdse::testing {

inline ComplexGrid random_grid(std::size_t frames, std::size_t bins, Rng& rng, double scale = 1.0) {
  ComplexGrid g(frames, bins);
  for (auto& v : g) v = Complex(scale * rng.normal(), scale * rng.normal());
  return g;
}

inline RealGrid random_unit_grid(std::size_t frames, std::size_t bins, Rng& rng) {
  RealGrid g(frames, bins);
  for (auto& v : g) v = rng.uniform();
  return g;
}

// Mask with roughly `ones` of its bins exactly 1 and the rest uniform.
inline Mask random_mask(std::size_t frames, std::size_t bins, Rng& rng, double ones = 0.3) {
  Mask m{RealGrid(frames, bins)};
  for (auto& v : m.values) v = rng.uniform() < ones ? 1.0 : rng.uniform();
  return m;
}

inline Waveform random_waveform(std::size_t n, Rng& rng, int rate = 16000, double scale = 0.3) {
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(n);
  for (auto& s : w.samples) s = scale * rng.normal();
  return w;
}

inline double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

// Running per-bin mean and variance of complex samples; variance is
// E|x - mean|^2 (sum of the two component variances).
struct BinMoments {
  std::vector<Complex> sum;
  std::vector<double> sum_sq;  // |x|^2
  std::size_t n = 0;

  explicit BinMoments(std::size_t bins) : sum(bins), sum_sq(bins, 0.0) {}

  void add(const ComplexGrid& x) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      sum[i] += x[i];
      sum_sq[i] += std::norm(x[i]);
    }
    ++n;
  }
  Complex mean(std::size_t i) const { return sum[i] / static_cast<double>(n); }
  double var(std::size_t i) const {
    const double m2 = sum_sq[i] / static_cast<double>(n);
    return (m2 - std::norm(mean(i))) * static_cast<double>(n) / static_cast<double>(n - 1);
  }
};

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng rng(static_cast<std::uint64_t>(std::hash<std::string>{}(tag)) ^
            static_cast<std::uint64_t>(reinterpret_cast<std::uintptr_t>(this)));
    path_ = std::filesystem::temp_directory_path() / ("gdse_" + tag + "_" + std::to_string(rng.below(1u << 30)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace gdse::testing
