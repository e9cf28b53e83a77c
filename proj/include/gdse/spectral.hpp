#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "gdse/grid.hpp"

namespace gdse {

struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  std::size_t size() const noexcept { return samples.size(); }
  // Throws InvalidInputError on non-positive rate or non-finite samples.
  void validate() const;
};

enum class Window { hann, sqrt_hann };

std::string to_string(Window w);
Window window_from_string(const std::string& name);

struct SpectralConfig {
  int fft_size = 510;
  int hop = 128;
  Window window = Window::hann;
  double comp_exponent = 0.5;
  double comp_scale = 0.5;
  bool center_pad = true;

  int bins() const noexcept { return fft_size / 2 + 1; }
  void validate() const;
  bool operator==(const SpectralConfig&) const = default;
};

// Periodic analysis window of length fft_size.
std::vector<double> analysis_window(const SpectralConfig& cfg);

// Number of frames produced for a signal of `length` samples.
std::size_t frame_count(std::size_t length, const SpectralConfig& cfg);

enum class SpectralDomain { raw, compressed };

struct ComplexSpectrogram {
  ComplexGrid values;
  SpectralDomain domain = SpectralDomain::raw;
  SpectralConfig config;

  std::size_t frames() const noexcept { return values.frames(); }
  std::size_t bins() const noexcept { return values.bins(); }
};

ComplexSpectrogram stft(const Waveform& w, const SpectralConfig& cfg);

// Least-squares overlap-add inverse. `out_len` must agree with the frame
// count to within one hop.
Waveform istft(const ComplexSpectrogram& s, std::size_t out_len, int sample_rate = 16000);

// c = scale * |s|^exponent * exp(i arg s); zero bins stay zero.
ComplexSpectrogram compress(const ComplexSpectrogram& s);
ComplexSpectrogram decompress(const ComplexSpectrogram& c);

// Peak normalization. Returns the unit-peak waveform and the gain that
// restores the original by multiplication.
std::pair<Waveform, double> normalize(const Waveform& w);

}  // namespace gdse
