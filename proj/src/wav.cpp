#include "gdse/wav.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <vector>

#include "gdse/errors.hpp"

namespace gdse {

namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T read_le(const std::vector<char>& buf, std::size_t pos) {
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  return v;
}

template <typename T>
void put_le(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = path.string();
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 || std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw IoError(where + ": not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::string id(buf.data() + pos, 4);
    const auto size = read_le<std::uint32_t>(buf, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > buf.size()) {
      if (id != "data") throw IoError(where + ": truncated chunk '" + id + "'");
    }
    if (id == "fmt ") {
      if (size < 16) throw IoError(where + ": short fmt chunk");
      format = read_le<std::uint16_t>(buf, body);
      channels = read_le<std::uint16_t>(buf, body + 2);
      rate = read_le<std::uint32_t>(buf, body + 4);
      bits = read_le<std::uint16_t>(buf, body + 14);
      if (format == kFormatExtensible && size >= 26) format = read_le<std::uint16_t>(buf, body + 24);
    } else if (id == "data") {
      data = buf.data() + body;
      data_size = std::min<std::size_t>(size, buf.size() - body);
    }
    pos = body + size + (size & 1U);
  }
  if (channels == 0 || data == nullptr) throw IoError(where + ": missing fmt or data chunk");
  if (channels != 1) throw InvalidInputError(where + ": only mono audio is supported");

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  if (format == kFormatPcm && bits == 16) {
    const std::size_t n = data_size / 2;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::int16_t v;
      std::memcpy(&v, data + 2 * i, 2);
      w.samples[i] = static_cast<double>(v) / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    const std::size_t n = data_size / 4;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      float v;
      std::memcpy(&v, data + 4 * i, 4);
      w.samples[i] = static_cast<double>(v);
    }
  } else {
    throw InvalidInputError(where + ": unsupported sample format (need 16-bit PCM or 32-bit float)");
  }
  w.validate();
  return w;
}

void write_wav(const std::filesystem::path& path, const Waveform& w, WavFormat format) {
  w.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const std::uint16_t bits = format == WavFormat::pcm16 ? 16 : 32;
  const std::uint16_t tag = format == WavFormat::pcm16 ? kFormatPcm : kFormatFloat;
  const std::uint32_t bytes = static_cast<std::uint32_t>(w.size() * (bits / 8));
  out.write("RIFF", 4);
  put_le<std::uint32_t>(out, 36 + bytes);
  out.write("WAVEfmt ", 8);
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, tag);
  put_le<std::uint16_t>(out, 1);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate) * (bits / 8));
  put_le<std::uint16_t>(out, bits / 8);
  put_le<std::uint16_t>(out, bits);
  out.write("data", 4);
  put_le<std::uint32_t>(out, bytes);
  for (double s : w.samples) {
    if (format == WavFormat::pcm16) {
      const double c = std::clamp(s, -1.0, 32767.0 / 32768.0);
      put_le<std::int16_t>(out, static_cast<std::int16_t>(std::lround(c * 32768.0)));
    } else {
      put_le<float>(out, static_cast<float>(s));
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Waveform resample(const Waveform& w, int target_rate) {
  w.validate();
  if (target_rate <= 0) throw InvalidInputError("resample: target rate must be positive");
  if (target_rate == w.sample_rate || w.samples.empty()) {
    Waveform out = w;
    out.sample_rate = target_rate;
    return out;
  }
  const int g = std::gcd(w.sample_rate, target_rate);
  const long long up = target_rate / g;
  const long long down = w.sample_rate / g;
  const double ratio = static_cast<double>(target_rate) / w.sample_rate;
  const double cutoff = std::min(1.0, ratio);  // relative to the input Nyquist
  constexpr int kHalfTaps = 32;
  const double half_width = kHalfTaps / cutoff;  // in input samples

  const auto n_in = static_cast<long long>(w.size());
  const auto n_out = static_cast<long long>(std::ceil(static_cast<double>(n_in) * up / down));
  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<std::size_t>(n_out));
  for (long long m = 0; m < n_out; ++m) {
    const double center = static_cast<double>(m) * down / up;
    const auto lo = static_cast<long long>(std::ceil(center - half_width));
    const auto hi = static_cast<long long>(std::floor(center + half_width));
    double acc = 0.0;
    for (long long i = std::max(0LL, lo); i <= std::min(n_in - 1, hi); ++i) {
      const double d = static_cast<double>(i) - center;
      const double x = d * cutoff;
      const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
      const double win = 0.5 + 0.5 * std::cos(std::numbers::pi * d / half_width);
      acc += w.samples[static_cast<std::size_t>(i)] * cutoff * sinc * win;
    }
    out.samples[static_cast<std::size_t>(m)] = acc;
  }
  return out;
}

}  // namespace gdse
