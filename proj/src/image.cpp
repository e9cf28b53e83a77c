#include "gdse/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <png.h>

#include "gdse/enhance.hpp"
#include "gdse/errors.hpp"

namespace gdse {

namespace {

using Rgb = std::array<double, 3>;

// Black -> purple -> orange -> pale yellow.
constexpr std::array<Rgb, 5> kRamp{{{0.0, 0.0, 0.02},
                                    {0.33, 0.06, 0.43},
                                    {0.73, 0.21, 0.33},
                                    {0.98, 0.55, 0.04},
                                    {0.99, 1.0, 0.64}}};

Rgb ramp(double u) {
  u = std::clamp(u, 0.0, 1.0) * (kRamp.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(u), kRamp.size() - 2);
  const double f = u - static_cast<double>(i);
  Rgb c;
  for (int k = 0; k < 3; ++k) c[k] = kRamp[i][k] * (1.0 - f) + kRamp[i + 1][k] * f;
  return c;
}

double grid_max(const RealGrid& g) {
  double m = -HUGE_VAL;
  for (double v : g) m = std::max(m, v);
  return m;
}

}  // namespace

Image render_grid(const RealGrid& values, double lo, double hi) {
  if (values.empty()) throw InvalidInputError("render_grid: empty grid");
  if (!(hi > lo)) throw InvalidInputError("render_grid: empty value range");
  Image img;
  img.width = static_cast<int>(values.frames());
  img.height = static_cast<int>(values.bins());
  img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  for (int row = 0; row < img.height; ++row) {
    const auto f = static_cast<std::size_t>(img.height - 1 - row);
    for (int col = 0; col < img.width; ++col) {
      const Rgb c = ramp((values(static_cast<std::size_t>(col), f) - lo) / (hi - lo));
      auto* px = &img.rgb[(static_cast<std::size_t>(row) * img.width + col) * 3];
      for (int k = 0; k < 3; ++k) px[k] = static_cast<std::uint8_t>(std::lround(c[k] * 255.0));
    }
  }
  return img;
}

RealGrid log_magnitude(const ComplexGrid& s, double floor_db) {
  RealGrid out(s.frames(), s.bins());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double m = std::abs(s[i]);
    out[i] = m > 0.0 ? std::max(floor_db, 20.0 * std::log10(m)) : floor_db;
  }
  return out;
}

void write_png(const std::filesystem::path& path, const Image& img) {
  if (img.width <= 0 || img.height <= 0) throw InvalidInputError("write_png: empty image");
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(img.width);
  desc.height = static_cast<png_uint_32>(img.height);
  desc.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&desc, path.string().c_str(), 0, img.rgb.data(), 0, nullptr))
    throw IoError("cannot write " + path.string() + ": " + desc.message);
}

std::vector<std::filesystem::path> visualize(const VisualizeInputs& in, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const SpectralConfig spec = in.checkpoint ? in.checkpoint->meta.spectral : in.spectral;
  Waveform noisy = in.noisy;
  auto [noisy_n, gain] = normalize(noisy);
  const ComplexSpectrogram y = compress(stft(noisy_n, spec));
  const RealGrid y_db = log_magnitude(y.values);
  const double hi = grid_max(y_db);
  const double lo = hi - in.dynamic_range_db;

  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const Image& img) {
    const auto p = out_dir / (name + ".png");
    write_png(p, img);
    written.push_back(p);
  };
  emit("noisy", render_grid(y_db, lo, hi));

  if (in.clean) {
    if (in.clean->size() != in.noisy.size()) throw InvalidInputError("visualize: clean and noisy lengths differ");
    Waveform c = *in.clean;
    for (double& s : c.samples) s /= gain;
    emit("clean", render_grid(log_magnitude(compress(stft(c, spec)).values), lo, hi));
  }

  if (in.checkpoint) {
    SamplerConfig sc;
    sc.seed = in.seed;
    const EnhanceResult aniso = enhance(in.noisy, *in.checkpoint, sc);
    sc.guidance_mode = GuidanceMode::isotropic;
    const EnhanceResult iso = enhance(in.noisy, *in.checkpoint, sc);
    emit("mask", render_grid(aniso.mask.values, 0.0, 1.0));
    emit("prior_isotropic", render_grid(log_magnitude(iso.prior_state.values), lo, hi));
    emit("prior_guided", render_grid(log_magnitude(aniso.prior_state.values), lo, hi));
    emit("enhanced", render_grid(log_magnitude(aniso.final_state.values), lo, hi));
  }
  return written;
}

}  // namespace gdse
