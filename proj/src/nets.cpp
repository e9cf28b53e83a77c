#include "gdse/nets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gdse/errors.hpp"

namespace gdse {

namespace {

void check_finite(const ComplexGrid& g, const char* what) {
  for (const auto& v : g) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw NumericalError(std::string(what) + ": non-finite input");
  }
}

// Logits are clamped so the mask stays strictly inside (0, 1).
constexpr double kLogitLimit = 30.0;

}  // namespace

NetConfig NetConfig::desk() { return NetConfig{}; }

NetConfig NetConfig::paper() {
  NetConfig c;
  c.preset = "paper";
  c.base_width = 32;
  c.denoiser_mult = {1, 2, 4, 4};
  c.denoiser_blocks = 2;
  c.cmen_width = 30;
  c.cmen_mult = {1, 2, 4};
  c.cmen_blocks = 1;
  c.temb_dim = 128;
  return c;
}

NetConfig NetConfig::toy() {
  NetConfig c;
  c.preset = "toy";
  c.base_width = 4;
  c.denoiser_mult = {1, 2};
  c.denoiser_blocks = 1;
  c.cmen_width = 4;
  c.cmen_mult = {1, 2};
  c.cmen_blocks = 1;
  c.temb_dim = 8;
  return c;
}

NetConfig NetConfig::from_preset(const std::string& name) {
  if (name == "desk") return desk();
  if (name == "paper") return paper();
  if (name == "toy") return toy();
  throw ConfigError("net_preset", "unknown preset '" + name + "'");
}

void NetConfig::validate() const {
  if (base_width <= 0) throw ConfigError("base_width", "must be positive");
  if (cmen_width <= 0) throw ConfigError("cmen_width", "must be positive");
  if (denoiser_mult.empty()) throw ConfigError("denoiser_mult", "needs at least one level");
  if (cmen_mult.empty()) throw ConfigError("cmen_mult", "needs at least one level");
  for (int m : denoiser_mult)
    if (m <= 0) throw ConfigError("denoiser_mult", "entries must be positive");
  for (int m : cmen_mult)
    if (m <= 0) throw ConfigError("cmen_mult", "entries must be positive");
  if (denoiser_blocks < 0) throw ConfigError("denoiser_blocks", "must be >= 0");
  if (cmen_blocks < 0) throw ConfigError("cmen_blocks", "must be >= 0");
  if (temb_dim <= 0 || temb_dim % 2 != 0) throw ConfigError("temb_dim", "must be a positive even number");
}

std::vector<double> timestep_embedding(int t, int steps, int dim) {
  const double s = static_cast<double>(t) / static_cast<double>(steps);
  const int half = dim / 2;
  std::vector<double> e(dim);
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    e[i] = std::sin(1000.0 * s * freq);
    e[i + half] = std::cos(1000.0 * s * freq);
  }
  return e;
}

std::size_t count_params(const std::vector<const nn::Param*>& params) { return nn::count_values(params); }

MaskEstimator::MaskEstimator(const NetConfig& cfg) {
  cfg.validate();
  nn::UNetSpec spec;
  spec.in_channels = 2;
  spec.out_channels = 1;
  spec.base_width = cfg.cmen_width;
  spec.channel_mult = cfg.cmen_mult;
  spec.blocks_per_level = cfg.cmen_blocks;
  spec.temb_dim = 0;
  spec.input_skip = false;
  net_ = nn::UNet(spec);
}

Mask MaskEstimator::forward(const ComplexGrid& y, Trace* trace) const {
  check_finite(y, "mask estimator");
  const int K = static_cast<int>(y.frames());
  const int F = static_cast<int>(y.bins());
  nn::Tensor in(2, K, F);
  for (std::size_t i = 0; i < y.size(); ++i) {
    in.data[i] = y[i].real();
    in.data[y.size() + i] = y[i].imag();
  }
  nn::Tensor logits = net_.forward(in, {}, trace ? &trace->net : nullptr);
  Mask m{RealGrid(y.frames(), y.bins())};
  for (std::size_t i = 0; i < m.values.size(); ++i)
    m.values[i] = nn::sigmoid(std::clamp(logits.data[i], -kLogitLimit, kLogitLimit));
  if (trace) {
    trace->mask = m.values;
    trace->logits = std::move(logits.data);
  }
  return m;
}

void MaskEstimator::backward(const Trace& trace, const RealGrid& grad_mask, nn::Grads& grads) const {
  const auto& out = trace.mask;
  nn::Tensor g(1, static_cast<int>(out.frames()), static_cast<int>(out.bins()));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double s = out[i];
    const bool saturated = std::abs(trace.logits[i]) > kLogitLimit;
    g.data[i] = saturated ? 0.0 : grad_mask[i] * s * (1.0 - s);
  }
  net_.backward(trace.net, g, grads, nullptr);
}

DiffusionDenoiser::DiffusionDenoiser(const NetConfig& cfg, int steps) : steps_(steps) {
  cfg.validate();
  if (steps < 1) throw ConfigError("T", "must be positive");
  nn::UNetSpec spec;
  spec.in_channels = 5;
  spec.out_channels = 2;
  spec.base_width = cfg.base_width;
  spec.channel_mult = cfg.denoiser_mult;
  spec.blocks_per_level = cfg.denoiser_blocks;
  spec.temb_dim = cfg.temb_dim;
  spec.input_skip = true;
  net_ = nn::UNet(spec);
}

ComplexGrid DiffusionDenoiser::forward(const ComplexGrid& x_t, const ComplexGrid& y, const GuidanceField& g, int t,
                                       Trace* trace) const {
  if (t < 1 || t > steps_) throw IndexError("denoiser: timestep " + std::to_string(t) + " out of range");
  if (!x_t.same_shape(y) || !x_t.same_shape(g.values)) throw ContractViolation("denoiser: input shape mismatch");
  check_finite(x_t, "denoiser");
  check_finite(y, "denoiser");
  const int K = static_cast<int>(x_t.frames());
  const int F = static_cast<int>(x_t.bins());
  const std::size_t n = x_t.size();
  nn::Tensor in(5, K, F);
  for (std::size_t i = 0; i < n; ++i) {
    in.data[i] = x_t[i].real();
    in.data[n + i] = x_t[i].imag();
    in.data[2 * n + i] = y[i].real();
    in.data[3 * n + i] = y[i].imag();
    in.data[4 * n + i] = g.values[i];
  }
  const auto temb = timestep_embedding(t, steps_, net_.spec().temb_dim);
  nn::Tensor out = net_.forward(in, temb, trace ? &trace->net : nullptr);
  ComplexGrid x0(x_t.frames(), x_t.bins());
  for (std::size_t i = 0; i < n; ++i) x0[i] = Complex(out.data[i], out.data[n + i]);
  return x0;
}

void DiffusionDenoiser::backward(const Trace& trace, const ComplexGrid& grad_out, nn::Grads& grads) const {
  const std::size_t n = grad_out.size();
  nn::Tensor g(2, static_cast<int>(grad_out.frames()), static_cast<int>(grad_out.bins()));
  for (std::size_t i = 0; i < n; ++i) {
    g.data[i] = grad_out[i].real();
    g.data[n + i] = grad_out[i].imag();
  }
  net_.backward(trace.net, g, grads, nullptr);
}

Model::Model(const NetConfig& cfg, int steps, std::uint64_t init_seed)
    : config(cfg), cmen(cfg), denoiser(cfg, steps) {
  Rng rng(init_seed);
  Rng cmen_rng = rng.split(1);
  Rng den_rng = rng.split(2);
  cmen.init(cmen_rng);
  denoiser.init(den_rng);
}

}  // namespace gdse
