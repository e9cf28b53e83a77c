#include "gdse/diffusion.hpp"

#include <cmath>

#include "gdse/errors.hpp"

namespace gdse {

namespace {

void check_shapes(const ComplexGrid& a, const ComplexGrid& b, const GuidanceField& g, const char* op) {
  if (!a.same_shape(b) || !a.same_shape(g.values))
    throw InvalidInputError(std::string(op) + ": shape mismatch");
}

void check_step(const NoiseSchedule& sch, int t, const char* op) {
  if (t < 1 || t > sch.steps())
    throw IndexError(std::string(op) + ": timestep " + std::to_string(t) + " out of range");
}

// out[i] = mean[i] + scale * g[i] * z, drawing z for every bin so that the
// stream position does not depend on the field. Bins with zero std keep the
// mean bit-exactly.
void add_scaled_noise(ComplexGrid& out, const GuidanceField& g, double scale, Rng& rng) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Complex z = rng.complex_normal();
    const double s = scale * g.values[i];
    if (s != 0.0) out[i] += s * z;
  }
}

}  // namespace

std::string to_string(GuidanceMode m) {
  switch (m) {
    case GuidanceMode::anisotropic: return "anisotropic";
    case GuidanceMode::isotropic: return "isotropic";
    case GuidanceMode::none: return "none";
  }
  return "unknown";
}

GuidanceMode guidance_mode_from_string(const std::string& name) {
  if (name == "anisotropic") return GuidanceMode::anisotropic;
  if (name == "isotropic") return GuidanceMode::isotropic;
  if (name == "none") return GuidanceMode::none;
  throw ConfigError("guidance_mode", "expected anisotropic|isotropic|none, got '" + name + "'");
}

std::string to_string(PriorStd m) { return m == PriorStd::paper ? "paper" : "marginal"; }

PriorStd prior_std_from_string(const std::string& name) {
  if (name == "paper") return PriorStd::paper;
  if (name == "marginal") return PriorStd::marginal;
  throw ConfigError("prior_std", "expected paper|marginal, got '" + name + "'");
}

GuidanceField sampling_field(const GuidanceField& g, const SamplerConfig& cfg) {
  if (cfg.noise_free || cfg.guidance_mode == GuidanceMode::none)
    return GuidanceField::uniform(g.values.frames(), g.values.bins(), 0.0);
  if (cfg.guidance_mode == GuidanceMode::isotropic)
    return GuidanceField::uniform(g.values.frames(), g.values.bins(), 1.0);
  return g;
}

ComplexGrid forward_step(const ComplexGrid& x_prev, const ComplexGrid& x0, const ComplexGrid& y,
                         const GuidanceField& g, const NoiseSchedule& sch, int t, Rng& rng) {
  check_shapes(x_prev, x0, g, "forward_step");
  check_shapes(y, x0, g, "forward_step");
  check_step(sch, t, "forward_step");
  const double a = sch.alpha(t);
  ComplexGrid out(x_prev.frames(), x_prev.bins());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x_prev[i] + a * (y[i] - x0[i]);
  add_scaled_noise(out, g, sch.kappa() * std::sqrt(a), rng);
  return out;
}

ComplexGrid forward_marginal_with_noise(const ComplexGrid& x0, const ComplexGrid& y, const GuidanceField& g,
                                        const NoiseSchedule& sch, int t, const ComplexGrid& z) {
  check_shapes(x0, y, g, "forward_marginal_sample");
  if (!z.same_shape(x0)) throw InvalidInputError("forward_marginal_sample: noise shape mismatch");
  check_step(sch, t, "forward_marginal_sample");
  const double ab = sch.alpha_bar(t);
  const double scale = sch.kappa() * std::sqrt(ab);
  ComplexGrid out(x0.frames(), x0.bins());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (1.0 - ab) * x0[i] + ab * y[i];
    const double s = scale * g.values[i];
    if (s != 0.0) out[i] += s * z[i];
  }
  return out;
}

ComplexGrid forward_marginal_sample(const ComplexGrid& x0, const ComplexGrid& y, const GuidanceField& g,
                                    const NoiseSchedule& sch, int t, Rng& rng) {
  ComplexGrid z(x0.frames(), x0.bins());
  for (auto& v : z) v = rng.complex_normal();
  return forward_marginal_with_noise(x0, y, g, sch, t, z);
}

double prior_std_coeff(const NoiseSchedule& sch, const SamplerConfig& cfg) {
  if (cfg.prior_std == PriorStd::marginal) return sch.kappa() * std::sqrt(sch.alpha_bar(sch.steps()));
  return sch.reverse_std_coeff(sch.steps(), cfg.variance_mode);
}

ComplexGrid sample_prior(const ComplexGrid& y, const GuidanceField& g, const NoiseSchedule& sch,
                         const SamplerConfig& cfg, Rng& rng) {
  if (!y.same_shape(g.values)) throw InvalidInputError("sample_prior: shape mismatch");
  ComplexGrid out = y;
  add_scaled_noise(out, sampling_field(g, cfg), prior_std_coeff(sch, cfg), rng);
  return out;
}

ComplexGrid reverse_step(const ComplexGrid& x_t, const ComplexGrid& x0_hat, const GuidanceField& g,
                         const NoiseSchedule& sch, int t, const SamplerConfig& cfg, Rng& rng) {
  check_shapes(x_t, x0_hat, g, "reverse_step");
  check_step(sch, t, "reverse_step");
  const double b = sch.beta(t);
  ComplexGrid out(x_t.frames(), x_t.bins());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - b) * x_t[i] + b * x0_hat[i];
  add_scaled_noise(out, sampling_field(g, cfg), sch.reverse_std_coeff(t, cfg.variance_mode), rng);
  return out;
}

ReverseResult run_reverse(const ComplexGrid& y, const GuidanceField& g, const Denoiser& denoiser,
                          const NoiseSchedule& sch, const SamplerConfig& cfg, Rng& rng) {
  if (!y.same_shape(g.values)) throw InvalidInputError("run_reverse: shape mismatch");
  const GuidanceField noise = sampling_field(g, cfg);

  ReverseResult result;
  result.prior_state = sample_prior(y, noise, sch, cfg, rng);
  ComplexGrid x = result.prior_state;
  ComplexGrid x0_hat;
  for (int t = sch.steps(); t >= 1; --t) {
    x0_hat = denoiser.predict(x, y, g, t);
    ++result.denoiser_calls;
    if (!x0_hat.same_shape(x))
      throw ContractViolation("denoiser returned a " + std::to_string(x0_hat.frames()) + "x" +
                              std::to_string(x0_hat.bins()) + " grid for a " + std::to_string(x.frames()) +
                              "x" + std::to_string(x.bins()) + " state");
    for (const auto& v : x0_hat) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw NumericalError("denoiser produced a non-finite value at t=" + std::to_string(t));
    }
    x = reverse_step(x, x0_hat, noise, sch, t, cfg, rng);
  }
  result.final_state = std::move(x);
  return result;
}

}  // namespace gdse
