#include "gdse/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "gdse/errors.hpp"

namespace gdse {

std::string to_string(VarianceMode m) {
  return m == VarianceMode::paper ? "paper" : "exact_posterior";
}

VarianceMode variance_mode_from_string(const std::string& name) {
  if (name == "paper") return VarianceMode::paper;
  if (name == "exact_posterior") return VarianceMode::exact_posterior;
  throw ConfigError("variance_mode", "expected 'paper' or 'exact_posterior', got '" + name + "'");
}

NoiseSchedule NoiseSchedule::geometric(const ScheduleSettings& s) {
  if (s.steps < 2) throw ConfigError("T", "must be >= 2");
  if (!(s.alpha_bar_1 > 0.0)) throw ConfigError("alpha_bar_1", "must be > 0");
  if (!(s.alpha_bar_1 < s.alpha_bar_T)) throw ConfigError("alpha_bar_T", "must exceed alpha_bar_1");
  if (!(s.alpha_bar_T < 1.0)) throw ConfigError("alpha_bar_T", "must be < 1");
  if (!(s.p > 0.0)) throw ConfigError("p", "must be > 0");
  if (!(s.kappa > 0.0)) throw ConfigError("kappa", "must be > 0");

  NoiseSchedule sch;
  sch.settings_ = s;
  const int T = s.steps;
  sch.alpha_bar_.assign(T + 1, 0.0);
  sch.alpha_.assign(T + 1, 0.0);
  sch.beta_.assign(T + 1, 0.0);

  const double ratio = s.alpha_bar_T / s.alpha_bar_1;
  for (int t = 1; t <= T; ++t) {
    const double frac = static_cast<double>(t - 1) / static_cast<double>(T - 1);
    sch.alpha_bar_[t] = s.alpha_bar_1 * std::pow(ratio, std::pow(frac, s.p));
  }
  // The formula reduces to the bounds at both ends; pin them exactly.
  sch.alpha_bar_[1] = s.alpha_bar_1;
  sch.alpha_bar_[T] = s.alpha_bar_T;

  for (int t = 1; t <= T; ++t) {
    sch.alpha_[t] = sch.alpha_bar_[t] - sch.alpha_bar_[t - 1];
    sch.beta_[t] = sch.alpha_[t] / sch.alpha_bar_[t];
  }
  return sch;
}

void NoiseSchedule::check_step(int t) const {
  if (t < 1 || t > steps())
    throw IndexError("timestep " + std::to_string(t) + " outside 1.." + std::to_string(steps()));
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 0 || t > steps())
    throw IndexError("timestep " + std::to_string(t) + " outside 0.." + std::to_string(steps()));
  return alpha_bar_[t];
}

double NoiseSchedule::alpha(int t) const {
  check_step(t);
  return alpha_[t];
}

double NoiseSchedule::beta(int t) const {
  check_step(t);
  return beta_[t];
}

double NoiseSchedule::reverse_std_coeff(int t, VarianceMode mode) const {
  check_step(t);
  const double b = beta_[t];
  const double var = mode == VarianceMode::paper ? b * (1.0 - b) : b * alpha_bar_[t - 1];
  return kappa() * std::sqrt(std::max(var, 0.0));
}

}  // namespace gdse
