#pragma once

#include <string>
#include <vector>

namespace gdse {

// Inputs to the geometric schedule. Field names follow the run-config keys.
struct ScheduleSettings {
  int steps = 6;
  double alpha_bar_1 = 0.001;
  double alpha_bar_T = 0.999;
  double p = 0.3;
  double kappa = 0.5;

  bool operator==(const ScheduleSettings&) const = default;
};

enum class VarianceMode { paper, exact_posterior };

std::string to_string(VarianceMode m);
VarianceMode variance_mode_from_string(const std::string& name);

// Residual-shift noise schedule, indexed 1..T. alpha_bar(0) is 0.
//
//   alpha_bar_t = alpha_bar_1 * (alpha_bar_T / alpha_bar_1)^(((t-1)/(T-1))^p)
//   alpha_t     = alpha_bar_t - alpha_bar_{t-1}
//   beta_t      = alpha_t / alpha_bar_t
class NoiseSchedule {
 public:
  static NoiseSchedule geometric(const ScheduleSettings& s);
  static NoiseSchedule geometric(int steps, double alpha_bar_1, double alpha_bar_T, double p, double kappa) {
    return geometric(ScheduleSettings{steps, alpha_bar_1, alpha_bar_T, p, kappa});
  }

  const ScheduleSettings& settings() const noexcept { return settings_; }
  int steps() const noexcept { return settings_.steps; }
  double kappa() const noexcept { return settings_.kappa; }

  double alpha_bar(int t) const;  // t in 0..T
  double alpha(int t) const;      // t in 1..T
  double beta(int t) const;       // t in 1..T

  // Scalar multiplying the guidance field to give the reverse-step std:
  //   paper:           kappa * sqrt(beta_t (1 - beta_t))
  //   exact_posterior: kappa * sqrt(beta_t alpha_bar_{t-1})
  double reverse_std_coeff(int t, VarianceMode mode) const;

 private:
  void check_step(int t) const;

  ScheduleSettings settings_;
  std::vector<double> alpha_bar_;  // index 0..T
  std::vector<double> alpha_;
  std::vector<double> beta_;
};

}  // namespace gdse
