#include <doctest.h>

#include <cmath>

#include "gdse/errors.hpp"
#include "gdse/rng.hpp"
#include "gdse/schedule.hpp"

using namespace gdse;

namespace {

// 40-digit evaluations of the default schedule (mpmath), t = 2..6.
constexpr double kAlphaBar[] = {0.0709305748697933745, 0.18995174979700131859, 0.37443705966471612287,
                                0.63876184553991044151, 0.999};
constexpr double kBeta[] = {0.98590170738308985784, 0.62658635708491313381, 0.49270045553960209836,
                            0.41380803772300306744, 0.36059875321330286135};
constexpr double kPaperCoeff[] = {0.058948135598588101441, 0.24185527397597248926, 0.24997335690562638155,
                                  0.24625745960216146199, 0.24008711564467300703};
constexpr double kExactCoeff[] = {0.015699535879947931265, 0.10540888306210548836, 0.15296185280612211361,
                                  0.19681530994223188204, 0.23996704206094638524};

ScheduleSettings random_settings(Rng& rng) {
  ScheduleSettings s;
  s.steps = 2 + static_cast<int>(rng.below(30));
  s.alpha_bar_1 = std::pow(10.0, rng.uniform(-5.0, -0.5));
  s.alpha_bar_T = s.alpha_bar_1 + (1.0 - s.alpha_bar_1) * rng.uniform(0.05, 0.999);
  s.p = rng.uniform(0.05, 3.0);
  s.kappa = rng.uniform(0.01, 2.0);
  return s;
}

}  // namespace

TEST_CASE("default schedule endpoints are exact") {
  const auto s = NoiseSchedule::geometric(ScheduleSettings{});
  CHECK(s.steps() == 6);
  CHECK(s.alpha_bar(1) == 0.001);
  CHECK(s.alpha_bar(6) == 0.999);
  CHECK(s.alpha_bar(0) == 0.0);
  CHECK(s.beta(1) == 1.0);
}

TEST_CASE("default schedule matches the high-precision oracle") {
  const auto s = NoiseSchedule::geometric(ScheduleSettings{});
  for (int t = 2; t <= 6; ++t) {
    CHECK(std::abs(s.alpha_bar(t) - kAlphaBar[t - 2]) < 1e-15);
    CHECK(std::abs(s.beta(t) - kBeta[t - 2]) < 1e-14);
    CHECK(std::abs(s.reverse_std_coeff(t, VarianceMode::paper) - kPaperCoeff[t - 2]) < 1e-14);
    CHECK(std::abs(s.reverse_std_coeff(t, VarianceMode::exact_posterior) - kExactCoeff[t - 2]) < 1e-14);
  }
  CHECK(s.reverse_std_coeff(6, VarianceMode::paper) == doctest::Approx(0.2401).epsilon(1e-3));
  CHECK(s.reverse_std_coeff(6, VarianceMode::exact_posterior) == doctest::Approx(0.2400).epsilon(1e-3));
}

TEST_CASE("reverse coefficient vanishes at t = 1") {
  const auto s = NoiseSchedule::geometric(ScheduleSettings{});
  CHECK(s.reverse_std_coeff(1, VarianceMode::paper) == 0.0);
  CHECK(s.reverse_std_coeff(1, VarianceMode::exact_posterior) == 0.0);
}

TEST_CASE("property: schedule invariants over random configurations") {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const ScheduleSettings cfg = random_settings(rng);
    const auto s = NoiseSchedule::geometric(cfg);
    CHECK(s.alpha_bar(1) == cfg.alpha_bar_1);
    CHECK(s.alpha_bar(cfg.steps) == cfg.alpha_bar_T);
    CHECK(s.beta(1) == 1.0);
    double sum = 0.0;
    for (int t = 1; t <= cfg.steps; ++t) {
      if (t > 1) CHECK(s.alpha_bar(t) > s.alpha_bar(t - 1));
      CHECK(s.alpha(t) > 0.0);
      CHECK(s.beta(t) > 0.0);
      CHECK(s.beta(t) <= 1.0);
      CHECK(s.reverse_std_coeff(t, VarianceMode::paper) >= 0.0);
      CHECK(s.reverse_std_coeff(t, VarianceMode::exact_posterior) >= 0.0);
      sum += s.alpha(t);
    }
    CHECK(std::abs(sum - s.alpha_bar(cfg.steps)) < 1e-12);
  }
}

TEST_CASE("property: p = 1 gives a constant ratio") {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    ScheduleSettings cfg = random_settings(rng);
    cfg.p = 1.0;
    const auto s = NoiseSchedule::geometric(cfg);
    const double r = s.alpha_bar(2) / s.alpha_bar(1);
    for (int t = 2; t < cfg.steps; ++t) CHECK(std::abs(s.alpha_bar(t + 1) / s.alpha_bar(t) - r) < 1e-12 * r);
  }
}

TEST_CASE("invalid schedule settings name the field") {
  auto field_of = [](ScheduleSettings s) {
    try {
      (void)NoiseSchedule::geometric(s);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  ScheduleSettings s;
  s.steps = 1;
  CHECK(field_of(s) == "T");
  s = {};
  s.alpha_bar_1 = 0.0;
  CHECK(field_of(s) == "alpha_bar_1");
  s = {};
  s.alpha_bar_T = 1.0;
  CHECK(field_of(s) == "alpha_bar_T");
  s = {};
  s.alpha_bar_T = 0.0005;
  CHECK(field_of(s) != "<none>");
  s = {};
  s.p = 0.0;
  CHECK(field_of(s) == "p");
  s = {};
  s.kappa = -1.0;
  CHECK(field_of(s) == "kappa");
}

TEST_CASE("out-of-range steps raise index errors") {
  const auto s = NoiseSchedule::geometric(ScheduleSettings{});
  CHECK_THROWS_AS(s.alpha(0), IndexError);
  CHECK_THROWS_AS(s.beta(7), IndexError);
  CHECK_THROWS_AS(s.alpha_bar(-1), IndexError);
  CHECK_THROWS_AS(s.reverse_std_coeff(0, VarianceMode::paper), IndexError);
  CHECK_THROWS_AS(s.reverse_std_coeff(7, VarianceMode::exact_posterior), IndexError);
}

TEST_CASE("variance mode names round trip") {
  for (auto m : {VarianceMode::paper, VarianceMode::exact_posterior})
    CHECK(variance_mode_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(variance_mode_from_string("bogus"), ConfigError);
}
