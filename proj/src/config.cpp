#include "gdse/config.hpp"

#include <fstream>
#include <set>

#include "gdse/errors.hpp"

namespace gdse {

namespace {

template <typename T>
T get(const Json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(key, std::string("bad or missing value (") + e.what() + ")");
  }
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where, "expected an object");
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ConfigError(key, "unknown key in " + where);
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size <= 0) throw ConfigError("batch_size", "must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate", "must be positive");
  if (steps < 0) throw ConfigError("steps", "must be non-negative");
  if (!(diffusion_weight >= 0.0)) throw ConfigError("diffusion_weight", "must be non-negative");
  if (!(cmen_weight >= 0.0)) throw ConfigError("cmen_weight", "must be non-negative");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every", "must be non-negative");
  if (nonfinite_streak <= 0) throw ConfigError("nonfinite_streak", "must be positive");
}

void RunConfig::validate() const {
  if (sample_rate <= 0) throw ConfigError("sample_rate", "must be positive");
  spectral.validate();
  (void)NoiseSchedule::geometric(schedule);
  net.validate();
  train.validate();
}

Json to_json(const SpectralConfig& c) {
  return Json{{"fft_size", c.fft_size},           {"hop", c.hop},
              {"window", to_string(c.window)},    {"comp_exponent", c.comp_exponent},
              {"comp_scale", c.comp_scale},       {"center_pad", c.center_pad}};
}

Json to_json(const ScheduleSettings& s) {
  return Json{{"T", s.steps}, {"alpha_bar_1", s.alpha_bar_1}, {"alpha_bar_T", s.alpha_bar_T},
              {"p", s.p},     {"kappa", s.kappa}};
}

Json to_json(const NetConfig& c) {
  return Json{{"preset", c.preset},       {"base_width", c.base_width},
              {"denoiser_mult", c.denoiser_mult}, {"denoiser_blocks", c.denoiser_blocks},
              {"cmen_width", c.cmen_width}, {"cmen_mult", c.cmen_mult},
              {"cmen_blocks", c.cmen_blocks}, {"temb_dim", c.temb_dim}};
}

Json to_json(const SamplerConfig& c) {
  return Json{{"guidance_mode", to_string(c.guidance_mode)},
              {"variance_mode", to_string(c.variance_mode)},
              {"prior_std", to_string(c.prior_std)},
              {"noise_free", c.noise_free},
              {"seed", c.seed}};
}

SpectralConfig spectral_from_json(const Json& j) {
  reject_unknown(j, {"fft_size", "hop", "window", "comp_exponent", "comp_scale", "center_pad"}, "spectral");
  SpectralConfig c;
  c.fft_size = get<int>(j, "fft_size");
  c.hop = get<int>(j, "hop");
  c.window = window_from_string(get<std::string>(j, "window"));
  c.comp_exponent = get<double>(j, "comp_exponent");
  c.comp_scale = get<double>(j, "comp_scale");
  c.center_pad = get<bool>(j, "center_pad");
  return c;
}

ScheduleSettings schedule_from_json(const Json& j) {
  reject_unknown(j, {"T", "alpha_bar_1", "alpha_bar_T", "p", "kappa"}, "schedule");
  ScheduleSettings s;
  s.steps = get<int>(j, "T");
  s.alpha_bar_1 = get<double>(j, "alpha_bar_1");
  s.alpha_bar_T = get<double>(j, "alpha_bar_T");
  s.p = get<double>(j, "p");
  s.kappa = get<double>(j, "kappa");
  return s;
}

NetConfig net_from_json(const Json& j) {
  reject_unknown(j,
                 {"preset", "base_width", "denoiser_mult", "denoiser_blocks", "cmen_width", "cmen_mult",
                  "cmen_blocks", "temb_dim"},
                 "net");
  NetConfig c;
  c.preset = get<std::string>(j, "preset");
  c.base_width = get<int>(j, "base_width");
  c.denoiser_mult = get<std::vector<int>>(j, "denoiser_mult");
  c.denoiser_blocks = get<int>(j, "denoiser_blocks");
  c.cmen_width = get<int>(j, "cmen_width");
  c.cmen_mult = get<std::vector<int>>(j, "cmen_mult");
  c.cmen_blocks = get<int>(j, "cmen_blocks");
  c.temb_dim = get<int>(j, "temb_dim");
  return c;
}

Json to_json(const RunConfig& c) {
  return Json{{"sample_rate", c.sample_rate},
              {"fft_size", c.spectral.fft_size},
              {"hop", c.spectral.hop},
              {"window", to_string(c.spectral.window)},
              {"comp_exponent", c.spectral.comp_exponent},
              {"comp_scale", c.spectral.comp_scale},
              {"T", c.schedule.steps},
              {"kappa", c.schedule.kappa},
              {"p", c.schedule.p},
              {"alpha_bar_1", c.schedule.alpha_bar_1},
              {"alpha_bar_T", c.schedule.alpha_bar_T},
              {"guidance_mode", to_string(c.sampler.guidance_mode)},
              {"variance_mode", to_string(c.sampler.variance_mode)},
              {"prior_std", to_string(c.sampler.prior_std)},
              {"noise_free", c.sampler.noise_free},
              {"seed", c.train.seed},
              {"batch_size", c.train.batch_size},
              {"learning_rate", c.train.learning_rate},
              {"steps", c.train.steps},
              {"net_preset", c.net.preset},
              {"crop_seconds", c.train.crop_seconds},
              {"diffusion_weight", c.train.diffusion_weight},
              {"cmen_weight", c.train.cmen_weight},
              {"checkpoint_every", c.train.checkpoint_every},
              {"nonfinite_streak", c.train.nonfinite_streak}};
}

RunConfig apply_json(RunConfig c, const Json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "config must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "sample_rate") c.sample_rate = get<int>(j, key);
    else if (key == "fft_size") c.spectral.fft_size = get<int>(j, key);
    else if (key == "hop") c.spectral.hop = get<int>(j, key);
    else if (key == "window") c.spectral.window = window_from_string(get<std::string>(j, key));
    else if (key == "comp_exponent") c.spectral.comp_exponent = get<double>(j, key);
    else if (key == "comp_scale") c.spectral.comp_scale = get<double>(j, key);
    else if (key == "T") c.schedule.steps = get<int>(j, key);
    else if (key == "kappa") c.schedule.kappa = get<double>(j, key);
    else if (key == "p") c.schedule.p = get<double>(j, key);
    else if (key == "alpha_bar_1") c.schedule.alpha_bar_1 = get<double>(j, key);
    else if (key == "alpha_bar_T") c.schedule.alpha_bar_T = get<double>(j, key);
    else if (key == "guidance_mode") c.sampler.guidance_mode = guidance_mode_from_string(get<std::string>(j, key));
    else if (key == "variance_mode") c.sampler.variance_mode = variance_mode_from_string(get<std::string>(j, key));
    else if (key == "prior_std") c.sampler.prior_std = prior_std_from_string(get<std::string>(j, key));
    else if (key == "noise_free") c.sampler.noise_free = get<bool>(j, key);
    else if (key == "seed") c.train.seed = c.sampler.seed = get<std::uint64_t>(j, key);
    else if (key == "batch_size") c.train.batch_size = get<int>(j, key);
    else if (key == "learning_rate") c.train.learning_rate = get<double>(j, key);
    else if (key == "steps") c.train.steps = get<std::int64_t>(j, key);
    else if (key == "net_preset") c.net = NetConfig::from_preset(get<std::string>(j, key));
    else if (key == "crop_seconds") c.train.crop_seconds = get<double>(j, key);
    else if (key == "diffusion_weight") c.train.diffusion_weight = get<double>(j, key);
    else if (key == "cmen_weight") c.train.cmen_weight = get<double>(j, key);
    else if (key == "checkpoint_every") c.train.checkpoint_every = get<std::int64_t>(j, key);
    else if (key == "nonfinite_streak") c.train.nonfinite_streak = get<int>(j, key);
    else throw ConfigError(key, "unknown config key");
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("config not found: " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string(), std::string("parse error: ") + e.what());
  }
  return apply_json(std::move(base), j);
}

}  // namespace gdse
