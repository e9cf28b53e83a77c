#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gdse/checkpoint.hpp"
#include "gdse/config.hpp"
#include "gdse/data.hpp"
#include "gdse/enhance.hpp"
#include "gdse/errors.hpp"
#include "gdse/image.hpp"
#include "gdse/metrics.hpp"
#include "gdse/runtime.hpp"
#include "gdse/schedule.hpp"
#include "gdse/train.hpp"
#include "gdse/wav.hpp"

namespace fs = std::filesystem;
using namespace gdse;

namespace {

struct SamplerFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> guidance;
  std::optional<std::string> variance_mode;
  std::optional<std::string> prior_std;
  bool noise_free = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Sampler seed");
    cmd->add_option("--guidance", guidance, "anisotropic | isotropic | none");
    cmd->add_option("--variance-mode", variance_mode, "paper | exact_posterior");
    cmd->add_option("--prior-std", prior_std, "paper | marginal");
    cmd->add_flag("--noise-free", noise_free, "Remove all sampling noise");
  }

  void apply(RunConfig& c) const {
    if (seed) c.sampler.seed = c.train.seed = *seed;
    if (guidance) c.sampler.guidance_mode = guidance_mode_from_string(*guidance);
    if (variance_mode) c.sampler.variance_mode = variance_mode_from_string(*variance_mode);
    if (prior_std) c.sampler.prior_std = prior_std_from_string(*prior_std);
    if (noise_free) c.sampler.noise_free = true;
  }
};

RunConfig base_config(const std::optional<fs::path>& config_path) {
  RunConfig c;
  if (config_path) c = load_run_config(*config_path, c);
  return c;
}

// With an explicit config the checkpoint must agree with it; otherwise the
// checkpoint's own settings are adopted.
LoadedCheckpoint open_checkpoint(const fs::path& path, RunConfig& cfg, bool have_config, bool allow_mismatch) {
  LoadedCheckpoint ck = have_config ? load_checkpoint(path, cfg.spectral, cfg.schedule, allow_mismatch)
                                    : load_checkpoint(path);
  cfg.spectral = ck.meta.spectral;
  cfg.schedule = ck.meta.schedule;
  cfg.sample_rate = ck.meta.sample_rate;
  cfg.net = ck.meta.net;
  return ck;
}

void write_json(const fs::path& path, const Json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("cannot write " + path.string());
}

Json echo(const RunConfig& c) {
  Json j = to_json(c);
  j["net"] = to_json(c.net);
  return j;
}

int cmd_train(const std::optional<fs::path>& config_path, const fs::path& manifest,
              const std::optional<fs::path>& val_manifest, const fs::path& out, const SamplerFlags& flags,
              const std::optional<std::int64_t>& steps, const std::optional<std::string>& preset) {
  RunConfig cfg = base_config(config_path);
  flags.apply(cfg);
  if (steps) cfg.train.steps = *steps;
  if (preset) cfg.net = NetConfig::from_preset(*preset);
  cfg.validate();
  const auto entries = load_manifest(manifest);
  const auto val_entries = val_manifest ? load_manifest(*val_manifest) : std::vector<ManifestEntry>{};
  if (entries.empty()) throw InvalidInputError("training manifest is empty: " + manifest.string());
  const TrainResult r = train_loop(cfg, entries, out, &std::cerr);
  std::cout << "checkpoint: " << r.checkpoint.string() << "\n";
  if (!val_entries.empty()) {
    const LoadedCheckpoint ck = load_checkpoint(r.checkpoint, cfg.spectral, cfg.schedule);
    const MetricReport rep = evaluate(val_entries, ck, cfg);
    write_json(out / "val_report.json", to_json(rep));
    std::cout << "validation: mean SI-SNR improvement " << rep.overall.mean_improvement << " dB over "
              << rep.overall.count << " items\n";
  }
  return 0;
}

int cmd_enhance(const std::optional<fs::path>& config_path, const fs::path& ckpt, const fs::path& in,
                const fs::path& out, const SamplerFlags& flags, bool allow_mismatch) {
  RunConfig cfg = base_config(config_path);
  flags.apply(cfg);
  const Waveform noisy = read_wav(in);
  const LoadedCheckpoint ck = open_checkpoint(ckpt, cfg, config_path.has_value(), allow_mismatch);
  const EnhanceResult r = enhance(noisy, ck, cfg.sampler);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_wav(out, r.enhanced);
  Json side = echo(cfg);
  side["steps_used"] = r.steps_used;
  side["seed"] = r.seed;
  write_json(fs::path(out.string() + ".json"), side);
  std::cout << "denoiser_evaluations: " << r.steps_used << "\n"
            << "steps_used: " << r.steps_used << "\n"
            << "seed: " << r.seed << "\n"
            << "config: " << to_json(cfg).dump() << "\n";
  return 0;
}

int cmd_evaluate(const std::optional<fs::path>& config_path, const fs::path& ckpt, const fs::path& manifest,
                 const fs::path& report, const SamplerFlags& flags, bool allow_mismatch) {
  RunConfig cfg = base_config(config_path);
  flags.apply(cfg);
  const auto entries = load_manifest(manifest);
  if (entries.empty()) throw InvalidInputError("evaluation manifest is empty: " + manifest.string());
  const LoadedCheckpoint ck = open_checkpoint(ckpt, cfg, config_path.has_value(), allow_mismatch);
  const MetricReport rep = evaluate(entries, ck, cfg);
  write_json(report, to_json(rep));
  std::size_t failed = 0;
  for (const auto& it : rep.items) failed += it.error ? 1 : 0;
  std::cout << "items: " << rep.items.size() << " (failed " << failed << ")\n"
            << "mean SI-SNR noisy " << rep.overall.mean_si_snr_noisy << " dB, enhanced "
            << rep.overall.mean_si_snr_enhanced << " dB\n";
  return 0;
}

int cmd_schedule(const std::optional<fs::path>& config_path, const std::optional<fs::path>& dump) {
  const RunConfig cfg = base_config(config_path);
  const NoiseSchedule sch = NoiseSchedule::geometric(cfg.schedule);
  Json steps = Json::array();
  for (int t = 1; t <= sch.steps(); ++t) {
    steps.push_back(Json{{"t", t},
                         {"alpha_bar", sch.alpha_bar(t)},
                         {"alpha", sch.alpha(t)},
                         {"beta", sch.beta(t)},
                         {"reverse_std_paper", sch.reverse_std_coeff(t, VarianceMode::paper)},
                         {"reverse_std_exact_posterior", sch.reverse_std_coeff(t, VarianceMode::exact_posterior)}});
  }
  const Json doc{{"config_echo", to_json(cfg)}, {"schedule", to_json(cfg.schedule)}, {"steps", steps}};
  if (dump) {
    write_json(*dump, doc);
  } else {
    std::cout << doc.dump(2) << "\n";
  }
  return 0;
}

int cmd_visualize(const fs::path& in, const std::optional<fs::path>& clean, const std::optional<fs::path>& ckpt,
                  const fs::path& out, const std::optional<fs::path>& config_path, std::uint64_t seed) {
  RunConfig cfg = base_config(config_path);
  VisualizeInputs vi;
  vi.noisy = read_wav(in);
  if (clean) vi.clean = read_wav(*clean);
  if (ckpt) vi.checkpoint = open_checkpoint(*ckpt, cfg, config_path.has_value(), false);
  vi.spectral = cfg.spectral;
  vi.seed = seed;
  const auto paths = visualize(vi, out);
  Json j = echo(cfg);
  j["seed"] = seed;
  Json panels = Json::array();
  for (const auto& p : paths) panels.push_back(p.filename().string());
  j["panels"] = panels;
  write_json(out / "panels.json", j);
  for (const auto& p : paths) std::cout << p.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  tune_runtime();
  CLI::App app{"Guided diffusion speech enhancement"};
  app.require_subcommand(1);

  std::optional<fs::path> config_path, val_manifest, clean_path, ckpt_opt, dump;
  fs::path manifest, out, ckpt, in, report;
  std::optional<std::int64_t> steps;
  std::optional<std::string> preset;
  bool allow_mismatch = false;
  std::uint64_t vis_seed = 0;
  SamplerFlags flags;

  auto* train = app.add_subcommand("train", "Train both networks from a manifest");
  train->add_option("--config", config_path, "Run config (JSON)");
  train->add_option("--manifest", manifest, "Training manifest (CSV)")->required();
  train->add_option("--val-manifest", val_manifest, "Validation manifest evaluated after training");
  train->add_option("--out", out, "Output directory")->required();
  train->add_option("--steps", steps, "Override the number of optimizer steps");
  train->add_option("--net-preset", preset, "desk | paper | toy");
  flags.add_to(train);

  auto* enh = app.add_subcommand("enhance", "Enhance one WAV file");
  enh->add_option("--config", config_path, "Run config (JSON)");
  enh->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
  enh->add_option("--in", in, "Noisy input WAV")->required();
  enh->add_option("--out", out, "Enhanced output WAV")->required();
  enh->add_flag("--allow-config-mismatch", allow_mismatch, "Accept a checkpoint whose settings differ from --config");
  flags.add_to(enh);

  auto* ev = app.add_subcommand("evaluate", "Score a checkpoint on a manifest");
  ev->add_option("--config", config_path, "Run config (JSON)");
  ev->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
  ev->add_option("--manifest", manifest, "Evaluation manifest (CSV)")->required();
  ev->add_option("--report", report, "Output report (JSON)")->required();
  ev->add_flag("--allow-config-mismatch", allow_mismatch, "Accept a checkpoint whose settings differ from --config");
  flags.add_to(ev);

  auto* sch = app.add_subcommand("schedule", "Print or dump the noise schedule");
  sch->add_option("--config", config_path, "Run config (JSON)");
  sch->add_option("--dump", dump, "Write the schedule as JSON to this path");

  auto* vis = app.add_subcommand("visualize", "Write log-magnitude spectrogram images");
  vis->add_option("--in", in, "Noisy input WAV")->required();
  vis->add_option("--clean", clean_path, "Clean reference WAV");
  vis->add_option("--checkpoint", ckpt_opt, "Checkpoint for mask, prior and enhanced panels");
  vis->add_option("--out", out, "Output directory")->required();
  vis->add_option("--config", config_path, "Run config (JSON)");
  vis->add_option("--seed", vis_seed, "Sampler seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train) return cmd_train(config_path, manifest, val_manifest, out, flags, steps, preset);
    if (*enh) return cmd_enhance(config_path, ckpt, in, out, flags, allow_mismatch);
    if (*ev) return cmd_evaluate(config_path, ckpt, manifest, report, flags, allow_mismatch);
    if (*sch) return cmd_schedule(config_path, dump);
    if (*vis) return cmd_visualize(in, clean_path, ckpt_opt, out, config_path, vis_seed);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const RuntimeFailure& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
