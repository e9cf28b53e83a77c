#include "gdse/train.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "gdse/checkpoint.hpp"
#include "gdse/diffusion.hpp"
#include "gdse/errors.hpp"

namespace gdse {

namespace {

constexpr std::uint64_t kStepStream = 0x73746570ULL;
constexpr std::uint64_t kInitStream = 0x696e6974ULL;

void zero(nn::Grads& g) {
  for (auto& v : g) std::fill(v.begin(), v.end(), 0.0);
}

std::string checkpoint_name(std::int64_t step) {
  std::ostringstream os;
  os << "ckpt_" << step << ".ckpt";
  return os.str();
}

}  // namespace

std::uint64_t model_init_seed(std::uint64_t seed) { return mix_seed(seed, kInitStream); }

ItemDraw draw_item(const TrainPair& pair, const NoiseSchedule& sch, Rng& rng) {
  ItemDraw d;
  d.t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(sch.steps())));
  d.z = ComplexGrid(pair.y.frames(), pair.y.bins());
  for (auto& v : d.z) v = rng.complex_normal();
  return d;
}

double diffusion_loss(const Denoiser& denoiser, const TrainPair& pair, const GuidanceField& g,
                      const ItemDraw& draw, const NoiseSchedule& sch) {
  const auto& x0 = pair.x0.values;
  const ComplexGrid x_t = forward_marginal_with_noise(x0, pair.y.values, g, sch, draw.t, draw.z);
  const ComplexGrid f = denoiser.predict(x_t, pair.y.values, g, draw.t);
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += std::norm(f[i] - x0[i]);
  return acc / static_cast<double>(f.size());
}

double cmen_loss(const Mask& m, const TrainPair& pair) {
  const auto& x0 = pair.x0.values;
  const auto& y = pair.y.values;
  if (!m.values.same_shape(y)) throw ContractViolation("cmen_loss: mask shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += std::norm(m.values[i] * y[i] - x0[i]);
  return acc / static_cast<double>(y.size());
}

ItemLosses accumulate_item(const Model& model, const TrainPair& pair, const ItemDraw& draw,
                           const NoiseSchedule& sch, double diffusion_weight, double cmen_weight, double scale,
                           nn::Grads& g_cmen, nn::Grads& g_den) {
  const auto& x0 = pair.x0.values;
  const auto& y = pair.y.values;
  if (!x0.same_shape(y)) throw ContractViolation("training item: x0 and y shapes differ");
  const double n = static_cast<double>(y.size());

  MaskEstimator::Trace ctrace;
  const Mask m = model.cmen.forward(y, &ctrace);
  // Detached copy: nothing computed from `g` flows back into the mask network.
  const GuidanceField g = guidance_from_mask(m);

  const ComplexGrid x_t = forward_marginal_with_noise(x0, y, g, sch, draw.t, draw.z);
  DiffusionDenoiser::Trace dtrace;
  const ComplexGrid f = model.denoiser.forward(x_t, y, g, draw.t, &dtrace);

  ItemLosses out;
  ComplexGrid grad_f(f.frames(), f.bins());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Complex d = f[i] - x0[i];
    out.diffusion += std::norm(d);
    grad_f[i] = (2.0 * diffusion_weight * scale / n) * d;
  }
  out.diffusion /= n;

  RealGrid grad_m(y.frames(), y.bins());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const Complex r = m.values[i] * y[i] - x0[i];
    out.cmen += std::norm(r);
    grad_m[i] = (2.0 * cmen_weight * scale / n) * (r.real() * y[i].real() + r.imag() * y[i].imag());
  }
  out.cmen /= n;

  if (!std::isfinite(out.diffusion) || !std::isfinite(out.cmen)) return out;
  model.denoiser.backward(dtrace, grad_f, g_den);
  model.cmen.backward(ctrace, grad_m, g_cmen);
  return out;
}

Optimizers::Optimizers(const Model& model, double learning_rate) {
  nn::AdamConfig c;
  c.learning_rate = learning_rate;
  cmen = nn::Adam(model.cmen.params(), c);
  denoiser = nn::Adam(model.denoiser.params(), c);
}

LossReport training_step(Model& model, Optimizers& opt, const std::vector<const TrainPair*>& batch,
                         const NoiseSchedule& sch, const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  if (batch.empty()) throw InvalidInputError("training_step: empty batch");
  nn::Grads g_cmen = nn::make_grads(model.cmen.params());
  nn::Grads g_den = nn::make_grads(model.denoiser.params());
  zero(g_cmen);
  zero(g_den);

  LossReport rep;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const TrainPair* pair : batch) {
    const ItemDraw draw = draw_item(*pair, sch, rng);
    auto fail = [&](const std::string& detail) {
      std::ostringstream os;
      os << "non-finite training loss (t=" << draw.t << ", snr_db=" << pair->snr_db << ", item='" << pair->id
         << "')" << detail;
      throw NumericalError(os.str());
    };
    ItemLosses l;
    try {
      l = accumulate_item(model, *pair, draw, sch, cfg.diffusion_weight, cfg.cmen_weight, scale, g_cmen, g_den);
    } catch (const NumericalError& e) {
      fail(std::string(": ") + e.what());
    }
    if (!std::isfinite(l.diffusion) || !std::isfinite(l.cmen)) fail("");
    rep.diffusion_loss += l.diffusion * scale;
    rep.cmen_loss += l.cmen * scale;
    rep.t_drawn.push_back(draw.t);
  }
  rep.total = cfg.diffusion_weight * rep.diffusion_loss + cfg.cmen_weight * rep.cmen_loss;

  opt.denoiser.step(model.denoiser.params(), g_den);
  if (cfg.cmen_weight != 0.0) opt.cmen.step(model.cmen.params(), g_cmen);
  return rep;
}

TrainResult train_loop(Model& model, const RunConfig& cfg, const PairSource& source, std::size_t count,
                       const std::filesystem::path& out_dir, std::ostream* progress) {
  cfg.validate();
  if (count == 0) throw InvalidInputError("train_loop: no training items");
  const NoiseSchedule sch = NoiseSchedule::geometric(cfg.schedule);
  if (model.denoiser.steps() != sch.steps()) throw ConfigMismatchError("train_loop: model built for a different T");
  Optimizers opt(model, cfg.train.learning_rate);

  CheckpointMeta meta{model.config, cfg.spectral, cfg.schedule, cfg.sample_rate, 0};
  TrainResult result;
  std::ofstream log;
  const bool files = !out_dir.empty();
  if (files) {
    std::filesystem::create_directories(out_dir);
    std::ofstream conf(out_dir / "config.json");
    Json echo = to_json(cfg);
    echo["net"] = to_json(model.config);
    conf << echo.dump(2) << "\n";
    if (!conf) throw IoError("cannot write " + (out_dir / "config.json").string());
    log.open(out_dir / "loss_log.jsonl", std::ios::trunc);
    if (!log) throw IoError("cannot write " + (out_dir / "loss_log.jsonl").string());
    result.checkpoint = out_dir / checkpoint_name(0);
    save_checkpoint(result.checkpoint, model, meta);
  }

  const Rng step_base(mix_seed(cfg.train.seed, kStepStream));
  std::uint64_t epoch = 0;
  std::size_t pos = 0;
  std::vector<std::size_t> order = epoch_order(count, cfg.train.seed, epoch);
  int streak = 0;

  for (std::int64_t s = 1; s <= cfg.train.steps; ++s) {
    std::vector<TrainPair> pairs;
    pairs.reserve(static_cast<std::size_t>(cfg.train.batch_size));
    for (int b = 0; b < cfg.train.batch_size; ++b) {
      if (pos == count) {
        order = epoch_order(count, cfg.train.seed, ++epoch);
        pos = 0;
      }
      pairs.push_back(source(order[pos++], epoch));
    }
    std::vector<const TrainPair*> batch;
    for (const auto& p : pairs) batch.push_back(&p);

    Rng rng = step_base.split(static_cast<std::uint64_t>(s));
    LossReport rep;
    try {
      rep = training_step(model, opt, batch, sch, cfg.train, rng);
      streak = 0;
    } catch (const NumericalError& e) {
      if (files) log << Json{{"step", s}, {"error", e.what()}}.dump() << "\n";
      if (++streak >= cfg.train.nonfinite_streak)
        throw NumericalError("training aborted after " + std::to_string(streak) + " non-finite steps; last: " +
                             e.what());
      continue;
    }
    if (files) {
      log << Json{{"step", s},
                  {"diffusion_loss", rep.diffusion_loss},
                  {"cmen_loss", rep.cmen_loss},
                  {"total", rep.total},
                  {"t", rep.t_drawn}}
                 .dump()
          << "\n";
      if (cfg.train.checkpoint_every > 0 && s % cfg.train.checkpoint_every == 0 && s != cfg.train.steps) {
        meta.step = s;
        save_checkpoint(out_dir / checkpoint_name(s), model, meta);
      }
    }
    if (progress && (s == 1 || s % 100 == 0 || s == cfg.train.steps))
      *progress << "step " << s << "  diffusion " << rep.diffusion_loss << "  cmen " << rep.cmen_loss << "\n";
    result.history.push_back(std::move(rep));
  }

  if (files && cfg.train.steps > 0) {
    meta.step = cfg.train.steps;
    result.checkpoint = out_dir / checkpoint_name(cfg.train.steps);
    save_checkpoint(result.checkpoint, model, meta);
  }
  if (files && !log) throw IoError("failed writing loss log in " + out_dir.string());
  return result;
}

TrainResult train_loop(const RunConfig& cfg, const std::vector<ManifestEntry>& manifest,
                       const std::filesystem::path& out_dir, std::ostream* progress) {
  cfg.validate();
  if (manifest.empty()) throw InvalidInputError("train_loop: manifest is empty");
  DataConfig data;
  data.spectral = cfg.spectral;
  data.sample_rate = cfg.sample_rate;
  data.crop_seconds = cfg.train.crop_seconds;

  std::map<std::size_t, TrainPair> cache;
  std::uint64_t cached_epoch = 0;
  const PairSource source = [&](std::size_t index, std::uint64_t epoch) {
    if (epoch != cached_epoch) {
      cache.clear();
      cached_epoch = epoch;
    }
    auto it = cache.find(index);
    if (it == cache.end()) {
      const std::uint64_t seed = mix_seed(mix_seed(cfg.train.seed, epoch), index);
      it = cache.emplace(index, make_pair(manifest[index], seed, data)).first;
    }
    return it->second;
  };

  Model model(cfg.net, cfg.schedule.steps, model_init_seed(cfg.train.seed));
  return train_loop(model, cfg, source, manifest.size(), out_dir, progress);
}

}  // namespace gdse
