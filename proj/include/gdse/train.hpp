#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "gdse/config.hpp"
#include "gdse/data.hpp"
#include "gdse/nets.hpp"
#include "gdse/nn/adam.hpp"
#include "gdse/schedule.hpp"

namespace gdse {

struct LossReport {
  double diffusion_loss = 0.0;  // batch means
  double cmen_loss = 0.0;
  double total = 0.0;           // weighted sum
  std::vector<int> t_drawn;     // one per batch item
};

// Random quantities of one training item: the timestep and the unit
// complex noise used to draw x_t.
struct ItemDraw {
  int t = 1;
  ComplexGrid z;
};

ItemDraw draw_item(const TrainPair& pair, const NoiseSchedule& sch, Rng& rng);

// mean |f(x_t, y, g, t) - x0|^2 with x_t built from (x0, y, g, draw). `g`
// is a constant here: the mask network does not enter this term.
double diffusion_loss(const Denoiser& denoiser, const TrainPair& pair, const GuidanceField& g,
                      const ItemDraw& draw, const NoiseSchedule& sch);

// mean |m * y - x0|^2.
double cmen_loss(const Mask& m, const TrainPair& pair);

struct ItemLosses {
  double diffusion = 0.0;
  double cmen = 0.0;
};

// Forward and backward for one item. Gradients scaled by `scale` are added
// to the two buffers. The guidance fed to the diffusion branch is a
// detached copy of 1 - cmen(y), so only the CMEN term reaches g_cmen.
ItemLosses accumulate_item(const Model& model, const TrainPair& pair, const ItemDraw& draw,
                           const NoiseSchedule& sch, double diffusion_weight, double cmen_weight, double scale,
                           nn::Grads& g_cmen, nn::Grads& g_den);

struct Optimizers {
  nn::Adam cmen;
  nn::Adam denoiser;

  Optimizers() = default;
  Optimizers(const Model& model, double learning_rate);
};

// One update on a batch. Throws NumericalError (naming t, snr and item id)
// before touching any parameter if a loss is non-finite. With
// cmen_weight = 0 the mask network is left untouched.
LossReport training_step(Model& model, Optimizers& opt, const std::vector<const TrainPair*>& batch,
                         const NoiseSchedule& sch, const TrainConfig& cfg, Rng& rng);

// Produces the training pair for item `index` in `epoch`.
using PairSource = std::function<TrainPair(std::size_t index, std::uint64_t epoch)>;

struct TrainResult {
  std::filesystem::path checkpoint;  // empty when out_dir is empty
  std::vector<LossReport> history;
};

// Seeded batching over `count` items, JSON-lines loss log, periodic and
// final checkpoints. An empty out_dir skips all file output.
TrainResult train_loop(Model& model, const RunConfig& cfg, const PairSource& source, std::size_t count,
                       const std::filesystem::path& out_dir, std::ostream* progress = nullptr);

// Manifest-driven variant: pairs are rebuilt every epoch from
// (entry, seed, epoch).
TrainResult train_loop(const RunConfig& cfg, const std::vector<ManifestEntry>& manifest,
                       const std::filesystem::path& out_dir, std::ostream* progress = nullptr);

std::uint64_t model_init_seed(std::uint64_t seed);

}  // namespace gdse
