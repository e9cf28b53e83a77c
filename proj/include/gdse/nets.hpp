#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gdse/diffusion.hpp"
#include "gdse/grid.hpp"
#include "gdse/guidance.hpp"
#include "gdse/nn/unet.hpp"

namespace gdse {

// Sizes of the two trainable networks. Presets: desk() trains on a CPU in
// minutes, paper() is full size (about 3.6e6 + 0.9e6 parameters), toy() is for
// gradient checks.
struct NetConfig {
  std::string preset = "desk";
  int base_width = 8;
  std::vector<int> denoiser_mult{1, 2, 4};
  int denoiser_blocks = 1;
  int cmen_width = 8;
  std::vector<int> cmen_mult{1, 2, 4};
  int cmen_blocks = 1;
  int temb_dim = 16;

  static NetConfig desk();
  static NetConfig paper();
  static NetConfig toy();
  static NetConfig from_preset(const std::string& name);

  void validate() const;
  bool operator==(const NetConfig&) const = default;
};

// Sinusoidal features of the normalized step t / T.
std::vector<double> timestep_embedding(int t, int steps, int dim);

std::size_t count_params(const std::vector<const nn::Param*>& params);

// Coarse mask estimator: (Re y, Im y) planes -> mask in (0, 1) through a
// terminal sigmoid.
class MaskEstimator {
 public:
  MaskEstimator() = default;
  explicit MaskEstimator(const NetConfig& cfg);

  void init(Rng& rng) { net_.init(rng); }

  struct Trace {
    nn::UNet::Trace net;
    RealGrid mask;
    std::vector<double> logits;
  };

  Mask forward(const ComplexGrid& y) const { return forward(y, nullptr); }
  Mask forward(const ComplexGrid& y, Trace* trace) const;
  // Accumulates parameter gradients for dL/dmask.
  void backward(const Trace& trace, const RealGrid& grad_mask, nn::Grads& grads) const;

  std::vector<nn::Param*> params() { return net_.params(); }
  std::vector<const nn::Param*> params() const { return net_.params(); }
  std::size_t count_params() const { return gdse::count_params(params()); }

 private:
  nn::UNet net_;
};

// Diffusion denoiser: (x_t, y, g, t) -> estimate of x0. Input planes are
// Re x_t, Im x_t, Re y, Im y, g; output planes are Re, Im of the estimate.
class DiffusionDenoiser : public Denoiser {
 public:
  DiffusionDenoiser() = default;
  DiffusionDenoiser(const NetConfig& cfg, int steps);

  void init(Rng& rng) { net_.init(rng); }

  struct Trace {
    nn::UNet::Trace net;
  };

  ComplexGrid predict(const ComplexGrid& x_t, const ComplexGrid& y, const GuidanceField& g,
                      int t) const override {
    return forward(x_t, y, g, t, nullptr);
  }
  ComplexGrid forward(const ComplexGrid& x_t, const ComplexGrid& y, const GuidanceField& g, int t,
                      Trace* trace) const;
  void backward(const Trace& trace, const ComplexGrid& grad_out, nn::Grads& grads) const;

  int steps() const noexcept { return steps_; }
  int temb_dim() const noexcept { return net_.spec().temb_dim; }
  std::vector<nn::Param*> params() { return net_.params(); }
  std::vector<const nn::Param*> params() const { return net_.params(); }
  std::size_t count_params() const { return gdse::count_params(params()); }

 private:
  nn::UNet net_;
  int steps_ = 0;
};

// Both trainable components together with the configuration they were
// built from.
struct Model {
  NetConfig config;
  MaskEstimator cmen;
  DiffusionDenoiser denoiser;

  Model() = default;
  Model(const NetConfig& cfg, int steps, std::uint64_t init_seed);
};

}  // namespace gdse
