#pragma once

#include <cstdint>
#include <vector>

#include "gdse/nn/tensor.hpp"

namespace gdse::nn {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. Moment buffers are bound to the slot layout of
// the parameter list passed at construction.
class Adam {
 public:
  Adam() = default;
  Adam(const std::vector<const Param*>& params, AdamConfig cfg);

  void step(const std::vector<Param*>& params, const Grads& grads);

  std::int64_t steps_taken() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return cfg_; }

 private:
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  Grads m_;
  Grads v_;
};

}  // namespace gdse::nn
