#include "gdse/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace gdse::nn {

Adam::Adam(const std::vector<const Param*>& params, AdamConfig cfg)
    : cfg_(cfg), m_(make_grads(params)), v_(make_grads(params)) {}

void Adam::step(const std::vector<Param*>& params, const Grads& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw std::invalid_argument("Adam: parameter layout changed");
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (Param* p : params) {
    const auto s = static_cast<std::size_t>(p->slot);
    auto& m = m_[s];
    auto& v = v_[s];
    const auto& g = grads[s];
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p->value[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }
}

}  // namespace gdse::nn
