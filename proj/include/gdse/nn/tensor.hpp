#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gdse::nn {

// Channels x height x width activation, channel planes contiguous.
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const noexcept { return data.size(); }

  std::span<double> plane(int c) { return {data.data() + c * plane_size(), plane_size()}; }
  std::span<const double> plane(int c) const { return {data.data() + c * plane_size(), plane_size()}; }

  double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }

  bool same_shape(const Tensor& o) const noexcept {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

// A trainable array. `slot` indexes the owning network's gradient buffers.
struct Param {
  std::string name;
  std::vector<double> value;
  int slot = -1;
};

// Gradient buffers, one per parameter slot.
using Grads = std::vector<std::vector<double>>;

Grads make_grads(const std::vector<const Param*>& params);
Grads make_grads(const std::vector<Param*>& params);
std::size_t count_values(const std::vector<const Param*>& params);

}  // namespace gdse::nn
