#pragma once

#include <span>
#include <string>
#include <vector>

#include "gdse/nn/tensor.hpp"
#include "gdse/rng.hpp"

namespace gdse::nn {

// Square-kernel convolution with "same" zero padding (kernel / 2). With
// stride 2 the output is ceil(H/2) x ceil(W/2).
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride);

  void init(Rng& rng, double gain);

  Tensor forward(const Tensor& x) const;
  // Accumulates parameter gradients; writes the input gradient if requested.
  void backward(const Tensor& x, const Tensor& grad_out, Grads& grads, Tensor* grad_in) const;

  void collect(std::vector<Param*>& out) { out.push_back(&weight_); out.push_back(&bias_); }
  void collect(std::vector<const Param*>& out) const { out.push_back(&weight_); out.push_back(&bias_); }

  int in_channels() const noexcept { return in_; }
  int out_channels() const noexcept { return out_; }

 private:
  int out_size(int n) const noexcept { return (n + 2 * (kernel_ / 2) - kernel_) / stride_ + 1; }

  int in_ = 0;
  int out_ = 0;
  int kernel_ = 1;
  int stride_ = 1;
  Param weight_;  // out x in x k x k
  Param bias_;    // out
};

class Linear {
 public:
  Linear() = default;
  Linear(std::string name, int in_features, int out_features);

  void init(Rng& rng, double gain);

  std::vector<double> forward(std::span<const double> x) const;
  void backward(std::span<const double> x, std::span<const double> grad_out, Grads& grads,
                std::vector<double>* grad_in) const;

  void collect(std::vector<Param*>& out) { out.push_back(&weight_); out.push_back(&bias_); }
  void collect(std::vector<const Param*>& out) const { out.push_back(&weight_); out.push_back(&bias_); }

 private:
  int in_ = 0;
  int out_ = 0;
  Param weight_;  // out x in
  Param bias_;
};

double silu(double x);
double silu_grad(double x);
double sigmoid(double x);

Tensor silu(const Tensor& x);
std::vector<double> silu(std::span<const double> x);
// grad_in = silu'(x) * grad_out
Tensor silu_backward(const Tensor& x, const Tensor& grad_out);
std::vector<double> silu_backward(std::span<const double> x, std::span<const double> grad_out);

// Adds bias[c] to every element of plane c.
void add_channel_bias(Tensor& x, std::span<const double> bias);
// Sums each plane of grad into out[c].
void accumulate_channel_sums(const Tensor& grad, std::vector<double>& out);

// Nearest-neighbour 2x upsampling cropped to (height, width).
Tensor upsample2x(const Tensor& x, int height, int width);
Tensor upsample2x_backward(const Tensor& grad_out, int src_height, int src_width);

Tensor concat_channels(const Tensor& a, const Tensor& b);
void split_channels(const Tensor& grad, int first_channels, Tensor& grad_a, Tensor& grad_b);

void add_inplace(Tensor& a, const Tensor& b);

}  // namespace gdse::nn
