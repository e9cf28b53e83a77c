#pragma once

#include <span>
#include <vector>

#include "gdse/nn/layers.hpp"
#include "gdse/nn/tensor.hpp"
#include "gdse/rng.hpp"

namespace gdse::nn {

struct UNetSpec {
  int in_channels = 1;
  int out_channels = 1;
  int base_width = 8;
  std::vector<int> channel_mult{1, 2, 4};  // one entry per resolution level
  int blocks_per_level = 1;
  int temb_dim = 0;          // 0 disables timestep conditioning
  bool input_skip = false;   // 1x1 linear path from input to output

  bool operator==(const UNetSpec&) const = default;
};

// Residual block: out = x + conv2(silu(conv1(silu(x)) + temb_bias)).
class ResBlock {
 public:
  ResBlock() = default;
  ResBlock(const std::string& name, int channels, int temb_dim);

  void init(Rng& rng);

  struct Trace {
    Tensor x, a0, h1, a1;
    std::vector<double> temb;
  };

  Tensor forward(const Tensor& x, std::span<const double> temb, Trace* trace) const;
  // Returns the input gradient; adds the embedding gradient into grad_temb.
  Tensor backward(const Trace& trace, const Tensor& grad_out, Grads& grads, std::vector<double>* grad_temb) const;

  template <typename Vec>
  void collect(Vec& out) {
    conv1_.collect(out);
    conv2_.collect(out);
    if (has_temb_) temb_proj_.collect(out);
  }
  template <typename Vec>
  void collect(Vec& out) const {
    conv1_.collect(out);
    conv2_.collect(out);
    if (has_temb_) temb_proj_.collect(out);
  }

 private:
  Conv2d conv1_;
  Conv2d conv2_;
  Linear temb_proj_;
  bool has_temb_ = false;
};

// Encoder/decoder network with skip connections, operating on C x H x W
// tensors of arbitrary spatial size. Stateless at inference: all
// intermediates needed for backpropagation live in a caller-owned Trace.
class UNet {
 public:
  UNet() = default;
  explicit UNet(UNetSpec spec);

  void init(Rng& rng);

  struct Trace {
    Tensor input;
    std::vector<double> temb_in, temb_pre, temb;
    Tensor stem;
    std::vector<std::vector<ResBlock::Trace>> down_blocks;
    std::vector<Tensor> skips;
    std::vector<Tensor> down_in;
    ResBlock::Trace mid;
    std::vector<Tensor> up_cat, up_pre;
    std::vector<std::vector<ResBlock::Trace>> up_blocks;
    Tensor head_in, head_act;
  };

  // `temb_features` must have spec().temb_dim entries (may be empty when 0).
  Tensor forward(const Tensor& x, std::span<const double> temb_features, Trace* trace) const;
  void backward(const Trace& trace, const Tensor& grad_out, Grads& grads, Tensor* grad_in) const;

  const UNetSpec& spec() const noexcept { return spec_; }
  std::vector<Param*> params();
  std::vector<const Param*> params() const;

 private:
  int width(int level) const { return spec_.base_width * spec_.channel_mult[level]; }
  int levels() const { return static_cast<int>(spec_.channel_mult.size()); }

  UNetSpec spec_;
  Linear temb_fc_;
  Conv2d stem_;
  std::vector<std::vector<ResBlock>> down_;
  std::vector<Conv2d> downsample_;
  ResBlock mid_;
  std::vector<Conv2d> up_conv_;
  std::vector<std::vector<ResBlock>> up_;
  Conv2d head_;
  Conv2d skip_head_;
};

}  // namespace gdse::nn
