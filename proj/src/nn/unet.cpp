#include "gdse/nn/unet.hpp"

#include <stdexcept>
#include <string>

namespace gdse::nn {

ResBlock::ResBlock(const std::string& name, int channels, int temb_dim)
    : conv1_(name + ".conv1", channels, channels, 3, 1),
      conv2_(name + ".conv2", channels, channels, 3, 1),
      has_temb_(temb_dim > 0) {
  if (has_temb_) temb_proj_ = Linear(name + ".temb", temb_dim, channels);
}

void ResBlock::init(Rng& rng) {
  conv1_.init(rng, 1.0);
  conv2_.init(rng, 0.1);
  if (has_temb_) temb_proj_.init(rng, 1.0);
}

Tensor ResBlock::forward(const Tensor& x, std::span<const double> temb, Trace* trace) const {
  Tensor a0 = silu(x);
  Tensor h1 = conv1_.forward(a0);
  if (has_temb_) add_channel_bias(h1, temb_proj_.forward(temb));
  Tensor a1 = silu(h1);
  Tensor out = conv2_.forward(a1);
  add_inplace(out, x);
  if (trace) {
    trace->x = x;
    trace->a0 = std::move(a0);
    trace->h1 = std::move(h1);
    trace->a1 = std::move(a1);
    trace->temb.assign(temb.begin(), temb.end());
  }
  return out;
}

Tensor ResBlock::backward(const Trace& trace, const Tensor& grad_out, Grads& grads,
                          std::vector<double>* grad_temb) const {
  Tensor g_a1;
  conv2_.backward(trace.a1, grad_out, grads, &g_a1);
  Tensor g_h1 = silu_backward(trace.h1, g_a1);
  if (has_temb_) {
    std::vector<double> g_bias;
    accumulate_channel_sums(g_h1, g_bias);
    std::vector<double> g_t;
    temb_proj_.backward(trace.temb, g_bias, grads, grad_temb ? &g_t : nullptr);
    if (grad_temb) {
      for (std::size_t i = 0; i < g_t.size(); ++i) (*grad_temb)[i] += g_t[i];
    }
  }
  Tensor g_a0;
  conv1_.backward(trace.a0, g_h1, grads, &g_a0);
  Tensor g_x = silu_backward(trace.x, g_a0);
  add_inplace(g_x, grad_out);
  return g_x;
}

UNet::UNet(UNetSpec spec) : spec_(std::move(spec)) {
  if (spec_.channel_mult.empty()) throw std::invalid_argument("UNet: at least one level required");
  if (spec_.base_width <= 0 || spec_.in_channels <= 0 || spec_.out_channels <= 0 || spec_.blocks_per_level < 0)
    throw std::invalid_argument("UNet: non-positive dimension");
  const int L = levels();
  const int E = spec_.temb_dim;
  if (E > 0) temb_fc_ = Linear("temb.fc", E, E);
  stem_ = Conv2d("stem", spec_.in_channels, width(0), 3, 1);
  down_.resize(L);
  for (int l = 0; l < L; ++l) {
    for (int b = 0; b < spec_.blocks_per_level; ++b)
      down_[l].emplace_back("down" + std::to_string(l) + ".block" + std::to_string(b), width(l), E);
    if (l + 1 < L) downsample_.emplace_back("down" + std::to_string(l) + ".resample", width(l), width(l + 1), 3, 2);
  }
  mid_ = ResBlock("mid", width(L - 1), E);
  up_.resize(L > 1 ? L - 1 : 0);
  for (int l = 0; l + 1 < L; ++l) {
    up_conv_.emplace_back("up" + std::to_string(l) + ".merge", width(l + 1) + width(l), width(l), 3, 1);
    for (int b = 0; b < spec_.blocks_per_level; ++b)
      up_[l].emplace_back("up" + std::to_string(l) + ".block" + std::to_string(b), width(l), E);
  }
  head_ = Conv2d("head", width(0), spec_.out_channels, 3, 1);
  if (spec_.input_skip) skip_head_ = Conv2d("skip_head", spec_.in_channels, spec_.out_channels, 1, 1);

  auto all = params();
  for (std::size_t i = 0; i < all.size(); ++i) all[i]->slot = static_cast<int>(i);
}

void UNet::init(Rng& rng) {
  if (spec_.temb_dim > 0) temb_fc_.init(rng, 1.0);
  stem_.init(rng, 1.0);
  for (auto& level : down_)
    for (auto& b : level) b.init(rng);
  for (auto& c : downsample_) c.init(rng, 1.0);
  mid_.init(rng);
  for (auto& c : up_conv_) c.init(rng, 1.0);
  for (auto& level : up_)
    for (auto& b : level) b.init(rng);
  head_.init(rng, 0.1);
  if (spec_.input_skip) skip_head_.init(rng, 0.1);
}

std::vector<Param*> UNet::params() {
  std::vector<Param*> out;
  if (spec_.temb_dim > 0) temb_fc_.collect(out);
  stem_.collect(out);
  for (auto& level : down_)
    for (auto& b : level) b.collect(out);
  for (auto& c : downsample_) c.collect(out);
  mid_.collect(out);
  for (auto& c : up_conv_) c.collect(out);
  for (auto& level : up_)
    for (auto& b : level) b.collect(out);
  head_.collect(out);
  if (spec_.input_skip) skip_head_.collect(out);
  return out;
}

std::vector<const Param*> UNet::params() const {
  std::vector<const Param*> out;
  for (Param* p : const_cast<UNet*>(this)->params()) out.push_back(p);
  return out;
}

Tensor UNet::forward(const Tensor& x, std::span<const double> temb_features, Trace* trace) const {
  if (x.channels != spec_.in_channels) throw std::invalid_argument("UNet: input channel mismatch");
  if (static_cast<int>(temb_features.size()) != spec_.temb_dim)
    throw std::invalid_argument("UNet: timestep feature size mismatch");
  const int L = levels();

  std::vector<double> temb;
  if (spec_.temb_dim > 0) {
    auto pre = temb_fc_.forward(temb_features);
    temb = silu(pre);
    if (trace) {
      trace->temb_in.assign(temb_features.begin(), temb_features.end());
      trace->temb_pre = std::move(pre);
    }
  }
  if (trace) {
    trace->input = x;
    trace->temb = temb;
    trace->down_blocks.assign(L, {});
    trace->skips.assign(L, {});
    trace->down_in.assign(L > 1 ? L - 1 : 0, {});
    trace->up_cat.assign(L > 1 ? L - 1 : 0, {});
    trace->up_pre.assign(L > 1 ? L - 1 : 0, {});
    trace->up_blocks.assign(L > 1 ? L - 1 : 0, {});
  }

  Tensor h = stem_.forward(x);
  if (trace) trace->stem = h;
  std::vector<Tensor> skips(L);
  for (int l = 0; l < L; ++l) {
    for (const auto& block : down_[l]) {
      ResBlock::Trace* bt = nullptr;
      if (trace) bt = &trace->down_blocks[l].emplace_back();
      h = block.forward(h, temb, bt);
    }
    skips[l] = h;
    if (l + 1 < L) h = downsample_[l].forward(h);
  }
  h = mid_.forward(h, temb, trace ? &trace->mid : nullptr);
  for (int l = L - 2; l >= 0; --l) {
    Tensor up = upsample2x(h, skips[l].height, skips[l].width);
    Tensor cat = concat_channels(up, skips[l]);
    Tensor pre = up_conv_[l].forward(cat);
    h = silu(pre);
    if (trace) {
      trace->up_cat[l] = std::move(cat);
      trace->up_pre[l] = std::move(pre);
    }
    for (const auto& block : up_[l]) {
      ResBlock::Trace* bt = nullptr;
      if (trace) bt = &trace->up_blocks[l].emplace_back();
      h = block.forward(h, temb, bt);
    }
  }
  Tensor act = silu(h);
  Tensor out = head_.forward(act);
  if (spec_.input_skip) add_inplace(out, skip_head_.forward(x));
  if (trace) {
    trace->skips = std::move(skips);
    trace->head_in = std::move(h);
    trace->head_act = std::move(act);
  }
  return out;
}

void UNet::backward(const Trace& trace, const Tensor& grad_out, Grads& grads, Tensor* grad_in) const {
  const int L = levels();
  std::vector<double> g_temb(spec_.temb_dim, 0.0);
  std::vector<double>* g_temb_ptr = spec_.temb_dim > 0 ? &g_temb : nullptr;

  Tensor g_x_skip;
  if (spec_.input_skip) skip_head_.backward(trace.input, grad_out, grads, grad_in ? &g_x_skip : nullptr);
  Tensor g_act;
  head_.backward(trace.head_act, grad_out, grads, &g_act);
  Tensor g = silu_backward(trace.head_in, g_act);

  std::vector<Tensor> g_skips(L);
  // Decoder, walked in reverse of the forward order (l = 0 was applied last).
  for (int l = 0; l + 1 < L; ++l) {
    for (int b = static_cast<int>(up_[l].size()) - 1; b >= 0; --b)
      g = up_[l][b].backward(trace.up_blocks[l][b], g, grads, g_temb_ptr);
    Tensor g_pre = silu_backward(trace.up_pre[l], g);
    Tensor g_cat;
    up_conv_[l].backward(trace.up_cat[l], g_pre, grads, &g_cat);
    Tensor g_up;
    split_channels(g_cat, width(l + 1), g_up, g_skips[l]);
    g = upsample2x_backward(g_up, trace.skips[l + 1].height, trace.skips[l + 1].width);
  }
  g = mid_.backward(trace.mid, g, grads, g_temb_ptr);

  for (int l = L - 1; l >= 0; --l) {
    if (!g_skips[l].data.empty()) add_inplace(g, g_skips[l]);
    for (int b = static_cast<int>(down_[l].size()) - 1; b >= 0; --b)
      g = down_[l][b].backward(trace.down_blocks[l][b], g, grads, g_temb_ptr);
    if (l > 0) {
      Tensor g_down_in;
      downsample_[l - 1].backward(trace.skips[l - 1], g, grads, &g_down_in);
      g = std::move(g_down_in);
    }
  }

  Tensor g_in;
  stem_.backward(trace.input, g, grads, grad_in ? &g_in : nullptr);
  if (grad_in) {
    if (spec_.input_skip) add_inplace(g_in, g_x_skip);
    *grad_in = std::move(g_in);
  }

  if (spec_.temb_dim > 0) {
    auto g_pre = silu_backward(trace.temb_pre, g_temb);
    temb_fc_.backward(trace.temb_in, g_pre, grads, nullptr);
  }
}

}  // namespace gdse::nn
