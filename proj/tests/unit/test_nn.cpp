#include <doctest.h>

#include <cmath>
#include <functional>

#include "gdse/nn/adam.hpp"
#include "gdse/nn/layers.hpp"
#include "gdse/nn/unet.hpp"
#include "gdse/rng.hpp"

using namespace gdse;
using namespace gdse::nn;

namespace {

Tensor random_tensor(int c, int h, int w, Rng& rng) {
  Tensor t(c, h, w);
  for (auto& v : t.data) v = rng.normal();
  return t;
}

void assign_slots(const std::vector<Param*>& ps) {
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->slot = static_cast<int>(i);
}

// Direct six-loop convolution with zero padding.
Tensor conv_reference(const Tensor& x, const std::vector<double>& w, const std::vector<double>& b, int out, int k,
                      int stride) {
  const int pad = k / 2;
  const int ho = (x.height + 2 * pad - k) / stride + 1;
  const int wo = (x.width + 2 * pad - k) / stride + 1;
  Tensor y(out, ho, wo);
  for (int o = 0; o < out; ++o)
    for (int i = 0; i < ho; ++i)
      for (int j = 0; j < wo; ++j) {
        double acc = b[o];
        for (int c = 0; c < x.channels; ++c)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int ii = i * stride - pad + ky, jj = j * stride - pad + kx;
              if (ii < 0 || jj < 0 || ii >= x.height || jj >= x.width) continue;
              acc += w[((static_cast<std::size_t>(o) * x.channels + c) * k + ky) * k + kx] * x.at(c, ii, jj);
            }
        y.at(o, i, j) = acc;
      }
  return y;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

}  // namespace

TEST_CASE("property: convolution matches the direct reference, with exact adjoint gradients") {
  Rng rng(51);
  const int configs[][2] = {{3, 1}, {3, 2}, {1, 1}};
  for (int trial = 0; trial < 36; ++trial) {
    const int k = configs[trial % 3][0], stride = configs[trial % 3][1];
    const int cin = 1 + static_cast<int>(rng.below(9)), cout = 1 + static_cast<int>(rng.below(9));
    const int h = 1 + static_cast<int>(rng.below(12)), w = 1 + static_cast<int>(rng.below(40));
    Conv2d conv("c", cin, cout, k, stride);
    std::vector<Param*> ps;
    conv.collect(ps);
    assign_slots(ps);
    for (auto* p : ps)
      for (auto& v : p->value) v = rng.normal();
    const Tensor x = random_tensor(cin, h, w, rng);
    const Tensor y = conv.forward(x);
    const Tensor ref = conv_reference(x, ps[0]->value, ps[1]->value, cout, k, stride);
    REQUIRE(y.same_shape(ref));
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y.data[i] - ref.data[i]) < 1e-12);

    // Gradients against the reference: d<gy, conv(x)>/dx and /dw.
    const Tensor gy = random_tensor(y.channels, y.height, y.width, rng);
    Grads g = make_grads(ps);
    Tensor gx;
    conv.backward(x, gy, g, &gx);
    for (int probe = 0; probe < 5; ++probe) {
      Tensor e(cin, h, w);
      const auto idx = rng.below(e.size());
      e.data[idx] = 1.0;
      const Tensor ye = conv_reference(e, ps[0]->value, std::vector<double>(cout, 0.0), cout, k, stride);
      CHECK(std::abs(gx.data[idx] - dot(gy, ye)) < 1e-10);
      const auto widx = rng.below(ps[0]->value.size());
      std::vector<double> unit(ps[0]->value.size(), 0.0);
      unit[widx] = 1.0;
      const Tensor yw = conv_reference(x, unit, std::vector<double>(cout, 0.0), cout, k, stride);
      CHECK(std::abs(g[0][widx] - dot(gy, yw)) < 1e-10);
    }
    for (int o = 0; o < cout; ++o) {
      double s = 0.0;
      for (auto v : gy.plane(o)) s += v;
      CHECK(std::abs(g[1][o] - s) < 1e-10);
    }
  }
}

TEST_CASE("linear layer forward and gradients") {
  Rng rng(52);
  Linear lin("l", 5, 3);
  std::vector<Param*> ps;
  lin.collect(ps);
  assign_slots(ps);
  lin.init(rng, 1.0);
  for (auto& v : ps[1]->value) v = rng.normal();
  std::vector<double> x(5);
  for (auto& v : x) v = rng.normal();
  const auto y = lin.forward(x);
  for (int o = 0; o < 3; ++o) {
    double ref = ps[1]->value[o];
    for (int i = 0; i < 5; ++i) ref += ps[0]->value[o * 5 + i] * x[i];
    CHECK(std::abs(y[o] - ref) < 1e-14);
  }
  const std::vector<double> gy{0.3, -1.0, 2.0};
  Grads g = make_grads(ps);
  std::vector<double> gx;
  lin.backward(x, gy, g, &gx);
  for (int i = 0; i < 5; ++i) {
    double ref = 0.0;
    for (int o = 0; o < 3; ++o) ref += ps[0]->value[o * 5 + i] * gy[o];
    CHECK(std::abs(gx[i] - ref) < 1e-14);
  }
  CHECK(g[0][2 * 5 + 4] == doctest::Approx(gy[2] * x[4]));
  CHECK(g[1][1] == gy[1]);
}

TEST_CASE("activation derivatives match finite differences") {
  for (double x : {-8.0, -1.3, -0.1, 0.0, 0.4, 2.5, 9.0}) {
    const double h = 1e-6;
    CHECK(silu_grad(x) == doctest::Approx((silu(x + h) - silu(x - h)) / (2 * h)).epsilon(1e-7));
    CHECK(sigmoid(x) == doctest::Approx(1.0 / (1.0 + std::exp(-x))));
  }
  Rng rng(53);
  const Tensor x = random_tensor(2, 3, 17, rng);
  const Tensor y = silu(x);
  const Tensor g = silu_backward(x, Tensor(2, 3, 17, 1.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(y.data[i] == doctest::Approx(silu(x.data[i])).epsilon(1e-13));
    CHECK(g.data[i] == doctest::Approx(silu_grad(x.data[i])).epsilon(1e-12));
  }
}

TEST_CASE("upsample, concat and their adjoints") {
  Rng rng(54);
  const Tensor x = random_tensor(2, 3, 5, rng);
  const Tensor up = upsample2x(x, 5, 9);
  CHECK(up.height == 5);
  CHECK(up.width == 9);
  CHECK(up.at(1, 4, 8) == x.at(1, 2, 4));
  CHECK(up.at(0, 3, 2) == x.at(0, 1, 1));
  const Tensor gy = random_tensor(2, 5, 9, rng);
  const Tensor gx = upsample2x_backward(gy, 3, 5);
  CHECK(std::abs(dot(gy, up) - dot(gx, x)) < 1e-12);

  const Tensor a = random_tensor(2, 2, 3, rng), b = random_tensor(3, 2, 3, rng);
  const Tensor ab = concat_channels(a, b);
  CHECK(ab.channels == 5);
  CHECK(ab.at(3, 1, 2) == b.at(1, 1, 2));
  Tensor ga, gb;
  split_channels(ab, 2, ga, gb);
  CHECK(ga.data == a.data);
  CHECK(gb.data == b.data);
}

TEST_CASE("unet gradients match finite differences") {
  Rng rng(55);
  UNetSpec spec;
  spec.in_channels = 3;
  spec.out_channels = 2;
  spec.base_width = 3;
  spec.channel_mult = {1, 2};
  spec.blocks_per_level = 1;
  spec.temb_dim = 4;
  spec.input_skip = true;
  UNet net(spec);
  net.init(rng);
  auto ps = net.params();
  const Tensor x = random_tensor(3, 5, 7, rng);
  const std::vector<double> temb{0.3, -0.2, 0.9, 0.1};
  const Tensor w = random_tensor(2, 5, 7, rng);
  auto loss = [&] { return dot(net.forward(x, temb, nullptr), w); };

  UNet::Trace tr;
  (void)net.forward(x, temb, &tr);
  Grads g = make_grads(ps);
  Tensor gx;
  net.backward(tr, w, g, &gx);

  int checked = 0;
  for (auto* p : ps) {
    for (int probe = 0; probe < 2; ++probe) {
      const auto i = rng.below(p->value.size());
      const double orig = p->value[i];
      const double h = 1e-5;
      p->value[i] = orig + h;
      const double lp = loss();
      p->value[i] = orig - h;
      const double lm = loss();
      p->value[i] = orig;
      const double fd = (lp - lm) / (2 * h);
      const double an = g[p->slot][i];
      CHECK(std::abs(an - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
      ++checked;
    }
  }
  CHECK(checked >= 20);
  // Input gradient too.
  Tensor xp = x;
  const auto i = rng.below(x.size());
  xp.data[i] += 1e-5;
  const double lp = dot(net.forward(xp, temb, nullptr), w);
  xp.data[i] -= 2e-5;
  const double lm = dot(net.forward(xp, temb, nullptr), w);
  CHECK(gx.data[i] == doctest::Approx((lp - lm) / 2e-5).epsilon(1e-6));
}

TEST_CASE("property: unet preserves spatial shape for odd and even sizes") {
  Rng rng(56);
  UNetSpec spec;
  spec.in_channels = 2;
  spec.out_channels = 1;
  spec.base_width = 2;
  spec.channel_mult = {1, 2, 2};
  UNet net(spec);
  net.init(rng);
  for (int trial = 0; trial < 15; ++trial) {
    const int h = 1 + static_cast<int>(rng.below(20)), w = 1 + static_cast<int>(rng.below(40));
    const Tensor y = net.forward(random_tensor(2, h, w, rng), {}, nullptr);
    CHECK(y.channels == 1);
    CHECK(y.height == h);
    CHECK(y.width == w);
  }
}

TEST_CASE("adam: bias-corrected first step and zero-gradient invariance") {
  Param p{"p", {1.0, -2.0, 0.5}, 0};
  Adam opt(std::vector<const Param*>{&p}, AdamConfig{0.1, 0.9, 0.999, 1e-8});
  opt.step({&p}, Grads{{0.5, -3.0, 0.0}});
  // First step moves each coordinate by lr * sign(g) (up to epsilon).
  CHECK(p.value[0] == doctest::Approx(0.9).epsilon(1e-7));
  CHECK(p.value[1] == doctest::Approx(-1.9).epsilon(1e-7));
  CHECK(p.value[2] == 0.5);

  Param q{"q", {3.0, 4.0}, 0};
  Adam fresh(std::vector<const Param*>{&q}, AdamConfig{});
  for (int i = 0; i < 5; ++i) fresh.step({&q}, Grads{{0.0, 0.0}});
  CHECK(q.value == std::vector<double>{3.0, 4.0});
}

TEST_CASE("property: tensor activations agree with the scalar formulas over a wide range") {
  Rng rng(57);
  Tensor x(1, 1, 4003);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double mag = std::exp(rng.uniform(-12.0, 6.7));
    x.data[i] = rng.uniform() < 0.5 ? -mag : mag;
  }
  x.data[0] = 0.0;
  x.data[1] = -750.0;
  x.data[2] = 750.0;
  x.data[3] = -40.0;
  const Tensor y = silu(x);
  const Tensor g = silu_backward(x, Tensor(1, 1, 4003, 1.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double ref = silu(x.data[i]);
    CHECK(std::abs(y.data[i] - ref) <= 1e-14 * std::abs(ref) + 1e-300);
    const double gref = silu_grad(x.data[i]);
    CHECK(std::abs(g.data[i] - gref) <= 1e-13 * (std::abs(gref) + 1e-3));
  }
}
