#include "gdse/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace gdse::nn {

namespace {

// Unfolds x into a (C*k*k) x (Ho*Wo) matrix, zero outside the image.
void im2col(const Tensor& x, int kernel, int stride, int ho, int wo, std::vector<double>& col) {
  const int pad = kernel / 2;
  const std::size_t cols = static_cast<std::size_t>(ho) * wo;
  col.assign(static_cast<std::size_t>(x.channels) * kernel * kernel * cols, 0.0);
  std::size_t row = 0;
  for (int c = 0; c < x.channels; ++c) {
    const double* src = x.data.data() + c * x.plane_size();
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx, ++row) {
        double* dst = col.data() + row * cols;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= x.height) continue;
          const double* srow = src + static_cast<std::size_t>(iy) * x.width;
          double* drow = dst + static_cast<std::size_t>(oy) * wo;
          if (stride == 1) {
            const int lo = std::max(0, pad - kx);
            const int hi = std::min(wo, x.width + pad - kx);
            for (int ox = lo; ox < hi; ++ox) drow[ox] = srow[ox - pad + kx];
          } else {
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride - pad + kx;
              if (ix >= 0 && ix < x.width) drow[ox] = srow[ix];
            }
          }
        }
      }
    }
  }
}

void col2im(const std::vector<double>& col, int kernel, int stride, int ho, int wo, Tensor& x) {
  const int pad = kernel / 2;
  const std::size_t cols = static_cast<std::size_t>(ho) * wo;
  std::size_t row = 0;
  for (int c = 0; c < x.channels; ++c) {
    double* dst = x.data.data() + c * x.plane_size();
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx, ++row) {
        const double* src = col.data() + row * cols;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= x.height) continue;
          double* drow = dst + static_cast<std::size_t>(iy) * x.width;
          const double* srow = src + static_cast<std::size_t>(oy) * wo;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < x.width) drow[ix] += srow[ox];
          }
        }
      }
    }
  }
}

// Direct 3x3 stride-1 kernels on zero-padded planes, written with GCC
// vector extensions. Output rows are built in chunks of 16 columns for
// kBlock channels at once so every loaded input row feeds several
// accumulators held in registers.
using v8d = double __attribute__((vector_size(64)));

inline v8d load8(const double* p) {
  v8d v;
  std::memcpy(&v, p, sizeof v);
  return v;
}
inline void store8(double* p, v8d v) { std::memcpy(p, &v, sizeof v); }

inline double hsum(v8d v) {
  double s = 0.0;
  for (int i = 0; i < 8; ++i) s += v[i];
  return s;
}

constexpr int kChunk = 16;
constexpr int kBlock = 4;

// y[0:n] += a * x[0:n]
inline void axpy(double a, const double* x, double* y, std::size_t n) {
  const v8d av = v8d{} + a;
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) store8(y + j, load8(y + j) + av * load8(x + j));
  for (; j < n; ++j) y[j] += a * x[j];
}

inline double dot(const double* a, const double* b, std::size_t n) {
  v8d acc{};
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) acc += load8(a + j) * load8(b + j);
  double s = hsum(acc);
  for (; j < n; ++j) s += a[j] * b[j];
  return s;
}

// Row-major products with a fixed summation order.
// c (m x n) += a (m x k) * b (k x n)
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) axpy(a[i * k + p], b + p * n, c + i * n, n);
}

// c (k x n) += a^T b with a (m x k), b (m x n)
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) axpy(a[i * k + p], b + i * n, c + p * n, n);
}

// c (m x k) += a b^T with a (m x n), b (k x n)
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) c[i * k + p] += dot(a + i * n, b + p * n, n);
}

struct Padded {
  std::vector<double> data;
  int rows = 0;          // H + 2
  std::size_t stride = 0;  // >= round_up(W, kChunk) + kChunk, zero beyond W + 1

  const double* row(int c, int r) const { return data.data() + (static_cast<std::size_t>(c) * rows + r) * stride; }
};

Padded pad_planes(const Tensor& x) {
  const int H = x.height;
  const int W = x.width;
  Padded p;
  p.rows = H + 2;
  p.stride = static_cast<std::size_t>((W + kChunk - 1) / kChunk * kChunk + kChunk);
  p.data.assign(static_cast<std::size_t>(x.channels) * p.rows * p.stride, 0.0);
  for (int c = 0; c < x.channels; ++c) {
    for (int r = 0; r < H; ++r) {
      const double* src = x.data.data() + (static_cast<std::size_t>(c) * H + r) * W;
      double* dst = p.data.data() + (static_cast<std::size_t>(c) * p.rows + r + 1) * p.stride + 1;
      std::copy(src, src + W, dst);
    }
  }
  return p;
}

// For destination channels d0..d0+B-1: dst (+)= sum over source channels q
// and kernel rows ky of the 3-tap filter kernel(d, q, ky, .) applied to
// padded source row row_of(r, ky).
template <int B, typename RowOf, typename Kernel>
void conv_rows(const Padded& src, int src_channels, int H, int W, int d0, double* dst_base, bool accumulate,
               RowOf row_of, Kernel kernel) {
  alignas(64) double tail[kChunk];
  for (int r = 0; r < H; ++r) {
    for (int x0 = 0; x0 < W; x0 += kChunk) {
      const int n = std::min(kChunk, W - x0);
      v8d a[B][2];
      for (int b = 0; b < B; ++b) {
        double* dst = dst_base + (static_cast<std::size_t>(d0 + b) * H + r) * W + x0;
        if (!accumulate) {
          a[b][0] = v8d{};
          a[b][1] = v8d{};
        } else if (n == kChunk) {
          a[b][0] = load8(dst);
          a[b][1] = load8(dst + 8);
        } else {
          std::fill(tail, tail + kChunk, 0.0);
          std::copy(dst, dst + n, tail);
          a[b][0] = load8(tail);
          a[b][1] = load8(tail + 8);
        }
      }
      for (int q = 0; q < src_channels; ++q) {
        for (int ky = 0; ky < 3; ++ky) {
          const double* s = src.row(q, row_of(r, ky)) + x0;
          const v8d s0a = load8(s), s0b = load8(s + 8);
          const v8d s1a = load8(s + 1), s1b = load8(s + 9);
          const v8d s2a = load8(s + 2), s2b = load8(s + 10);
          for (int b = 0; b < B; ++b) {
            const double k0 = kernel(d0 + b, q, ky, 0);
            const double k1 = kernel(d0 + b, q, ky, 1);
            const double k2 = kernel(d0 + b, q, ky, 2);
            a[b][0] += k0 * s0a + k1 * s1a + k2 * s2a;
            a[b][1] += k0 * s0b + k1 * s1b + k2 * s2b;
          }
        }
      }
      for (int b = 0; b < B; ++b) {
        double* dst = dst_base + (static_cast<std::size_t>(d0 + b) * H + r) * W + x0;
        if (n == kChunk) {
          store8(dst, a[b][0]);
          store8(dst + 8, a[b][1]);
        } else {
          store8(tail, a[b][0]);
          store8(tail + 8, a[b][1]);
          std::copy(tail, tail + n, dst);
        }
      }
    }
  }
}

template <typename RowOf, typename Kernel>
void conv_all(const Padded& src, int src_channels, int dst_channels, int H, int W, double* dst_base,
              bool accumulate, RowOf row_of, Kernel kernel) {
  int d = 0;
  for (; d + kBlock <= dst_channels; d += kBlock)
    conv_rows<kBlock>(src, src_channels, H, W, d, dst_base, accumulate, row_of, kernel);
  for (; d + 2 <= dst_channels; d += 2) conv_rows<2>(src, src_channels, H, W, d, dst_base, accumulate, row_of, kernel);
  for (; d < dst_channels; ++d) conv_rows<1>(src, src_channels, H, W, d, dst_base, accumulate, row_of, kernel);
}

// y (bias already stored) += conv(x, w).
void conv3x3_forward(const Tensor& x, const double* w, int out_ch, Tensor& y) {
  const int C = x.channels;
  conv_all(
      pad_planes(x), C, out_ch, x.height, x.width, y.data.data(), true, [](int r, int ky) { return r + ky; },
      [w, C](int o, int c, int ky, int kx) { return w[(static_cast<std::size_t>(o) * C + c) * 9 + ky * 3 + kx]; });
}

// gx = transposed convolution of gy with w.
void conv3x3_grad_input(const Tensor& gy, const double* w, int in_ch, Tensor& gx) {
  const int O = gy.channels;
  // Input row r receives output row r - ky + 1, stored at padded row r - ky + 2;
  // columns flip the same way.
  conv_all(
      pad_planes(gy), O, in_ch, gy.height, gy.width, gx.data.data(), false, [](int r, int ky) { return r - ky + 2; },
      [w, in_ch](int c, int o, int ky, int kx) {
        return w[(static_cast<std::size_t>(o) * in_ch + c) * 9 + ky * 3 + (2 - kx)];
      });
}

// gw[o][c][ky][kx] += sum over (r, j) of gy[o][r][j] * xpad[c][r + ky][j + kx],
// two output channels at a time with 18 vector accumulators.
template <int B>
void grad_weight_block(const Padded& xp, const Padded& gp, int C, int H, int W, int o0, double* gw) {
  const int chunks = (W + 7) / 8;
  for (int c = 0; c < C; ++c) {
    v8d acc[B][9] = {};
    for (int r = 0; r < H; ++r) {
      // gp holds gy shifted by one row and column; zeros beyond W.
      const double* g[B];
      for (int b = 0; b < B; ++b) g[b] = gp.row(o0 + b, r + 1) + 1;
      for (int ch = 0; ch < chunks; ++ch) {
        const int j = ch * 8;
        v8d gv[B];
        for (int b = 0; b < B; ++b) gv[b] = load8(g[b] + j);
        for (int ky = 0; ky < 3; ++ky) {
          const double* s = xp.row(c, r + ky) + j;
          const v8d s0 = load8(s), s1 = load8(s + 1), s2 = load8(s + 2);
          for (int b = 0; b < B; ++b) {
            acc[b][ky * 3] += gv[b] * s0;
            acc[b][ky * 3 + 1] += gv[b] * s1;
            acc[b][ky * 3 + 2] += gv[b] * s2;
          }
        }
      }
    }
    for (int b = 0; b < B; ++b) {
      double* gk = gw + (static_cast<std::size_t>(o0 + b) * C + c) * 9;
      for (int t = 0; t < 9; ++t) gk[t] += hsum(acc[b][t]);
    }
  }
}

void conv3x3_grad_weight(const Tensor& x, const Tensor& gy, double* gw) {
  const Padded xp = pad_planes(x);
  const Padded gp = pad_planes(gy);
  int o = 0;
  for (; o + 2 <= gy.channels; o += 2) grad_weight_block<2>(xp, gp, x.channels, x.height, x.width, o, gw);
  for (; o < gy.channels; ++o) grad_weight_block<1>(xp, gp, x.channels, x.height, x.width, o, gw);
}

}  // namespace

Grads make_grads(const std::vector<const Param*>& params) {
  Grads g(params.size());
  for (const Param* p : params) g.at(static_cast<std::size_t>(p->slot)).assign(p->value.size(), 0.0);
  return g;
}

Grads make_grads(const std::vector<Param*>& params) {
  return make_grads(std::vector<const Param*>(params.begin(), params.end()));
}

std::size_t count_values(const std::vector<const Param*>& params) {
  std::size_t n = 0;
  for (const Param* p : params) n += p->value.size();
  return n;
}

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride)
    : in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride) {
  if (in_channels <= 0 || out_channels <= 0 || kernel <= 0 || kernel % 2 == 0 || stride <= 0)
    throw std::invalid_argument("Conv2d: bad dimensions for " + name);
  weight_.name = name + ".weight";
  weight_.value.assign(static_cast<std::size_t>(out_) * in_ * kernel_ * kernel_, 0.0);
  bias_.name = name + ".bias";
  bias_.value.assign(out_, 0.0);
}

void Conv2d::init(Rng& rng, double gain) {
  const double std = gain * std::sqrt(2.0 / (in_ * kernel_ * kernel_));
  for (double& w : weight_.value) w = std * rng.normal();
  for (double& b : bias_.value) b = 0.0;
}

Tensor Conv2d::forward(const Tensor& x) const {
  if (x.channels != in_) throw std::invalid_argument("Conv2d: channel mismatch in " + weight_.name);
  const int ho = out_size(x.height);
  const int wo = out_size(x.width);
  Tensor y(out_, ho, wo);
  for (int c = 0; c < out_; ++c) std::fill_n(y.plane(c).data(), y.plane_size(), bias_.value[c]);
  if (kernel_ == 3 && stride_ == 1) {
    conv3x3_forward(x, weight_.value.data(), out_, y);
    return y;
  }
  const std::size_t cols = static_cast<std::size_t>(ho) * wo;
  const std::size_t depth = static_cast<std::size_t>(in_) * kernel_ * kernel_;
  if (kernel_ == 1 && stride_ == 1) {
    gemm_nn(weight_.value.data(), x.data.data(), y.data.data(), out_, depth, cols);
  } else {
    std::vector<double> col;
    im2col(x, kernel_, stride_, ho, wo, col);
    gemm_nn(weight_.value.data(), col.data(), y.data.data(), out_, depth, cols);
  }
  return y;
}

void Conv2d::backward(const Tensor& x, const Tensor& grad_out, Grads& grads, Tensor* grad_in) const {
  const int ho = grad_out.height;
  const int wo = grad_out.width;
  const std::size_t cols = static_cast<std::size_t>(ho) * wo;
  const std::size_t depth = static_cast<std::size_t>(in_) * kernel_ * kernel_;
  auto& gb = grads[bias_.slot];
  for (int c = 0; c < out_; ++c) {
    double s = 0.0;
    for (double v : grad_out.plane(c)) s += v;
    gb[c] += s;
  }

  if (kernel_ == 3 && stride_ == 1) {
    conv3x3_grad_weight(x, grad_out, grads[weight_.slot].data());
    if (grad_in) {
      *grad_in = Tensor(x.channels, x.height, x.width);
      conv3x3_grad_input(grad_out, weight_.value.data(), in_, *grad_in);
    }
    return;
  }

  const bool direct = kernel_ == 1 && stride_ == 1;
  std::vector<double> col;
  if (!direct) im2col(x, kernel_, stride_, ho, wo, col);
  gemm_nt(grad_out.data.data(), direct ? x.data.data() : col.data(), grads[weight_.slot].data(), out_, depth, cols);

  if (grad_in == nullptr) return;
  *grad_in = Tensor(x.channels, x.height, x.width);
  if (direct) {
    gemm_tn(weight_.value.data(), grad_out.data.data(), grad_in->data.data(), out_, depth, cols);
  } else {
    std::vector<double> gcol(depth * cols, 0.0);
    gemm_tn(weight_.value.data(), grad_out.data.data(), gcol.data(), out_, depth, cols);
    col2im(gcol, kernel_, stride_, ho, wo, *grad_in);
  }
}

Linear::Linear(std::string name, int in_features, int out_features) : in_(in_features), out_(out_features) {
  if (in_features <= 0 || out_features <= 0) throw std::invalid_argument("Linear: bad dimensions for " + name);
  weight_.name = name + ".weight";
  weight_.value.assign(static_cast<std::size_t>(out_) * in_, 0.0);
  bias_.name = name + ".bias";
  bias_.value.assign(out_, 0.0);
}

void Linear::init(Rng& rng, double gain) {
  const double std = gain * std::sqrt(1.0 / in_);
  for (double& w : weight_.value) w = std * rng.normal();
  for (double& b : bias_.value) b = 0.0;
}

std::vector<double> Linear::forward(std::span<const double> x) const {
  std::vector<double> y(bias_.value);
  for (int o = 0; o < out_; ++o) {
    const double* row = weight_.value.data() + static_cast<std::size_t>(o) * in_;
    for (int i = 0; i < in_; ++i) y[o] += row[i] * x[i];
  }
  return y;
}

void Linear::backward(std::span<const double> x, std::span<const double> grad_out, Grads& grads,
                      std::vector<double>* grad_in) const {
  auto& gw = grads[weight_.slot];
  auto& gb = grads[bias_.slot];
  if (grad_in) grad_in->assign(in_, 0.0);
  for (int o = 0; o < out_; ++o) {
    gb[o] += grad_out[o];
    const double* row = weight_.value.data() + static_cast<std::size_t>(o) * in_;
    double* grow = gw.data() + static_cast<std::size_t>(o) * in_;
    for (int i = 0; i < in_; ++i) {
      grow[i] += grad_out[o] * x[i];
      if (grad_in) (*grad_in)[i] += grad_out[o] * row[i];
    }
  }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double silu(double x) { return x * sigmoid(x); }
double silu_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

namespace {

using v8l = long long __attribute__((vector_size(64)));

// exp on eight lanes: 2^n * P(r) with x = n ln2 + r, |r| <= ln2 / 2, and a
// degree-12 Taylor polynomial. Inputs are clamped to [-708, 709].
inline v8d vexp(v8d x) {
  const v8d lo = v8d{} - 708.0, hi = v8d{} + 709.0;
  x = x < lo ? lo : x;
  x = x > hi ? hi : x;
  const double shifter = 6755399441055744.0;  // 1.5 * 2^52
  const v8d n = (x * 1.4426950408889634 + shifter) - shifter;
  v8d r = x - n * 6.93147180369123816490e-01;
  r = r - n * 1.90821492927058770002e-10;
  constexpr double c[] = {1.0 / 479001600, 1.0 / 39916800, 1.0 / 3628800, 1.0 / 362880, 1.0 / 40320,
                          1.0 / 5040,      1.0 / 720,      1.0 / 120,     1.0 / 24,     1.0 / 6,
                          0.5,             1.0,            1.0};
  v8d p = v8d{} + c[0];
  for (int k = 1; k < 13; ++k) p = p * r + c[k];
  const v8l bits = (__builtin_convertvector(n, v8l) + 1023) << 52;
  v8d scale;
  std::memcpy(&scale, &bits, sizeof scale);
  return p * scale;
}

void silu_into(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const v8d v = load8(x + i);
    store8(y + i, v / (1.0 + vexp(-v)));
  }
  for (; i < n; ++i) y[i] = x[i] / (1.0 + std::exp(-x[i]));
}

void silu_grad_into(const double* x, const double* g, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const v8d v = load8(x + i);
    const v8d s = 1.0 / (1.0 + vexp(-v));
    store8(y + i, load8(g + i) * s * (1.0 + v * (1.0 - s)));
  }
  for (; i < n; ++i) {
    const double s = 1.0 / (1.0 + std::exp(-x[i]));
    y[i] = g[i] * s * (1.0 + x[i] * (1.0 - s));
  }
}

}  // namespace

Tensor silu(const Tensor& x) {
  Tensor y(x.channels, x.height, x.width);
  silu_into(x.data.data(), y.data.data(), x.size());
  return y;
}

std::vector<double> silu(std::span<const double> x) {
  std::vector<double> y(x.size());
  silu_into(x.data(), y.data(), x.size());
  return y;
}

Tensor silu_backward(const Tensor& x, const Tensor& grad_out) {
  Tensor g(x.channels, x.height, x.width);
  silu_grad_into(x.data.data(), grad_out.data.data(), g.data.data(), x.size());
  return g;
}

std::vector<double> silu_backward(std::span<const double> x, std::span<const double> grad_out) {
  std::vector<double> g(x.size());
  silu_grad_into(x.data(), grad_out.data(), g.data(), x.size());
  return g;
}

void add_channel_bias(Tensor& x, std::span<const double> bias) {
  for (int c = 0; c < x.channels; ++c) {
    for (double& v : x.plane(c)) v += bias[c];
  }
}

void accumulate_channel_sums(const Tensor& grad, std::vector<double>& out) {
  out.assign(grad.channels, 0.0);
  for (int c = 0; c < grad.channels; ++c) {
    double s = 0.0;
    for (double v : grad.plane(c)) s += v;
    out[c] = s;
  }
}

Tensor upsample2x(const Tensor& x, int height, int width) {
  Tensor y(x.channels, height, width);
  for (int c = 0; c < x.channels; ++c) {
    for (int i = 0; i < height; ++i) {
      for (int j = 0; j < width; ++j) y.at(c, i, j) = x.at(c, i / 2, j / 2);
    }
  }
  return y;
}

Tensor upsample2x_backward(const Tensor& grad_out, int src_height, int src_width) {
  Tensor g(grad_out.channels, src_height, src_width);
  for (int c = 0; c < grad_out.channels; ++c) {
    for (int i = 0; i < grad_out.height; ++i) {
      for (int j = 0; j < grad_out.width; ++j) g.at(c, i / 2, j / 2) += grad_out.at(c, i, j);
    }
  }
  return g;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.height != b.height || a.width != b.width) throw std::invalid_argument("concat_channels: size mismatch");
  Tensor y(a.channels + b.channels, a.height, a.width);
  std::copy(a.data.begin(), a.data.end(), y.data.begin());
  std::copy(b.data.begin(), b.data.end(), y.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
  return y;
}

void split_channels(const Tensor& grad, int first_channels, Tensor& grad_a, Tensor& grad_b) {
  grad_a = Tensor(first_channels, grad.height, grad.width);
  grad_b = Tensor(grad.channels - first_channels, grad.height, grad.width);
  std::copy(grad.data.begin(), grad.data.begin() + static_cast<std::ptrdiff_t>(grad_a.size()), grad_a.data.begin());
  std::copy(grad.data.begin() + static_cast<std::ptrdiff_t>(grad_a.size()), grad.data.end(), grad_b.data.begin());
}

void add_inplace(Tensor& a, const Tensor& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a.data[i] += b.data[i];
}

}  // namespace gdse::nn
