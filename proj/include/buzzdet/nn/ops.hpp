#pragma once

// Forward and backward kernels for 1D segmentation networks. Every forward
// checks its output for NaN/Inf and reports the offending operation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "buzzdet/error.hpp"
#include "buzzdet/nn/tensor.hpp"

namespace buzzdet::nn {

/// Convolution weights (out_ch, in_ch, kernel) and bias (out_ch). Same-length
/// output under symmetric zero padding, so the kernel must be odd.
template <class Real>
struct Conv1dParams {
  std::size_t out_ch = 0, in_ch = 0, kernel = 1;
  std::vector<Real> weight;
  std::vector<Real> bias;

  Conv1dParams() = default;
  Conv1dParams(std::size_t out, std::size_t in, std::size_t k)
      : out_ch(out), in_ch(in), kernel(k), weight(out * in * k, Real(0)), bias(out, Real(0)) {
    validate();
  }

  void validate() const {
    if (kernel % 2 == 0) throw ConfigError("Conv1dParams: kernel size must be odd");
    if (weight.size() != out_ch * in_ch * kernel || bias.size() != out_ch)
      throw ShapeError("Conv1dParams: weight/bias sizes do not match (out, in, kernel)");
  }
  Real& w(std::size_t o, std::size_t c, std::size_t k) { return weight[(o * in_ch + c) * kernel + k]; }
  const Real& w(std::size_t o, std::size_t c, std::size_t k) const { return weight[(o * in_ch + c) * kernel + k]; }
  std::size_t param_count() const { return weight.size() + bias.size(); }

  friend bool operator==(const Conv1dParams&, const Conv1dParams&) = default;
};

template <class Real>
struct Conv1dGrads {
  BasicTensor3<Real> grad_x;
  std::vector<Real> grad_w;
  std::vector<Real> grad_b;
};

namespace detail {

// Output positions t for which t + shift is a valid input index.
inline void valid_range(std::ptrdiff_t shift, std::size_t len, std::size_t& t0, std::size_t& t1) {
  const auto l = static_cast<std::ptrdiff_t>(len);
  t0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -shift));
  t1 = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(l - shift, 0, l));
}

}  // namespace detail

/// out[b,o,t] = bias[o] + sum_{c,k} w[o,c,k] * x[b,c,t+k-K/2], zeros outside the input.
template <class Real>
BasicTensor3<Real> conv1d_forward(const BasicTensor3<Real>& x, const Conv1dParams<Real>& p) {
  if (x.channels() != p.in_ch)
    throw ShapeError("conv1d: input has " + std::to_string(x.channels()) + " channels, layer expects " +
                     std::to_string(p.in_ch));
  const std::size_t len = x.length();
  const auto half = static_cast<std::ptrdiff_t>(p.kernel / 2);
  BasicTensor3<Real> out(x.batch(), p.out_ch, len);
  for (std::size_t b = 0; b < x.batch(); ++b) {
    for (std::size_t o = 0; o < p.out_ch; ++o) {
      Real* y = out.row(b, o).data();
      std::fill(y, y + len, p.bias[o]);
      for (std::size_t c = 0; c < p.in_ch; ++c) {
        const Real* xin = x.row(b, c).data();
        for (std::size_t k = 0; k < p.kernel; ++k) {
          const Real w = p.w(o, c, k);
          const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(k) - half;
          std::size_t t0, t1;
          detail::valid_range(shift, len, t0, t1);
          const Real* xs = xin + shift;
          for (std::size_t t = t0; t < t1; ++t) y[t] += w * xs[t];
        }
      }
    }
  }
  check_finite(out, "conv1d");
  return out;
}

/// Exact adjoint of conv1d_forward with respect to input, weights and bias.
template <class Real>
Conv1dGrads<Real> conv1d_backward(const BasicTensor3<Real>& x, const Conv1dParams<Real>& p,
                                  const BasicTensor3<Real>& grad_out) {
  if (x.channels() != p.in_ch || grad_out.channels() != p.out_ch || grad_out.batch() != x.batch() ||
      grad_out.length() != x.length())
    throw ShapeError("conv1d_backward: input " + x.shape_str() + " and grad " + grad_out.shape_str() +
                     " inconsistent with layer");
  const std::size_t len = x.length();
  const auto half = static_cast<std::ptrdiff_t>(p.kernel / 2);
  Conv1dGrads<Real> g{BasicTensor3<Real>(x.batch(), x.channels(), len), std::vector<Real>(p.weight.size(), Real(0)),
                      std::vector<Real>(p.out_ch, Real(0))};
  for (std::size_t b = 0; b < x.batch(); ++b) {
    for (std::size_t o = 0; o < p.out_ch; ++o) {
      const Real* go = grad_out.row(b, o).data();
      Real gb = 0;
      for (std::size_t t = 0; t < len; ++t) gb += go[t];
      g.grad_b[o] += gb;
      for (std::size_t c = 0; c < p.in_ch; ++c) {
        const Real* xin = x.row(b, c).data();
        Real* gx = g.grad_x.row(b, c).data();
        for (std::size_t k = 0; k < p.kernel; ++k) {
          const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(k) - half;
          std::size_t t0, t1;
          detail::valid_range(shift, len, t0, t1);
          const Real w = p.w(o, c, k);
          const Real* xs = xin + shift;
          Real* gxs = gx + shift;
          Real acc = 0;
          for (std::size_t t = t0; t < t1; ++t) {
            acc += go[t] * xs[t];
            gxs[t] += w * go[t];
          }
          g.grad_w[(o * p.in_ch + c) * p.kernel + k] += acc;
        }
      }
    }
  }
  return g;
}

template <class Real>
struct PoolResult {
  BasicTensor3<Real> y;
  std::vector<std::size_t> argmax;  // input time index per output element
};

/// Non-overlapping max-pool; the first maximum of each window wins.
template <class Real>
PoolResult<Real> maxpool1d(const BasicTensor3<Real>& x, std::size_t factor) {
  if (factor == 0) throw ConfigError("maxpool1d: factor must be >= 1");
  if (x.length() % factor != 0)
    throw ShapeError("maxpool1d: length " + std::to_string(x.length()) + " not divisible by " + std::to_string(factor));
  const std::size_t out_len = x.length() / factor;
  PoolResult<Real> r{BasicTensor3<Real>(x.batch(), x.channels(), out_len), {}};
  r.argmax.resize(r.y.size());
  std::size_t idx = 0;
  for (std::size_t b = 0; b < x.batch(); ++b) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      const Real* xin = x.row(b, c).data();
      Real* y = r.y.row(b, c).data();
      for (std::size_t t = 0; t < out_len; ++t, ++idx) {
        std::size_t best = t * factor;
        for (std::size_t j = best + 1; j < (t + 1) * factor; ++j)
          if (xin[j] > xin[best]) best = j;
        y[t] = xin[best];
        r.argmax[idx] = best;
      }
    }
  }
  check_finite(r.y, "maxpool1d");
  return r;
}

template <class Real>
BasicTensor3<Real> maxpool1d_backward(const BasicTensor3<Real>& grad_out, const std::vector<std::size_t>& argmax,
                                      std::size_t in_length) {
  if (argmax.size() != grad_out.size()) throw ShapeError("maxpool1d_backward: argmax does not match gradient");
  BasicTensor3<Real> gx(grad_out.batch(), grad_out.channels(), in_length);
  std::size_t idx = 0;
  for (std::size_t b = 0; b < grad_out.batch(); ++b)
    for (std::size_t c = 0; c < grad_out.channels(); ++c) {
      const Real* go = grad_out.row(b, c).data();
      Real* g = gx.row(b, c).data();
      for (std::size_t t = 0; t < grad_out.length(); ++t, ++idx) g[argmax[idx]] += go[t];
    }
  return gx;
}

/// Nearest-neighbour upsampling: each value repeated `factor` times.
template <class Real>
BasicTensor3<Real> upsample1d_nearest(const BasicTensor3<Real>& x, std::size_t factor) {
  if (factor < 1) throw ConfigError("upsample1d_nearest: factor must be >= 1");
  BasicTensor3<Real> y(x.batch(), x.channels(), x.length() * factor);
  for (std::size_t b = 0; b < x.batch(); ++b)
    for (std::size_t c = 0; c < x.channels(); ++c) {
      const Real* xin = x.row(b, c).data();
      Real* out = y.row(b, c).data();
      for (std::size_t t = 0; t < x.length(); ++t)
        for (std::size_t j = 0; j < factor; ++j) out[t * factor + j] = xin[t];
    }
  check_finite(y, "upsample1d_nearest");
  return y;
}

/// Sums the gradient over each replication group.
template <class Real>
BasicTensor3<Real> upsample1d_nearest_backward(const BasicTensor3<Real>& grad_out, std::size_t factor) {
  if (factor < 1) throw ConfigError("upsample1d_nearest_backward: factor must be >= 1");
  if (grad_out.length() % factor != 0) throw ShapeError("upsample1d_nearest_backward: length not divisible by factor");
  BasicTensor3<Real> gx(grad_out.batch(), grad_out.channels(), grad_out.length() / factor);
  for (std::size_t b = 0; b < gx.batch(); ++b)
    for (std::size_t c = 0; c < gx.channels(); ++c) {
      const Real* go = grad_out.row(b, c).data();
      Real* g = gx.row(b, c).data();
      for (std::size_t t = 0; t < gx.length(); ++t) {
        Real s = 0;
        for (std::size_t j = 0; j < factor; ++j) s += go[t * factor + j];
        g[t] = s;
      }
    }
  return gx;
}

/// Channel concatenation, `a` first. An empty operand (zero channels) is allowed.
template <class Real>
BasicTensor3<Real> concat_channels(const BasicTensor3<Real>& a, const BasicTensor3<Real>& b) {
  if (a.channels() == 0) return b;
  if (b.channels() == 0) return a;
  if (a.batch() != b.batch() || a.length() != b.length())
    throw ShapeError("concat_channels: " + a.shape_str() + " and " + b.shape_str() + " differ in batch or length");
  BasicTensor3<Real> y(a.batch(), a.channels() + b.channels(), a.length());
  for (std::size_t n = 0; n < a.batch(); ++n) {
    for (std::size_t c = 0; c < a.channels(); ++c) std::ranges::copy(a.row(n, c), y.row(n, c).begin());
    for (std::size_t c = 0; c < b.channels(); ++c) std::ranges::copy(b.row(n, c), y.row(n, a.channels() + c).begin());
  }
  return y;
}

template <class Real>
struct SplitGrads {
  BasicTensor3<Real> grad_a, grad_b;
};

/// Backward of concat_channels: splits the gradient at channel `a_channels`.
template <class Real>
SplitGrads<Real> split_channels(const BasicTensor3<Real>& g, std::size_t a_channels) {
  if (a_channels > g.channels()) throw ShapeError("split_channels: split point beyond channel count");
  SplitGrads<Real> r{BasicTensor3<Real>(g.batch(), a_channels, g.length()),
                     BasicTensor3<Real>(g.batch(), g.channels() - a_channels, g.length())};
  for (std::size_t n = 0; n < g.batch(); ++n) {
    for (std::size_t c = 0; c < a_channels; ++c) std::ranges::copy(g.row(n, c), r.grad_a.row(n, c).begin());
    for (std::size_t c = a_channels; c < g.channels(); ++c)
      std::ranges::copy(g.row(n, c), r.grad_b.row(n, c - a_channels).begin());
  }
  return r;
}

template <class Real>
BasicTensor3<Real> relu(BasicTensor3<Real> x) {
  for (auto& v : x.data()) v = v > Real(0) ? v : Real(0);
  check_finite(x, "relu");
  return x;
}

// Gradient passes where the forward output was positive.
template <class Real>
BasicTensor3<Real> relu_backward(BasicTensor3<Real> grad_out, const BasicTensor3<Real>& y) {
  auto g = grad_out.data();
  auto out = y.data();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(out[i] > Real(0))) g[i] = Real(0);
  return grad_out;
}

template <class Real>
BasicTensor3<Real> sigmoid(BasicTensor3<Real> x) {
  for (auto& v : x.data()) v = v >= Real(0) ? Real(1) / (Real(1) + std::exp(-v)) : std::exp(v) / (Real(1) + std::exp(v));
  check_finite(x, "sigmoid");
  return x;
}

template <class Real>
BasicTensor3<Real> sigmoid_backward(BasicTensor3<Real> grad_out, const BasicTensor3<Real>& y) {
  auto g = grad_out.data();
  auto p = y.data();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= p[i] * (Real(1) - p[i]);
  return grad_out;
}

}  // namespace buzzdet::nn
