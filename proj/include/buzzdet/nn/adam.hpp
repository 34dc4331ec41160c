#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "buzzdet/error.hpp"

namespace buzzdet::nn {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment accumulators, one vector per parameter block.
template <class Real>
struct AdamState {
  AdamHyper hyper;
  std::uint64_t step = 0;
  std::vector<std::vector<Real>> m, v;
};

/// One bias-corrected Adam update of every parameter block.
template <class Real>
void adam_step(std::span<const std::span<Real>> params, std::span<const std::span<const Real>> grads,
               AdamState<Real>& st) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: parameter and gradient block counts differ");
  if (st.m.empty()) {
    st.m.resize(params.size());
    st.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      st.m[i].assign(params[i].size(), Real(0));
      st.v[i].assign(params[i].size(), Real(0));
    }
  }
  if (st.m.size() != params.size()) throw ShapeError("adam_step: state block count differs from parameters");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].size() != grads[i].size() || st.m[i].size() != params[i].size())
      throw ShapeError("adam_step: block " + std::to_string(i) + " shape mismatch");

  ++st.step;
  const auto& h = st.hyper;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = st.m[i];
    auto& v = st.v[i];
    for (std::size_t j = 0; j < params[i].size(); ++j) {
      const double g = grads[i][j];
      m[j] = static_cast<Real>(h.beta1 * m[j] + (1.0 - h.beta1) * g);
      v[j] = static_cast<Real>(h.beta2 * v[j] + (1.0 - h.beta2) * g * g);
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      params[i][j] -= static_cast<Real>(h.lr * mhat / (std::sqrt(vhat) + h.eps));
    }
  }
}

}  // namespace buzzdet::nn
