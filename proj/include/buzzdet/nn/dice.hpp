#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "buzzdet/error.hpp"

namespace buzzdet::nn {

inline constexpr double kDiceSmoothing = 1.0;

template <class Real>
struct DiceResult {
  Real loss = 0;
  std::vector<Real> grad;  // d loss / d p_i
};

namespace detail {

template <class Real>
void check_dice_inputs(std::span<const Real> p, std::span<const std::uint8_t> g) {
  if (p.empty()) throw DomainError("dice_loss: empty input");
  if (p.size() != g.size()) throw ShapeError("dice_loss: predictions and targets differ in length");
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= Real(0) && p[i] <= Real(1)))
      throw DomainError("dice_loss: probability outside [0,1] at index " + std::to_string(i));
    if (g[i] > 1) throw DomainError("dice_loss: non-binary target at index " + std::to_string(i));
  }
}

}  // namespace detail

/// Smoothed Dice loss over the whole batch:
///   DL = 1 - (2 sum p g + eps) / (sum p + sum g + eps)
/// with the exact gradient
///   dDL/dp_i = -(2 g_i D - (2 S_pg + eps)) / D^2,   D = S_p + S_g + eps.
template <class Real>
DiceResult<Real> dice_loss(std::span<const Real> p, std::span<const std::uint8_t> g, Real eps = Real(kDiceSmoothing)) {
  detail::check_dice_inputs(p, g);
  Real spg = 0, sp = 0, sg = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    spg += p[i] * g[i];
    sp += p[i];
    sg += g[i];
  }
  const Real num = Real(2) * spg + eps;
  const Real den = sp + sg + eps;
  DiceResult<Real> r;
  r.loss = Real(1) - num / den;
  r.grad.resize(p.size());
  const Real inv_den2 = Real(1) / (den * den);
  for (std::size_t i = 0; i < p.size(); ++i) r.grad[i] = -(Real(2) * g[i] * den - num) * inv_den2;
  return r;
}

/// Loss value only, same smoothing as dice_loss.
template <class Real>
Real dice_value(std::span<const Real> p, std::span<const std::uint8_t> g, Real eps = Real(kDiceSmoothing)) {
  detail::check_dice_inputs(p, g);
  Real spg = 0, sp = 0, sg = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    spg += p[i] * g[i];
    sp += p[i];
    sg += g[i];
  }
  return Real(1) - (Real(2) * spg + eps) / (sp + sg + eps);
}

}  // namespace buzzdet::nn
