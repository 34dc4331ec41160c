#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "buzzdet/error.hpp"
#include "buzzdet/models/dataset.hpp"

namespace buzzdet::models {

struct LogRegConfig {
  double grad_tol = 1e-6;       // stop when the inf-norm of the mean-loglik gradient drops below
  std::size_t max_iter = 10000;
};

/// Logistic regression with coefficients on the original feature scale.
struct LogisticModel {
  std::vector<double> weights;
  double intercept = 0.0;
  std::size_t iterations = 0;
  double final_grad_norm = 0.0;

  double logit(std::span<const double> row) const {
    if (row.size() != weights.size()) throw ShapeError("LogisticModel: row width does not match model");
    double z = intercept;
    for (std::size_t j = 0; j < row.size(); ++j) z += weights[j] * row[j];
    return z;
  }
  double predict_proba(std::span<const double> row) const {
    const double z = logit(row);
    return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  }

  friend bool operator==(const LogisticModel&, const LogisticModel&) = default;
};

namespace detail {

// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

}  // namespace detail

/// Maximum-likelihood fit by full-batch gradient ascent with backtracking on
/// internally standardized features (training mean and population STD;
/// constant columns get a zero coefficient).
inline LogisticModel logreg_fit(const Dataset& data, const LogRegConfig& cfg = {}) {
  if (data.rows == 0) throw ValidationError("logreg_fit: empty training set");
  data.require_both_classes("logreg_fit");
  data.require_finite("logreg_fit");
  const std::size_t n = data.rows, p = data.cols;
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<double> mu(p, 0.0), sd(p, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) mu[j] += data.x[i * p + j];
  for (auto& m : mu) m *= inv_n;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      const double d = data.x[i * p + j] - mu[j];
      sd[j] += d * d;
    }
  for (auto& s : sd) s = std::sqrt(s * inv_n);

  // Standardized design; column j is all zero when the feature is constant.
  std::vector<double> z(n * p, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j)
      if (sd[j] > 0.0) z[i * p + j] = (data.x[i * p + j] - mu[j]) / sd[j];

  // beta[0] is the intercept.
  std::vector<double> beta(p + 1, 0.0), grad(p + 1), trial(p + 1), eta(n);
  auto linear = [&](const std::vector<double>& b) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = b[0];
      const double* zi = &z[i * p];
      for (std::size_t j = 0; j < p; ++j) s += b[j + 1] * zi[j];
      eta[i] = s;
    }
  };
  auto loglik = [&]() {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) ll += data.y[i] * eta[i] - detail::softplus(eta[i]);
    return ll * inv_n;
  };

  linear(beta);
  double ll = loglik();
  double step = 1.0;
  LogisticModel m;
  std::size_t it = 0;
  double gnorm = 0.0;
  for (; it < cfg.max_iter; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = data.y[i] - 1.0 / (1.0 + std::exp(-eta[i]));
      grad[0] += r;
      const double* zi = &z[i * p];
      for (std::size_t j = 0; j < p; ++j) grad[j + 1] += r * zi[j];
    }
    double g2 = 0.0;
    gnorm = 0.0;
    for (auto& g : grad) {
      g *= inv_n;
      g2 += g * g;
      gnorm = std::max(gnorm, std::abs(g));
    }
    if (gnorm < cfg.grad_tol) break;

    // Armijo backtracking; the accepted step seeds the next iteration (doubled).
    step = std::min(step * 2.0, 1e6);
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t j = 0; j <= p; ++j) trial[j] = beta[j] + step * grad[j];
      linear(trial);
      const double ll_new = loglik();
      if (ll_new >= ll + 1e-4 * step * g2) {
        beta.swap(trial);
        ll = ll_new;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      linear(beta);
      break;
    }
  }

  m.iterations = it;
  m.final_grad_norm = gnorm;
  m.weights.assign(p, 0.0);
  m.intercept = beta[0];
  for (std::size_t j = 0; j < p; ++j) {
    if (sd[j] > 0.0) {
      m.weights[j] = beta[j + 1] / sd[j];
      m.intercept -= beta[j + 1] * mu[j] / sd[j];
    }
  }
  return m;
}

}  // namespace buzzdet::models
