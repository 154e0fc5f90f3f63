#pragma once

#include <cmath>

#include "ndb/errors.hpp"

namespace ndb {

namespace detail {
// Exponent arguments are clamped to +-500; below 1e-200 the sigmoid is
// indistinguishable from its limit in double precision anyway.
inline double clamp_exponent(double z) {
  if (z > 500.0) return 500.0;
  if (z < -500.0) return -500.0;
  return z;
}
}  // namespace detail

// Sigmoid value mu(z) = 1/(1+exp(-z)), branch on sign for stability.
inline double link_value(double z) {
  if (!std::isfinite(z)) throw InputError("link_value: non-finite argument");
  z = detail::clamp_exponent(z);
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Derivative mu'(z) = mu(z)(1-mu(z)).
inline double link_derivative(double z) {
  if (!std::isfinite(z)) throw InputError("link_derivative: non-finite argument");
  const double v = link_value(z);
  return v * (1.0 - v);
}

// log mu(z) = -log1p(exp(-z)), stable on both tails.
inline double log_link_value(double z) {
  if (!std::isfinite(z)) throw InputError("log_link_value: non-finite argument");
  z = detail::clamp_exponent(z);
  if (z >= 0.0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

// Link function with its Lipschitz constant L_mu and curvature floor
// kappa_mu. kappa_mu is configuration, not measured: 1.0 reproduces the
// experimental setup; sigmoid_link_bounded derives the worst-case value
// from a known reward bound for theory-faithful runs.
struct LinkFunction {
  double lipschitz = 0.25;
  double curvature_floor = 1.0;

  double value(double z) const { return link_value(z); }
  double derivative(double z) const { return link_derivative(z); }
  double log_value(double z) const { return log_link_value(z); }
};

inline LinkFunction sigmoid_link() { return LinkFunction{}; }

// kappa_mu = mu'(2*f_max): reward differences live in [-2 f_max, 2 f_max].
inline LinkFunction sigmoid_link_bounded(double f_max) {
  if (!(f_max > 0.0)) throw ConfigError("sigmoid_link_bounded: f_max must be positive");
  return LinkFunction{0.25, link_derivative(2.0 * f_max)};
}

}  // namespace ndb
