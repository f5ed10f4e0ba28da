#pragma once

// Per-dimension divergences between a diagonal posterior N(mu, exp(log_var))
// and the standard normal prior. Templated on the scalar so the VAE can
// evaluate them on Dual numbers for exact gradients; the double
// instantiations back the divergence module's diagonal closed forms.

#include <cmath>

#include "gjs/gaussian.hpp"

namespace gjs::diag {

using std::exp;
using std::log;

// KL(N(mu, s) || N(0, 1))
template <class T>
T kl_reverse(const T& mu, const T& log_var) {
  const T s = exp(log_var);
  return 0.5 * (s - log_var + mu * mu - 1.0);
}

// KL(N(0, 1) || N(mu, s))
template <class T>
T kl_forward(const T& mu, const T& log_var) {
  const T inv_s = exp(-log_var);
  return 0.5 * (inv_s + log_var + mu * mu * inv_s - 1.0);
}

// Intermediate parameters for skew w = intermediate_skew(alpha, conv):
// log sigma_a^2 = log_var - log D, mu_a = (1-w) mu / D, D = (1-w) + w s.
template <class T>
struct Intermediate {
  T mu;
  T log_var;
};

template <class T>
Intermediate<T> intermediate(const T& mu, const T& log_var, double w) {
  const T denom = (1.0 - w) + w * exp(log_var);
  return {(1.0 - w) * mu / denom, log_var - log(denom)};
}

// Weighted-KL form (1-a) KL(N1 || N_a) + a KL(N(0,1) || N_a) written out per
// dimension:
// 1/2 [((1-a)s + a)/s_a + log(s_a / s^(1-a)) + (1-a)(mu_a - mu)^2/s_a + a mu_a^2/s_a - 1]
template <class T>
T gjs(const T& mu, const T& log_var, double alpha, SkewConvention conv) {
  const auto m = intermediate(mu, log_var, intermediate_skew(alpha, conv));
  const T s = exp(log_var);
  const T inv_sa = exp(-m.log_var);
  const T dmu = m.mu - mu;
  return 0.5 * (((1.0 - alpha) * s + alpha) * inv_sa + m.log_var - (1.0 - alpha) * log_var +
                (1.0 - alpha) * dmu * dmu * inv_sa + alpha * m.mu * m.mu * inv_sa - 1.0);
}

// (1-a) KL(N_a || N1) + a KL(N_a || N(0,1)), valid for both conventions.
template <class T>
T gjs_dual(const T& mu, const T& log_var, double alpha, SkewConvention conv) {
  const auto m = intermediate(mu, log_var, intermediate_skew(alpha, conv));
  const T sa = exp(m.log_var);
  const T inv_s = exp(-log_var);
  const T dmu = mu - m.mu;
  const T to_posterior = 0.5 * (sa * inv_s + log_var - m.log_var + dmu * dmu * inv_s - 1.0);
  const T to_prior = 0.5 * (sa - m.log_var + m.mu * m.mu - 1.0);
  return (1.0 - alpha) * to_posterior + alpha * to_prior;
}

// Collapsed dual form, exact only when the intermediate skew equals the
// outer weight (Original convention), where the trace terms cancel:
// 1/2 [(1-a) mu^2/s - mu_a^2/s_a + log(s^(1-a) / s_a)]
template <class T>
T gjs_dual_collapsed(const T& mu, const T& log_var, double alpha) {
  const auto m = intermediate(mu, log_var, alpha);
  return 0.5 * ((1.0 - alpha) * mu * mu * exp(-log_var) - m.mu * m.mu * exp(-m.log_var) +
                (1.0 - alpha) * log_var - m.log_var);
}

}  // namespace gjs::diag
