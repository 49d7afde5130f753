#pragma once

// Log-gamma, digamma and the Beta-distribution machinery used to approximate
// per-class MC-dropout histograms: moment fitting, mean, differential entropy
// and the conjugate posterior after observing the class.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "balent/errors.hpp"

namespace balent {

namespace detail {

template <typename Scalar>
void require_positive(Scalar x, const char* fn) {
  if (!(x > Scalar(0)) || !std::isfinite(x)) {
    throw DomainError(std::string(fn) + ": argument must be positive and finite, got " +
                      std::to_string(static_cast<double>(x)));
  }
}

// Stirling-series corrections. With B_2k the Bernoulli numbers:
//   lnG(x)  = (x - 1/2) ln x - x + ln(2 pi)/2 + sum B_2k / (2k (2k-1) x^(2k-1))
//   psi(x)  = ln x - 1/(2x) - sum B_2k / (2k x^2k)
template <typename Scalar>
Scalar ln_gamma_series(Scalar x) {
  static constexpr std::array<double, 7> c = {1.0 / 12.0,   -1.0 / 360.0,        1.0 / 1260.0, -1.0 / 1680.0,
                                              1.0 / 1188.0, -691.0 / 360360.0, 1.0 / 156.0};
  const Scalar inv = Scalar(1) / x;
  const Scalar inv2 = inv * inv;
  Scalar sum = 0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) sum = sum * inv2 + Scalar(*it);
  return sum * inv;
}

template <typename Scalar>
Scalar digamma_series(Scalar x) {
  static constexpr std::array<double, 7> c = {1.0 / 12.0,  -1.0 / 120.0,      1.0 / 252.0, -1.0 / 240.0,
                                              1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0};
  const Scalar inv2 = Scalar(1) / (x * x);
  Scalar sum = 0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) sum = sum * inv2 + Scalar(*it);
  return sum * inv2;
}

}  // namespace detail

/// ln Gamma(x) for x > 0. Shifts x >= 15 by recurrence, then Stirling's series.
template <typename Scalar>
Scalar ln_gamma(Scalar x) {
  detail::require_positive(x, "ln_gamma");
  if (x == Scalar(1) || x == Scalar(2)) return Scalar(0);
  Scalar product = 1;
  while (x < Scalar(15)) {
    product *= x;
    x += Scalar(1);
  }
  using std::log;
  const Scalar half_ln_two_pi = Scalar(0.5) * log(Scalar(2) * std::numbers::pi_v<Scalar>);
  return (x - Scalar(0.5)) * log(x) - x + half_ln_two_pi + detail::ln_gamma_series(x) - log(product);
}

/// psi(x) = d/dx ln Gamma(x) for x > 0: upward recurrence to x >= 6, then the
/// asymptotic series.
template <typename Scalar>
Scalar digamma(Scalar x) {
  detail::require_positive(x, "digamma");
  Scalar shift = 0;
  while (x < Scalar(6)) {
    shift -= Scalar(1) / x;
    x += Scalar(1);
  }
  using std::log;
  return shift + log(x) - Scalar(0.5) / x - detail::digamma_series(x);
}

template <typename Scalar>
Scalar ln_beta_fn(Scalar a, Scalar b) {
  return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
}

template <typename Scalar = double>
struct BetaParams {
  Scalar alpha = 1;
  Scalar beta = 1;

  void validate() const {
    detail::require_positive(alpha, "BetaParams.alpha");
    detail::require_positive(beta, "BetaParams.beta");
  }

  friend bool operator==(const BetaParams&, const BetaParams&) = default;
};

/// Clamps that keep degenerate MC histograms fittable. A histogram of identical
/// samples has zero variance (alpha, beta -> inf) and a 0/1 two-point histogram
/// has maximal variance (alpha, beta -> 0).
struct BetaFitConfig {
  double eps_mean = 1e-6;
  double eps_var = 1e-10;
  /// Variance is capped at mu (1 - mu) (1 - eps_var_rel).
  double eps_var_rel = 1e-9;
};

/// Method-of-moments Beta fit from a mean and a variance, after clamping.
template <typename Scalar>
BetaParams<Scalar> beta_from_moments(Scalar mean, Scalar variance, const BetaFitConfig& cfg = {}) {
  const Scalar mu = std::clamp(mean, Scalar(cfg.eps_mean), Scalar(1) - Scalar(cfg.eps_mean));
  const Scalar spread = mu * (Scalar(1) - mu);
  const Scalar upper = spread * (Scalar(1) - Scalar(cfg.eps_var_rel));
  const Scalar v = std::min(std::max(variance, Scalar(cfg.eps_var)), upper);
  const Scalar concentration = spread / v - Scalar(1);
  return {mu * concentration, (Scalar(1) - mu) * concentration};
}

/// Fits Beta(alpha, beta) to samples in [0, 1] by matching the sample mean and
/// the population variance (divisor m).
template <typename Derived>
BetaParams<typename Derived::Scalar> fit_beta_moments(const Eigen::DenseBase<Derived>& samples,
                                                      const BetaFitConfig& cfg = {}) {
  using Scalar = typename Derived::Scalar;
  if (samples.size() < 2) throw ValidationError("fit_beta_moments: need at least 2 samples");
  if (!(samples.derived().array() >= Scalar(0)).all() || !(samples.derived().array() <= Scalar(1)).all()) {
    throw ValidationError("fit_beta_moments: samples must lie in [0, 1]");
  }
  const Scalar mean = samples.mean();
  const Scalar variance = (samples.derived().array() - mean).square().mean();
  return beta_from_moments(mean, variance, cfg);
}

template <typename Scalar>
Scalar beta_mean(const BetaParams<Scalar>& p) {
  return p.alpha / (p.alpha + p.beta);
}

namespace detail {

// For large alpha and beta the lnG / psi terms of the entropy cancel to leading
// order; expanding them analytically leaves only O(1) quantities:
//   h = ln(2 pi)/2 + (ln a + ln b)/2 - 3/2 ln s + 1/2 - 1/(2a) - 1/(2b) + 1/s
//       + G(a) + G(b) - G(s) + (a-1) D(a) + (b-1) D(b) - (s-2) D(s)
// with s = a + b, G the lnG series and D the psi series.
template <typename Scalar>
Scalar beta_entropy_asymptotic(Scalar a, Scalar b) {
  using std::log;
  const Scalar s = a + b;
  const Scalar half_ln_two_pi = Scalar(0.5) * log(Scalar(2) * std::numbers::pi_v<Scalar>);
  const Scalar leading = half_ln_two_pi + Scalar(0.5) * (log(a) + log(b)) - Scalar(1.5) * log(s) + Scalar(0.5) -
                         Scalar(0.5) / a - Scalar(0.5) / b + Scalar(1) / s;
  const Scalar corrections = ln_gamma_series(a) + ln_gamma_series(b) - ln_gamma_series(s) +
                             (a - Scalar(1)) * digamma_series(a) + (b - Scalar(1)) * digamma_series(b) -
                             (s - Scalar(2)) * digamma_series(s);
  return leading + corrections;
}

inline constexpr double kAsymptoticEntropyThreshold = 20.0;

}  // namespace detail

/// Differential entropy of Beta(alpha, beta) in nats; always <= 0, zero only
/// for the uniform Beta(1, 1).
template <typename Scalar>
Scalar beta_diff_entropy(const BetaParams<Scalar>& p) {
  p.validate();
  const Scalar a = p.alpha, b = p.beta;
  if (std::min(a, b) >= Scalar(detail::kAsymptoticEntropyThreshold)) return detail::beta_entropy_asymptotic(a, b);
  return ln_beta_fn(a, b) - (a - Scalar(1)) * digamma(a) - (b - Scalar(1)) * digamma(b) +
         (a + b - Scalar(2)) * digamma(a + b);
}

/// Conjugate posterior after observing the class: Beta(alpha + 1, beta).
template <typename Scalar>
BetaParams<Scalar> posterior_of(const BetaParams<Scalar>& p) {
  return {p.alpha + Scalar(1), p.beta};
}

}  // namespace balent
