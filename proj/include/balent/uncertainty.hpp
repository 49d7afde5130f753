#pragma once

// Per-pixel uncertainty from Monte-Carlo softmax samples. A pixel is a C x m
// matrix: one row per class, one column per stochastic forward pass.

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "balent/errors.hpp"
#include "balent/special_beta.hpp"

namespace balent {

using Index = Eigen::Index;

inline constexpr double kProbabilitySumTolerance = 1e-4;

/// -sum p ln p in nats, with 0 ln 0 = 0.
template <typename Derived>
typename Derived::Scalar shannon_entropy(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  Scalar sum = 0, entropy = 0;
  for (Index i = 0; i < p.size(); ++i) {
    const Scalar v = p(i);
    if (!(v >= Scalar(0))) throw ValidationError("shannon_entropy: negative or NaN probability component");
    sum += v;
    if (v > Scalar(0)) entropy -= v * std::log(v);
  }
  if (std::abs(sum - Scalar(1)) > Scalar(kProbabilitySumTolerance)) {
    throw ValidationError("shannon_entropy: probabilities sum to " + std::to_string(static_cast<double>(sum)));
  }
  return entropy;
}

template <typename Scalar = double>
struct EntropyDecomposition {
  /// Entropy of the MC-mean prediction.
  Scalar shannon = 0;
  /// Mutual information between prediction and parameters (BALD).
  Scalar epistemic = 0;
  /// Expected entropy of a single stochastic prediction.
  Scalar aleatoric = 0;
  /// Epistemic term before round-off clamping.
  Scalar epistemic_unclamped = 0;
};

/// Splits the entropy of the mean prediction into mutual information and
/// expected conditional entropy, estimated from the m sample columns.
template <typename Derived>
EntropyDecomposition<typename Derived::Scalar> decompose_entropy(const Eigen::MatrixBase<Derived>& pixel_samples,
                                                                 double clamp_tolerance = 1e-12) {
  using Scalar = typename Derived::Scalar;
  const Index m = pixel_samples.cols();
  if (m < 1 || pixel_samples.rows() < 1) throw ValidationError("decompose_entropy: empty sample matrix");

  EntropyDecomposition<Scalar> out;
  // Identical columns agree exactly; averaging them would only add round-off.
  if ((pixel_samples.colwise() - pixel_samples.col(0)).isZero(0)) {
    out.shannon = out.aleatoric = shannon_entropy(pixel_samples.col(0));
    return out;
  }
  Scalar aleatoric = 0;
  for (Index j = 0; j < m; ++j) aleatoric += shannon_entropy(pixel_samples.col(j));
  out.aleatoric = aleatoric / Scalar(m);
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean = pixel_samples.rowwise().mean();
  out.shannon = shannon_entropy(mean);
  out.epistemic_unclamped = out.shannon - out.aleatoric;
  out.epistemic = out.epistemic_unclamped;
  if (out.epistemic < Scalar(0)) {
    if (out.epistemic < -Scalar(clamp_tolerance)) {
      throw NumericError("decompose_entropy: mutual information " +
                         std::to_string(static_cast<double>(out.epistemic)) + " is negative beyond round-off");
    }
    out.epistemic = 0;
  }
  return out;
}

/// Expected differential entropy of the conjugate posteriors, weighted by the
/// Beta means. Always <= 0.
template <typename Scalar>
Scalar posterior_uncertainty(std::span<const BetaParams<Scalar>> params) {
  Scalar total = 0;
  for (const auto& p : params) total += beta_mean(p) * beta_diff_entropy(posterior_of(p));
  return total;
}

/// Beta means renormalised to a probability vector; independent per-class fits
/// need not sum to exactly one.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> marginal_prediction(std::span<const BetaParams<Scalar>> params) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> means(static_cast<Index>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) means(static_cast<Index>(i)) = beta_mean(params[i]);
  return means / means.sum();
}

/// Marginalised joint entropy: posterior uncertainty plus the Shannon entropy
/// of the marginal prediction.
template <typename Scalar>
Scalar mjent(std::span<const BetaParams<Scalar>> params) {
  return posterior_uncertainty(params) + shannon_entropy(marginal_prediction(params));
}

/// MJEnt rescaled by (H + ln 2). The denominator is at least ln 2, and the
/// result is strictly below one.
template <typename Scalar>
Scalar balent(std::span<const BetaParams<Scalar>> params) {
  const Scalar h = shannon_entropy(marginal_prediction(params));
  return (posterior_uncertainty(params) + h) / (h + std::numbers::ln2_v<Scalar>);
}

struct UncertaintyConfig {
  BetaFitConfig fit;
  /// Largest negative mutual information treated as round-off and clamped to 0.
  double epistemic_clamp = 1e-12;
};

template <typename Scalar = double>
struct UncertaintyRecord {
  Scalar shannon = 0;
  Scalar epistemic = 0;
  Scalar aleatoric = 0;
  Scalar posterior_u = 0;
  Scalar mjent = 0;
  Scalar balent = 0;
};

/// All measures for one pixel. Shannon entropy here is that of the MC-mean
/// prediction, so that epistemic + aleatoric reproduces it exactly; the
/// posterior term weights by the fitted Beta means.
template <typename Derived>
UncertaintyRecord<typename Derived::Scalar> record_for_pixel(const Eigen::MatrixBase<Derived>& pixel_samples,
                                                             const UncertaintyConfig& cfg = {}) {
  using Scalar = typename Derived::Scalar;
  if (pixel_samples.cols() < 2) throw ValidationError("record_for_pixel: need m >= 2 samples per class");
  const auto split = decompose_entropy(pixel_samples, cfg.epistemic_clamp);

  const Index classes = pixel_samples.rows();
  Scalar posterior = 0;
  for (Index c = 0; c < classes; ++c) {
    const auto fit = fit_beta_moments(pixel_samples.row(c), cfg.fit);
    posterior += beta_mean(fit) * beta_diff_entropy(posterior_of(fit));
  }

  UncertaintyRecord<Scalar> r;
  r.shannon = split.shannon;
  r.epistemic = split.epistemic;
  r.aleatoric = split.aleatoric;
  r.posterior_u = posterior;
  r.mjent = posterior + split.shannon;
  r.balent = r.mjent / (split.shannon + std::numbers::ln2_v<Scalar>);
  return r;
}

/// Beta fits for every class of a pixel.
template <typename Derived>
std::vector<BetaParams<typename Derived::Scalar>> fit_pixel(const Eigen::MatrixBase<Derived>& pixel_samples,
                                                            const BetaFitConfig& cfg = {}) {
  std::vector<BetaParams<typename Derived::Scalar>> fits;
  fits.reserve(static_cast<std::size_t>(pixel_samples.rows()));
  for (Index c = 0; c < pixel_samples.rows(); ++c) fits.push_back(fit_beta_moments(pixel_samples.row(c), cfg));
  return fits;
}

}  // namespace balent
