#pragma once

// Reference computations that share no code with the library.

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace oracle {

inline double ln_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

inline double beta_log_pdf(double x, double one_minus_x, double a, double b) {
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log(one_minus_x) - ln_beta(a, b);
}

/// -integral of f ln f over (0, 1) for the Beta(a, b) density, by tanh-sinh quadrature.
inline double beta_entropy_quadrature(double a, double b) {
  const auto integrand = [a, b](double x, double xc) {
    // xc is the signed distance to the nearer endpoint, which keeps 1 - x exact near 1.
    const double lo = xc <= 0.0 ? -xc : x;
    const double hi = xc > 0.0 ? xc : 1.0 - x;
    if (lo <= 0.0 || hi <= 0.0) return 0.0;
    const double lf = beta_log_pdf(lo, hi, a, b);
    if (lf < -700.0) return 0.0;
    return -std::exp(lf) * lf;
  };
  boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(integrand, 0.0, 1.0, 1e-12);
}

inline double beta_draw(std::mt19937_64& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  const double x = ga(rng), y = gb(rng);
  return x / (x + y);
}

struct Estimate {
  double value = 0.0;
  double standard_error = 0.0;
};

/// Monte-Carlo estimate of sum_i E[P_i] h(P_i^+) + H(normalised means), drawing
/// P_i from Beta(alpha_i, beta_i). Uses E[P g(P)] = E[P] E_{Beta(a+1,b)}[g] with
/// g = -ln f_{a+1,b}, so each draw yields sum_i -P_i ln f_{a_i+1,b_i}(P_i).
inline Estimate mjent_monte_carlo(const std::vector<double>& alpha, const std::vector<double>& beta, int draws,
                                  std::mt19937_64& rng) {
  const std::size_t classes = alpha.size();
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < draws; ++k) {
    double term = 0.0;
    for (std::size_t i = 0; i < classes; ++i) {
      const double p = beta_draw(rng, alpha[i], beta[i]);
      const double q = 1.0 - p;
      if (p <= 0.0 || q <= 0.0) continue;
      term += -p * beta_log_pdf(p, q, alpha[i] + 1.0, beta[i]);
    }
    sum += term;
    sum_sq += term * term;
  }
  const double n = static_cast<double>(draws);
  const double mean = sum / n;
  const double var = (sum_sq - n * mean * mean) / (n - 1.0);

  double total = 0.0;
  std::vector<double> means(classes);
  for (std::size_t i = 0; i < classes; ++i) total += means[i] = alpha[i] / (alpha[i] + beta[i]);
  double h = 0.0;
  for (const double m : means) {
    const double p = m / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return {mean + h, std::sqrt(var / n)};
}

inline double shannon(const Eigen::VectorXd& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0.0) h -= p(i) * std::log(p(i));
  }
  return h;
}

/// Random C x m matrix of softmax columns. Logit scale varies from nearly
/// uniform columns to nearly one-hot ones.
inline Eigen::MatrixXd random_sample_matrix(std::mt19937_64& rng, Eigen::Index classes, Eigen::Index samples) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> log_scale(-3.0, 3.5);
  const double scale = std::exp(log_scale(rng));
  const double spread = std::exp(log_scale(rng)) * 0.3;
  Eigen::VectorXd centre(classes);
  for (Eigen::Index c = 0; c < classes; ++c) centre(c) = scale * normal(rng);
  Eigen::MatrixXd out(classes, samples);
  for (Eigen::Index j = 0; j < samples; ++j) {
    Eigen::VectorXd logits(classes);
    for (Eigen::Index c = 0; c < classes; ++c) logits(c) = centre(c) + spread * normal(rng);
    logits.array() -= logits.maxCoeff();
    const Eigen::VectorXd e = logits.array().exp();
    out.col(j) = e / e.sum();
  }
  return out;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "balent_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
