#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "balent/errors.hpp"
#include "balent/uncertainty.hpp"
#include "oracles.hpp"

using namespace balent;

namespace {

using Params = std::vector<BetaParams<double>>;

double oracle_posterior(const Params& ps) {
  double total = 0.0;
  for (const auto& p : ps) total += p.alpha / (p.alpha + p.beta) * oracle::beta_entropy_quadrature(p.alpha + 1.0, p.beta);
  return total;
}

double oracle_marginal_entropy(const Params& ps) {
  Eigen::VectorXd means(static_cast<Eigen::Index>(ps.size()));
  for (std::size_t i = 0; i < ps.size(); ++i) means(static_cast<Eigen::Index>(i)) = ps[i].alpha / (ps[i].alpha + ps[i].beta);
  return oracle::shannon(means / means.sum());
}

}  // namespace

TEST_CASE("shannon_entropy values") {
  CHECK(shannon_entropy(Eigen::Vector2d(1.0, 0.0)) == 0.0);
  CHECK(shannon_entropy(Eigen::Vector2d(0.5, 0.5)) == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
  const double direct = -(0.7 * std::log(0.7) + 0.3 * std::log(0.3));
  CHECK(shannon_entropy(Eigen::Vector2d(0.7, 0.3)) == doctest::Approx(direct).epsilon(1e-15));
  CHECK(direct == doctest::Approx(0.6108643021).epsilon(1e-9));
}

TEST_CASE("shannon_entropy validation and range") {
  CHECK_THROWS_AS(shannon_entropy(Eigen::Vector2d(1.1, -0.1)), ValidationError);
  CHECK_THROWS_AS(shannon_entropy(Eigen::Vector2d(0.5, 0.4)), ValidationError);
  CHECK_THROWS_AS(shannon_entropy(Eigen::Vector2d(std::nan(""), 1.0)), ValidationError);
  CHECK_NOTHROW(shannon_entropy(Eigen::Vector2d(0.5, 0.50005)));
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Index c = 2 + i % 9;
    const Eigen::VectorXd p = oracle::random_sample_matrix(rng, c, 1).col(0);
    const double h = shannon_entropy(p);
    CHECK(h >= 0.0);
    CHECK(h <= std::log(static_cast<double>(c)) + 1e-12);
  }
}

TEST_CASE("decompose_entropy examples") {
  SUBCASE("identical columns carry no mutual information") {
    Eigen::MatrixXd s(2, 6);
    s.row(0).setConstant(0.7);
    s.row(1).setConstant(0.3);
    const auto d = decompose_entropy(s);
    CHECK(d.epistemic == 0.0);
    CHECK(d.aleatoric == doctest::Approx(0.6108643021).epsilon(1e-9));
  }
  SUBCASE("maximally disagreeing one-hot columns") {
    Eigen::MatrixXd s(2, 4);
    s << 1, 1, 0, 0, 0, 0, 1, 1;
    const auto d = decompose_entropy(s);
    CHECK(d.epistemic == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
    CHECK(d.aleatoric == 0.0);
  }
  SUBCASE("two columns against a direct evaluation") {
    Eigen::MatrixXd s(2, 2);
    s << 0.9, 0.5, 0.1, 0.5;
    const double alea = 0.5 * (-(0.9 * std::log(0.9) + 0.1 * std::log(0.1)) + std::log(2.0));
    const double total = -(0.7 * std::log(0.7) + 0.3 * std::log(0.3));
    const auto d = decompose_entropy(s);
    CHECK(d.aleatoric == doctest::Approx(alea).epsilon(1e-14));
    CHECK(d.epistemic == doctest::Approx(total - alea).epsilon(1e-12));
    CHECK(d.shannon == doctest::Approx(total).epsilon(1e-14));
  }
}

TEST_CASE("decompose_entropy identity on random matrices") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Index c = 2 + i % 9, m = 2 + (i * 7) % 49;
    const Eigen::MatrixXd s = oracle::random_sample_matrix(rng, c, m);
    const auto d = decompose_entropy(s);
    double alea = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) alea += oracle::shannon(s.col(j));
    alea /= static_cast<double>(m);
    const Eigen::VectorXd mean = s.rowwise().mean();
    CHECK(std::abs(d.epistemic + d.aleatoric - d.shannon) <= 1e-9);
    CHECK(std::abs(d.aleatoric - alea) <= 1e-12);
    CHECK(std::abs(d.shannon - oracle::shannon(mean)) <= 1e-12);
    CHECK(d.epistemic_unclamped >= -1e-12);
    CHECK(d.epistemic >= 0.0);
  }
}

TEST_CASE("posterior_uncertainty examples") {
  const Params uniform{{1, 1}, {1, 1}};
  CHECK(std::abs(posterior_uncertainty<double>(uniform) - (0.5 - std::numbers::ln2)) <= 1e-9);
  const Params skewed{{3, 2}, {2, 3}};
  const double ref = oracle_posterior(skewed);
  CHECK(std::abs(posterior_uncertainty<double>(skewed) - ref) <= 1e-9);
  CHECK(ref == doctest::Approx(-0.3246).epsilon(5e-4));
}

TEST_CASE("mjent and balent examples") {
  const Params uniform{{1, 1}, {1, 1}};
  CHECK(mjent<double>(uniform) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(balent<double>(uniform) == doctest::Approx(0.5 / (2.0 * std::numbers::ln2)).epsilon(1e-9));

  const Params skewed{{3, 2}, {2, 3}};
  const double mj = oracle_posterior(skewed) + oracle_marginal_entropy(skewed);
  CHECK(std::abs(mjent<double>(skewed) - mj) <= 1e-9);
  CHECK(mj == doctest::Approx(0.3484).epsilon(5e-4));
  const double bal = mj / (oracle_marginal_entropy(skewed) + std::numbers::ln2);
  CHECK(std::abs(balent<double>(skewed) - bal) <= 1e-9);
  CHECK(bal == doctest::Approx(0.2550).epsilon(5e-4));

  const Params concentrated{{500, 1}, {1, 500}};
  CHECK(balent<double>(concentrated) < 0.0);
}

TEST_CASE("marginal prediction renormalises fitted means") {
  const Params ps{{1, 3}, {1, 3}, {2, 2}};
  const auto m = marginal_prediction<double>(ps);
  CHECK(m.sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m(2) == doctest::Approx(0.5));
}

TEST_CASE("bounds and relabeling invariance on random params") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> log_p(std::log(1e-3), std::log(1e4));
  for (int i = 0; i < 500; ++i) {
    Params ps(static_cast<std::size_t>(2 + i % 8));
    for (auto& p : ps) p = {std::exp(log_p(rng)), std::exp(log_p(rng))};
    const double post = posterior_uncertainty<double>(ps);
    const double mj = mjent<double>(ps);
    const double bal = balent<double>(ps);
    const double h = shannon_entropy(marginal_prediction<double>(ps));
    CHECK(post <= 0.0);
    CHECK(mj <= h);
    CHECK(bal < 1.0);
    CHECK(std::isfinite(bal));

    auto shuffled = ps;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(balent<double>(shuffled) == doctest::Approx(bal).epsilon(1e-12));
    CHECK(mjent<double>(shuffled) == doctest::Approx(mj).epsilon(1e-12));
  }
}

TEST_CASE("mjent agrees with a Monte-Carlo estimate") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.5, 12.0);
  for (int set = 0; set < 3; ++set) {
    std::vector<double> a(3), b(3);
    Params ps;
    for (int i = 0; i < 3; ++i) {
      a[i] = u(rng);
      b[i] = u(rng);
      ps.push_back({a[i], b[i]});
    }
    const auto est = oracle::mjent_monte_carlo(a, b, 200000, rng);
    CHECK(std::abs(mjent<double>(ps) - est.value) <= 3.0 * est.standard_error);
  }
}

TEST_CASE("record_for_pixel") {
  SUBCASE("identical columns") {
    Eigen::MatrixXd s(2, 20);
    s.row(0).setConstant(0.7);
    s.row(1).setConstant(0.3);
    const auto r = record_for_pixel(s);
    CHECK(r.epistemic == 0.0);
    CHECK(std::isfinite(r.balent));
    CHECK(r.posterior_u < 0.0);
  }
  SUBCASE("one sample is rejected") {
    Eigen::MatrixXd s(2, 1);
    s << 0.5, 0.5;
    CHECK_THROWS_AS(record_for_pixel(s), ValidationError);
  }
  SUBCASE("invariants against a brute-force recomputation") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 1000; ++i) {
      const Eigen::Index c = 2 + i % 9, m = 2 + (i * 13) % 49;
      const Eigen::MatrixXd s = oracle::random_sample_matrix(rng, c, m);
      const auto r = record_for_pixel(s);

      double post = 0.0;
      for (Eigen::Index k = 0; k < c; ++k) {
        const double mu0 = s.row(k).mean();
        const double var0 = (s.row(k).array() - mu0).square().mean();
        const double mu = std::clamp(mu0, 1e-6, 1.0 - 1e-6);
        const double var = std::clamp(var0, 1e-10, mu * (1 - mu) * (1 - 1e-9));
        const double kappa = mu * (1 - mu) / var - 1.0;
        const double a = mu * kappa, b = (1 - mu) * kappa;
        const double h = balent::ln_beta_fn(a + 1, b) - a * balent::digamma(a + 1) - (b - 1) * balent::digamma(b) +
                         (a + b - 1) * balent::digamma(a + b + 1);
        post += mu * h;
      }
      CHECK(std::abs(r.shannon - (r.epistemic + r.aleatoric)) <= 1e-9);
      CHECK(r.posterior_u <= 0.0);
      CHECK(std::abs(r.mjent - (r.posterior_u + r.shannon)) <= 1e-12);
      CHECK(r.balent < 1.0);
      CHECK(std::abs(r.posterior_u - post) <= 1e-8 * std::max(1.0, std::abs(post)));
    }
  }
}

TEST_CASE("float and double records agree") {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd s = oracle::random_sample_matrix(rng, 4, 20);
  const auto rd = record_for_pixel(s);
  const auto rf = record_for_pixel(Eigen::MatrixXf(s.cast<float>()));
  CHECK(rf.shannon == doctest::Approx(rd.shannon).epsilon(1e-4));
  CHECK(rf.balent == doctest::Approx(rd.balent).epsilon(1e-3));
}
