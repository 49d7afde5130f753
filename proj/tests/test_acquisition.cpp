#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "balent/acquisition.hpp"
#include "balent/errors.hpp"
#include "oracles.hpp"

using namespace balent;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ScoreMap make_map(Index h, Index w, std::initializer_list<double> values) {
  ScoreMap map{AcquisitionKind::bald, RowMajorMatrix<double>(h, w)};
  std::copy(values.begin(), values.end(), map.scores.data());
  return map;
}

std::set<std::pair<Index, Index>> as_set(const SelectionList& picks) {
  std::set<std::pair<Index, Index>> out;
  for (const auto& p : picks) out.emplace(p.row, p.col);
  return out;
}

}  // namespace

TEST_CASE("balent_acq branches") {
  CHECK(balent_acq(2.0) == 0.5);
  CHECK(balent_acq(-0.3) == -0.3);
  CHECK(balent_acq(0.25) == 4.0);
  CHECK(balent_acq(0.25) > balent_acq(0.5));
  CHECK(balent_acq(0.0) == kInf);
  CHECK(balent_acq(5e-13) == kInf);
  CHECK(balent_acq(2e-12) == doctest::Approx(5e11));
  CHECK_THROWS_AS(balent_acq(std::nan("")), ValidationError);
  CHECK_THROWS_AS(balent_acq(kInf), ValidationError);
}

TEST_CASE("balent_acq ordering clauses") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    double a = u(rng), b = u(rng);
    if (i % 10 == 0) a = 0.0;
    if (a > b) std::swap(a, b);
    if (a == b) continue;
    if (a >= 0.0) CHECK(balent_acq(a) > balent_acq(b));
    if (a < 0.0 && b >= 0.0) CHECK(balent_acq(b) > balent_acq(a));
    if (b < 0.0) CHECK(balent_acq(a) < balent_acq(b));
  }
}

TEST_CASE("margin_of") {
  CHECK(margin_of(Eigen::Vector3d(0.7, 0.2, 0.1)) == doctest::Approx(0.5));
  CHECK(margin_of(Eigen::Vector2d(0.5, 0.5)) == 0.0);
  CHECK(margin_of(Eigen::Vector3d(0.1, 0.45, 0.45)) == 0.0);
  CHECK_THROWS_AS(margin_of(Eigen::VectorXd::Constant(1, 1.0)), ValidationError);
}

TEST_CASE("score_pixel per kind") {
  UncertaintyRecord<double> rec;
  rec.shannon = 0.9;
  rec.epistemic = 0.2;
  rec.aleatoric = 0.7;
  rec.balent = 0.4;
  Rng rng(3);
  CHECK(score_pixel(AcquisitionKind::balent_acq, rec, rng) == doctest::Approx(2.5));
  CHECK(score_pixel(AcquisitionKind::bald, rec, rng) == 0.2);
  CHECK(score_pixel(AcquisitionKind::entropy, rec, rng) == 0.9);
  const double r = score_pixel(AcquisitionKind::random, rec, rng);
  CHECK(r >= 0.0);
  CHECK(r < 1.0);
  CHECK_THROWS_AS(score_pixel(AcquisitionKind::margin, rec, rng), ValidationError);

  Eigen::MatrixXd same(2, 20);
  same.row(0).setConstant(0.6);
  same.row(1).setConstant(0.4);
  CHECK(score_pixel(AcquisitionKind::bald, record_for_pixel(same), rng) == 0.0);

  rec.epistemic = 0.0;
  const double floor = score_pixel(AcquisitionKind::power_bald, rec, rng);
  CHECK(std::isfinite(floor));
  CHECK(floor < -50.0);
}

TEST_CASE("random and power_bald scores are reproducible under a seed") {
  UncertaintyRecord<double> rec;
  rec.epistemic = 0.3;
  for (const auto kind : {AcquisitionKind::random, AcquisitionKind::power_bald}) {
    Rng a(derive_seed(9, 1, 2)), b(derive_seed(9, 1, 2));
    for (int i = 0; i < 100; ++i) CHECK(score_pixel(kind, rec, a) == score_pixel(kind, rec, b));
  }
}

TEST_CASE("power_bald noise is standard Gumbel around gamma log BALD") {
  UncertaintyRecord<double> rec;
  rec.epistemic = 0.05;
  AcquisitionConfig cfg;
  cfg.gamma = 2.0;
  Rng rng(derive_seed(4, 0, 0));
  const int n = 10000;
  double first = 0.0, second = 0.0, diff_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = score_pixel(AcquisitionKind::power_bald, rec, rng, cfg);
    const double y = score_pixel(AcquisitionKind::power_bald, rec, rng, cfg);
    first += x;
    second += y;
    diff_sq += (x - y) * (x - y);
  }
  first /= n;
  second /= n;
  const double euler = 0.5772156649015329;
  const double se_location = std::sqrt(std::numbers::pi * std::numbers::pi / 6.0 / n);
  CHECK(std::abs(first - (2.0 * std::log(0.05) + euler)) <= 4.0 * se_location);
  CHECK(std::abs(first - second) <= 4.0 * std::sqrt(2.0) * se_location);
  // Var(X - Y) = pi^2 / 3 for independent standard Gumbels.
  CHECK(diff_sq / n == doctest::Approx(std::numbers::pi * std::numbers::pi / 3.0).epsilon(0.06));
}

TEST_CASE("derive_seed separates streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t img = 0; img < 50; ++img) {
    for (std::uint64_t cycle = 0; cycle < 20; ++cycle) seen.insert(derive_seed(7, img, cycle));
  }
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(7, 1, 2) == derive_seed(7, 1, 2));
  CHECK(derive_seed(7, 1, 2) != derive_seed(8, 1, 2));
  CHECK(derive_seed(7, 1, 2) != derive_seed(7, 2, 1));
}

TEST_CASE("select_top_n examples") {
  Rng rng(1);
  const auto map = make_map(2, 2, {3, 1, 2, 4});
  auto labeled = LabelMap::unlabeled(2, 2, 3);
  const auto picks = select_top_n(map, labeled, 2, rng, 7, 3);
  REQUIRE(picks.size() == 2);
  CHECK(picks[0] == SelectionEntry{7, 1, 1, 3});
  CHECK(picks[1] == SelectionEntry{7, 0, 0, 3});

  labeled.labels(1, 1) = 0;
  const auto excluded = select_top_n(map, labeled, 2, rng);
  REQUIRE(excluded.size() == 2);
  CHECK(excluded[0].row == 0);
  CHECK(excluded[0].col == 0);
  CHECK(excluded[1].row == 1);
  CHECK(excluded[1].col == 0);

  labeled.labels.setZero();
  CHECK(select_top_n(map, labeled, 2, rng).empty());

  auto partial = LabelMap::unlabeled(2, 2, 3);
  partial.labels(0, 0) = 1;
  CHECK(select_top_n(map, partial, 10, rng).size() == 3);

  CHECK_THROWS_AS(select_top_n(map, LabelMap::unlabeled(3, 2, 3), 1, rng), ValidationError);
}

TEST_CASE("select_top_n agrees with a full sort up to ties") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const Index h = 1 + static_cast<Index>(gen() % 8), w = 1 + static_cast<Index>(gen() % 8);
    ScoreMap map{AcquisitionKind::bald, RowMajorMatrix<double>(h, w)};
    auto labeled = LabelMap::unlabeled(h, w, 2);
    // Coarse integer scores produce plenty of ties; a few infinities as well.
    for (Index i = 0; i < map.scores.size(); ++i) {
      map.scores.data()[i] = static_cast<double>(gen() % 5);
      if (gen() % 17 == 0) map.scores.data()[i] = kInf;
      if (gen() % 4 == 0) labeled.labels.data()[i] = 0;
    }
    const Index n = 1 + static_cast<Index>(gen() % 6);
    Rng rng(gen());
    const auto picks = select_top_n(map, labeled, n, rng);

    std::vector<double> pool;
    for (Index i = 0; i < map.scores.size(); ++i) {
      if (labeled.labels.data()[i] == labeled.ignore_value()) pool.push_back(map.scores.data()[i]);
    }
    std::sort(pool.begin(), pool.end(), std::greater<>());
    const auto expected = std::min<std::size_t>(static_cast<std::size_t>(n), pool.size());
    REQUIRE(picks.size() == expected);
    CHECK(as_set(picks).size() == picks.size());
    for (std::size_t k = 0; k < picks.size(); ++k) {
      CHECK(!labeled.is_labeled(picks[k].row, picks[k].col));
      // Same score sequence as the sorted pool: only members of a tie class may differ.
      CHECK(map.scores(picks[k].row, picks[k].col) == pool[k]);
    }
  }
}

TEST_CASE("selection is reproducible and ties are shuffled by the seed") {
  const auto map = make_map(4, 4, {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1});
  const auto labeled = LabelMap::unlabeled(4, 4, 2);
  Rng a(derive_seed(1, 0, 0)), b(derive_seed(1, 0, 0));
  CHECK(select_top_n(map, labeled, 5, a) == select_top_n(map, labeled, 5, b));
  std::set<std::set<std::pair<Index, Index>>> distinct;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(derive_seed(s, 0, 0));
    distinct.insert(as_set(select_top_n(map, labeled, 5, rng)));
  }
  CHECK(distinct.size() > 10);
}

TEST_CASE("select_top_n_in_pool") {
  std::mt19937_64 gen(6);
  ScoreMap map{AcquisitionKind::entropy, RowMajorMatrix<double>(6, 6)};
  for (Index i = 0; i < map.scores.size(); ++i) map.scores.data()[i] = static_cast<double>(i);
  const auto labeled = LabelMap::unlabeled(6, 6, 2);
  Rng rng(1);
  const auto full = select_top_n_in_pool(map, labeled, 3, 100, rng);
  CHECK(as_set(full) == std::set<std::pair<Index, Index>>{{5, 5}, {5, 4}, {5, 3}});
  for (int t = 0; t < 50; ++t) {
    Rng r(gen());
    const auto picks = select_top_n_in_pool(map, labeled, 2, 2, r);
    CHECK(picks.size() == 2);
    CHECK(as_set(picks).size() == 2);
  }
}

TEST_CASE("margin_select") {
  RowMajorMatrix<double> probs(4, 2);
  probs << 0.75, 0.25, 0.5, 0.5, 0.9, 0.1, 0.6, 0.4;
  const auto labeled = LabelMap::unlabeled(2, 2, 2);
  Rng rng(2);
  const auto picks = margin_select(probs, labeled, 2, 10, rng, 1, 4);
  REQUIRE(picks.size() == 2);
  CHECK(picks[0] == SelectionEntry{1, 0, 1, 4});
  CHECK(picks[1] == SelectionEntry{1, 1, 1, 4});

  auto some = labeled;
  some.labels(0, 1) = 0;
  const auto without = margin_select(probs, some, 1, 10, rng);
  REQUIRE(without.size() == 1);
  CHECK(without[0].row == 1);
  CHECK(without[0].col == 1);

  // A pool covering every pixel reduces to exact smallest-margin selection.
  std::mt19937_64 gen(8);
  for (int t = 0; t < 100; ++t) {
    RowMajorMatrix<double> p(25, 3);
    std::vector<std::pair<double, Index>> margins;
    for (Index i = 0; i < 25; ++i) {
      p.row(i) = oracle::random_sample_matrix(gen, 3, 1).col(0).transpose();
      auto sorted = std::vector<double>(p.row(i).data(), p.row(i).data() + 3);
      std::sort(sorted.begin(), sorted.end(), std::greater<>());
      margins.emplace_back(sorted[0] - sorted[1], i);
    }
    std::sort(margins.begin(), margins.end());
    Rng r(gen());
    const auto sel = margin_select(p, LabelMap::unlabeled(5, 5, 3), 4, 1000, r);
    REQUIRE(sel.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) CHECK(sel[k].row * 5 + sel[k].col == margins[k].second);
  }

  // A small pool never ranks outside its draw, but the best pixel still wins when drawn.
  RowMajorMatrix<double> tie(2, 2);
  tie << 0.5, 0.5, 1.0, 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng r(s);
    const auto one = margin_select(tie, LabelMap::unlabeled(1, 2, 2), 1, 2, r);
    CHECK(one[0].col == 0);
  }
}

TEST_CASE("score_image") {
  PredictionCube cube(2, 2, 2, 3);
  std::mt19937_64 gen(9);
  for (Index r = 0; r < 2; ++r) {
    for (Index c = 0; c < 2; ++c) cube.pixel(r, c) = oracle::random_sample_matrix(gen, 2, 3).cast<float>();
  }
  const auto unc = analyze_cube(cube);
  CHECK(unc.records.size() == 4);
  CHECK(unc.mean_probs.row(3).sum() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(unc.mean_probs(1, 0) == doctest::Approx(cube.pixel_samples(0, 1).row(0).mean()));

  auto labeled = LabelMap::unlabeled(2, 2, 2);
  labeled.labels(0, 0) = 1;
  AcquisitionConfig cfg;
  Rng rng(1);
  for (const auto kind : all_acquisition_kinds()) {
    cfg.kind = kind;
    const auto map = score_image(unc, labeled, cfg, rng);
    CHECK(map.kind == kind);
    CHECK(map.scores(0, 0) == -kInf);
    CHECK_NOTHROW(map.validate());
  }
  cfg.kind = AcquisitionKind::margin;
  const auto margins = score_image(unc, labeled, cfg, rng);
  CHECK(margins.scores(1, 1) == doctest::Approx(-margin_of(unc.mean_probs.row(3).transpose())));
  cfg.kind = AcquisitionKind::bald;
  const auto bald = score_image(unc, labeled, cfg, rng);
  CHECK(bald.scores(0, 1) == unc.at(0, 1).epistemic);
}

TEST_CASE("export_balent_map") {
  ImageUncertainty img;
  img.height = 1;
  img.width = 3;
  img.records.resize(3);
  img.records[0].balent = 0.0;
  img.records[1].balent = -1.0;
  img.records[2].balent = 40.0;
  const auto map = export_balent_map(img);
  CHECK(map.scores(0, 0) == doctest::Approx(0.005).epsilon(1e-12));
  const double phi = 0.5 * (1.0 + std::erf(-1.0 / std::sqrt(2.0)));
  CHECK(map.scores(0, 1) == doctest::Approx(phi / 100.0).epsilon(1e-12));
  CHECK(map.scores(0, 1) == doctest::Approx(0.0015866).epsilon(1e-4));
  CHECK(map.scores(0, 2) == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("acquisition config validation") {
  AcquisitionConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.n = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.gamma = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.margin_pool_factor = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
