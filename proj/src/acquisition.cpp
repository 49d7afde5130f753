#include "balent/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "balent/errors.hpp"

namespace balent {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

void require_same_shape(const ScoreMap& scores, const LabelMap& labeled) {
  if (scores.height() != labeled.height() || scores.width() != labeled.width()) {
    throw ValidationError("score map is " + std::to_string(scores.height()) + "x" + std::to_string(scores.width()) +
                          " but label map is " + std::to_string(labeled.height()) + "x" +
                          std::to_string(labeled.width()));
  }
}

// Shuffled flat indices of unlabeled pixels.
std::vector<Index> shuffled_unlabeled(const LabelMap& labeled, Rng& rng) {
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(labeled.labels.size()));
  const auto* data = labeled.labels.data();
  for (Index i = 0; i < labeled.labels.size(); ++i) {
    if (data[i] == labeled.ignore_value()) out.push_back(i);
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

// Keeps the first n candidates after a stable sort on `key` (descending).
template <typename Key>
SelectionList take_best(std::vector<Index> candidates, Index n, Index width, Key key, std::size_t image_id,
                        std::size_t cycle) {
  std::stable_sort(candidates.begin(), candidates.end(), [&](Index a, Index b) { return key(a) > key(b); });
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(n), candidates.size());
  SelectionList out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back({image_id, candidates[i] / width, candidates[i] % width, cycle});
  }
  return out;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t image_id, std::uint64_t cycle) {
  return splitmix64(splitmix64(splitmix64(base_seed) ^ image_id) ^ (cycle * 0xD1B54A32D192ED03ull));
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double standard_gumbel(Rng& rng) {
  // 1 - U lies in (0, 1], so the inner log is finite; redraw the single point
  // where it would be zero.
  double u = 1.0 - uniform01(rng);
  while (u >= 1.0) u = 1.0 - uniform01(rng);
  return -std::log(-std::log(u));
}

void AcquisitionConfig::validate() const {
  if (n < 1) throw ValidationError("acquisition n must be >= 1");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("acquisition gamma must be > 0");
  if (margin_pool_factor < 1) throw ValidationError("margin pool factor must be >= 1");
  if (!(eps_zero >= 0.0) || !(eps_log > 0.0)) throw ValidationError("acquisition eps values must be positive");
}

double balent_acq(double balent_value, double eps_zero) {
  if (!std::isfinite(balent_value)) throw ValidationError("balent_acq: non-finite BalEnt value");
  if (balent_value < 0.0) return balent_value;
  if (balent_value < eps_zero) return kInf;
  return 1.0 / balent_value;
}

double margin_of(const Eigen::Ref<const Eigen::VectorXd>& probs) {
  if (probs.size() < 2) throw ValidationError("margin needs at least two classes");
  double first = -kInf, second = -kInf;
  for (Index i = 0; i < probs.size(); ++i) {
    const double p = probs(i);
    if (p > first) {
      second = first;
      first = p;
    } else if (p > second) {
      second = p;
    }
  }
  return first - second;
}

double score_pixel(AcquisitionKind kind, const UncertaintyRecord<double>& record, Rng& rng,
                   const AcquisitionConfig& cfg) {
  switch (kind) {
    case AcquisitionKind::balent_acq: return balent_acq(record.balent, cfg.eps_zero);
    case AcquisitionKind::bald: return record.epistemic;
    case AcquisitionKind::power_bald:
      return cfg.gamma * std::log(std::max(record.epistemic, cfg.eps_log)) + standard_gumbel(rng);
    case AcquisitionKind::entropy: return record.shannon;
    case AcquisitionKind::random: return uniform01(rng);
    case AcquisitionKind::margin: break;
  }
  throw ValidationError("margin is scored over a candidate pool, not per pixel; use margin_select");
}

ImageUncertainty analyze_cube(const PredictionCube& cube, const UncertaintyConfig& cfg) {
  ImageUncertainty out;
  out.height = cube.height();
  out.width = cube.width();
  out.records.reserve(static_cast<std::size_t>(cube.num_pixels()));
  out.mean_probs.resize(cube.num_pixels(), cube.num_classes());
  Eigen::MatrixXd samples(cube.num_classes(), cube.num_samples());
  for (Index r = 0; r < cube.height(); ++r) {
    for (Index c = 0; c < cube.width(); ++c) {
      samples = cube.pixel(r, c).cast<double>();
      out.records.push_back(record_for_pixel(samples, cfg));
      out.mean_probs.row(r * cube.width() + c) = samples.rowwise().mean().transpose();
    }
  }
  return out;
}

ScoreMap score_image(const ImageUncertainty& image, const LabelMap& labeled, const AcquisitionConfig& cfg,
                     Rng& rng) {
  ScoreMap map;
  map.kind = cfg.kind;
  map.scores = RowMajorMatrix<double>::Constant(image.height, image.width, -kInf);
  require_same_shape(map, labeled);
  for (Index r = 0; r < image.height; ++r) {
    for (Index c = 0; c < image.width; ++c) {
      if (labeled.is_labeled(r, c)) continue;
      if (cfg.kind == AcquisitionKind::margin) {
        map.scores(r, c) = -margin_of(image.mean_probs.row(r * image.width + c).transpose());
      } else {
        map.scores(r, c) = score_pixel(cfg.kind, image.at(r, c), rng, cfg);
      }
    }
  }
  return map;
}

SelectionList select_top_n(const ScoreMap& scores, const LabelMap& labeled, Index n, Rng& rng, std::size_t image_id,
                           std::size_t cycle) {
  require_same_shape(scores, labeled);
  if (n < 0) throw ValidationError("select_top_n: n must be non-negative");
  const auto* data = scores.scores.data();
  return take_best(
      shuffled_unlabeled(labeled, rng), n, scores.width(), [data](Index i) { return data[i]; }, image_id, cycle);
}

SelectionList select_top_n_in_pool(const ScoreMap& scores, const LabelMap& labeled, Index n, Index pool_factor,
                                   Rng& rng, std::size_t image_id, std::size_t cycle) {
  require_same_shape(scores, labeled);
  if (n < 0 || pool_factor < 1) throw ValidationError("pool selection needs n >= 0 and pool_factor >= 1");
  auto candidates = shuffled_unlabeled(labeled, rng);
  candidates.resize(std::min(candidates.size(), static_cast<std::size_t>(pool_factor * n)));
  const auto* data = scores.scores.data();
  return take_best(
      std::move(candidates), n, scores.width(), [data](Index i) { return data[i]; }, image_id, cycle);
}

SelectionList margin_select(const Eigen::Ref<const RowMajorMatrix<double>>& mean_probs, const LabelMap& labeled,
                            Index n, Index pool_factor, Rng& rng, std::size_t image_id, std::size_t cycle) {
  if (mean_probs.rows() != labeled.labels.size()) {
    throw ValidationError("margin_select: " + std::to_string(mean_probs.rows()) + " probability rows for " +
                          std::to_string(labeled.labels.size()) + " pixels");
  }
  if (n < 0 || pool_factor < 1) throw ValidationError("margin_select needs n >= 0 and pool_factor >= 1");
  auto candidates = shuffled_unlabeled(labeled, rng);
  candidates.resize(std::min(candidates.size(), static_cast<std::size_t>(pool_factor * n)));
  std::vector<double> neg_margin(static_cast<std::size_t>(mean_probs.rows()), -kInf);
  for (const Index i : candidates) neg_margin[static_cast<std::size_t>(i)] = -margin_of(mean_probs.row(i).transpose());
  return take_best(
      std::move(candidates), n, labeled.width(),
      [&neg_margin](Index i) { return neg_margin[static_cast<std::size_t>(i)]; }, image_id, cycle);
}

ScoreMap export_balent_map(const ImageUncertainty& image) {
  ScoreMap map;
  map.kind = AcquisitionKind::balent_acq;
  map.scores.resize(image.height, image.width);
  for (Index r = 0; r < image.height; ++r) {
    for (Index c = 0; c < image.width; ++c) {
      map.scores(r, c) = 0.5 * std::erfc(-image.at(r, c).balent / std::numbers::sqrt2) / 100.0;
    }
  }
  return map;
}

}  // namespace balent
