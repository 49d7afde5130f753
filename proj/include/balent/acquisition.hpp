#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <vector>

#include "balent/tensorio.hpp"
#include "balent/uncertainty.hpp"

namespace balent {

using Rng = std::mt19937_64;

/// Mixes a base seed with an image id and a cycle so every (image, cycle) pair
/// draws from its own stream regardless of processing order.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t image_id, std::uint64_t cycle);

/// Uniform draw on [0, 1) with 53 random bits.
double uniform01(Rng& rng);
/// Standard Gumbel(0, 1) draw.
double standard_gumbel(Rng& rng);

struct AcquisitionConfig {
  AcquisitionKind kind = AcquisitionKind::balent_acq;
  /// Pixels selected per image per cycle.
  Index n = 5;
  /// PowerBALD exponent.
  double gamma = 1.0;
  /// Margin sampling ranks inside a random pool of margin_pool_factor * n pixels.
  Index margin_pool_factor = 10;
  std::uint64_t seed = 0;
  /// BalEnt values in [0, eps_zero) sit on the balance point and rank first.
  double eps_zero = 1e-12;
  /// Floor applied to BALD inside PowerBALD's logarithm.
  double eps_log = 1e-30;

  void validate() const;
};

/// Reciprocal of a non-negative BalEnt, identity on a negative one. Values in
/// [0, eps_zero) map to +inf.
double balent_acq(double balent_value, double eps_zero = 1e-12);

/// Top-minus-runner-up probability.
double margin_of(const Eigen::Ref<const Eigen::VectorXd>& probs);

/// Score of a single pixel; larger is acquired first. Margin needs the whole
/// candidate pool and is rejected here (see margin_select).
double score_pixel(AcquisitionKind kind, const UncertaintyRecord<double>& record, Rng& rng,
                   const AcquisitionConfig& cfg = {});

/// Uncertainty of every pixel of one prediction cube.
struct ImageUncertainty {
  Index height = 0;
  Index width = 0;
  /// Row-major, one per pixel.
  std::vector<UncertaintyRecord<double>> records;
  /// MC-mean prediction, one row per pixel (row-major pixel order), C columns.
  RowMajorMatrix<double> mean_probs;

  const UncertaintyRecord<double>& at(Index row, Index col) const {
    return records[static_cast<std::size_t>(row * width + col)];
  }
};

ImageUncertainty analyze_cube(const PredictionCube& cube, const UncertaintyConfig& cfg = {});

/// Scores every unlabeled pixel with cfg.kind; labeled pixels receive -inf.
/// Margin maps hold the negated margin so that larger still means "acquire first".
/// Random draws are consumed in row-major order over unlabeled pixels.
ScoreMap score_image(const ImageUncertainty& image, const LabelMap& labeled, const AcquisitionConfig& cfg,
                     Rng& rng);

/// The n highest-scoring unlabeled pixels, best first. Ties are broken by a
/// seeded permutation applied before a stable sort. Returns every remaining
/// pixel when fewer than n are unlabeled.
SelectionList select_top_n(const ScoreMap& scores, const LabelMap& labeled, Index n, Rng& rng,
                           std::size_t image_id = 0, std::size_t cycle = 0);

/// Same as select_top_n, but ranking only inside a uniformly drawn pool of
/// pool_factor * n unlabeled pixels.
SelectionList select_top_n_in_pool(const ScoreMap& scores, const LabelMap& labeled, Index n, Index pool_factor,
                                   Rng& rng, std::size_t image_id = 0, std::size_t cycle = 0);

/// Margin sampling: a random pool of pool_factor * n unlabeled pixels, then the
/// n with the smallest margin between the two most probable classes.
/// mean_probs holds one row per pixel in row-major pixel order.
SelectionList margin_select(const Eigen::Ref<const RowMajorMatrix<double>>& mean_probs, const LabelMap& labeled,
                            Index n, Index pool_factor, Rng& rng, std::size_t image_id = 0, std::size_t cycle = 0);

/// Display scaling of a BalEnt map: Phi(balent) / 100 with Phi the standard
/// normal CDF. Never used for ranking.
ScoreMap export_balent_map(const ImageUncertainty& image);

}  // namespace balent
