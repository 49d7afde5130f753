#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "balent/tensorio.hpp"

namespace balent {

struct PixelCoord {
  Index row = 0;
  Index col = 0;

  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

struct DatasetConfig {
  Index num_images = 100;
  Index height = 32;
  Index width = 32;
  Index num_classes = 4;
  Index feature_dim = 4;
  /// Typical side length, in pixels, of one Voronoi region.
  double blob_scale = 8.0;
  double noise_sigma = 0.35;
  /// Class c is assigned to a region with probability proportional to class_skew^c.
  double class_skew = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Images whose pixels carry a class prototype plus Gaussian noise, with class
/// regions laid out as a Voronoi partition of the grid.
struct SyntheticDataset {
  Index height = 0;
  Index width = 0;
  Index num_classes = 0;
  Index feature_dim = 0;
  /// C x d, one prototype per class.
  Eigen::MatrixXd prototypes;
  /// Per image: (H * W) x d features in row-major pixel order.
  std::vector<RowMajorMatrix<double>> features;
  std::vector<LabelMap> truth;

  std::size_t size() const noexcept { return features.size(); }
  Index pixels_per_image() const noexcept { return height * width; }
};

/// Prototype arrangement: centred one-hot vertices of a regular simplex when
/// C <= d, otherwise evenly spaced points on the unit circle of the first two
/// coordinates.
Eigen::MatrixXd class_prototypes(Index num_classes, Index feature_dim);

/// Deterministic in the config, seed included.
SyntheticDataset generate_dataset(const DatasetConfig& cfg);

/// Ground truth for the requested pixels, standing in for a human annotator.
/// When `annotations` is given, re-querying an already-annotated pixel is a
/// ValidationError.
std::vector<std::int32_t> oracle_label(const SyntheticDataset& data, std::size_t image_id,
                                       std::span<const PixelCoord> coords, const LabelMap* annotations = nullptr);

}  // namespace balent
