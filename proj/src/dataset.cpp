#include "balent/dataset.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "balent/acquisition.hpp"
#include "balent/errors.hpp"

namespace balent {

void DatasetConfig::validate() const {
  if (num_classes < 2) throw ValidationError("dataset needs at least 2 classes");
  if (feature_dim < 2) throw ValidationError("dataset feature_dim must be >= 2");
  if (num_images < 1 || height < 1 || width < 1) throw ValidationError("dataset dimensions must be positive");
  if (!(blob_scale > 0.0)) throw ValidationError("blob_scale must be > 0");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ValidationError("noise_sigma must be >= 0");
  if (!(class_skew > 0.0 && class_skew <= 1.0)) throw ValidationError("class_skew must be in (0, 1]");
}

Eigen::MatrixXd class_prototypes(Index num_classes, Index feature_dim) {
  Eigen::MatrixXd protos = Eigen::MatrixXd::Zero(num_classes, feature_dim);
  if (num_classes <= feature_dim) {
    protos.leftCols(num_classes).setIdentity();
    protos.leftCols(num_classes).array() -= 1.0 / static_cast<double>(num_classes);
  } else {
    for (Index c = 0; c < num_classes; ++c) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(num_classes);
      protos(c, 0) = std::cos(angle);
      protos(c, 1) = std::sin(angle);
    }
  }
  return protos;
}

SyntheticDataset generate_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  SyntheticDataset data;
  data.height = cfg.height;
  data.width = cfg.width;
  data.num_classes = cfg.num_classes;
  data.feature_dim = cfg.feature_dim;
  data.prototypes = class_prototypes(cfg.num_classes, cfg.feature_dim);

  std::vector<double> class_weights;
  for (Index c = 0; c < cfg.num_classes; ++c) class_weights.push_back(std::pow(cfg.class_skew, static_cast<double>(c)));

  const auto sites_per_image = std::max<Index>(
      cfg.num_classes,
      static_cast<Index>(std::lround(static_cast<double>(cfg.height * cfg.width) / (cfg.blob_scale * cfg.blob_scale))));

  for (Index img = 0; img < cfg.num_images; ++img) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(img), 0));
    std::discrete_distribution<int> pick_class(class_weights.begin(), class_weights.end());
    std::normal_distribution<double> noise(0.0, 1.0);

    Eigen::MatrixX2d sites(sites_per_image, 2);
    std::vector<int> site_class(static_cast<std::size_t>(sites_per_image));
    for (Index s = 0; s < sites_per_image; ++s) {
      sites(s, 0) = uniform01(rng) * static_cast<double>(cfg.height);
      sites(s, 1) = uniform01(rng) * static_cast<double>(cfg.width);
      site_class[static_cast<std::size_t>(s)] = pick_class(rng);
    }

    auto truth = LabelMap::unlabeled(cfg.height, cfg.width, cfg.num_classes);
    RowMajorMatrix<double> features(cfg.height * cfg.width, cfg.feature_dim);
    for (Index r = 0; r < cfg.height; ++r) {
      for (Index c = 0; c < cfg.width; ++c) {
        const Eigen::RowVector2d centre(static_cast<double>(r) + 0.5, static_cast<double>(c) + 0.5);
        Index nearest = 0;
        (sites.rowwise() - centre).rowwise().squaredNorm().minCoeff(&nearest);
        const int cls = site_class[static_cast<std::size_t>(nearest)];
        truth.labels(r, c) = cls;
        auto row = features.row(r * cfg.width + c);
        row = data.prototypes.row(cls);
        if (cfg.noise_sigma > 0.0) {
          for (Index k = 0; k < cfg.feature_dim; ++k) row(k) += cfg.noise_sigma * noise(rng);
        }
      }
    }
    data.features.push_back(std::move(features));
    data.truth.push_back(std::move(truth));
  }
  return data;
}

std::vector<std::int32_t> oracle_label(const SyntheticDataset& data, std::size_t image_id,
                                       std::span<const PixelCoord> coords, const LabelMap* annotations) {
  if (image_id >= data.size()) throw ValidationError("oracle_label: image " + std::to_string(image_id) + " out of range");
  const auto& truth = data.truth[image_id];
  std::vector<std::int32_t> out;
  out.reserve(coords.size());
  for (const auto& p : coords) {
    if (p.row < 0 || p.row >= truth.height() || p.col < 0 || p.col >= truth.width()) {
      throw ValidationError("oracle_label: pixel (" + std::to_string(p.row) + "," + std::to_string(p.col) +
                            ") out of bounds");
    }
    if (annotations != nullptr && annotations->is_labeled(p.row, p.col)) {
      throw ValidationError("oracle_label: pixel (" + std::to_string(p.row) + "," + std::to_string(p.col) +
                            ") of image " + std::to_string(image_id) + " is already labeled");
    }
    out.push_back(truth.labels(p.row, p.col));
  }
  return out;
}

}  // namespace balent
