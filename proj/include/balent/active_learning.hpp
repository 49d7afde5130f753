#pragma once

#include <cstdint>
#include <vector>

#include "balent/acquisition.hpp"
#include "balent/dataset.hpp"
#include "balent/metrics.hpp"
#include "balent/toy_model.hpp"
#include "balent/uncertainty.hpp"

namespace balent {

struct ALConfig {
  DatasetConfig data;
  /// Fraction of images held out for validation mIoU (the last images by id).
  double val_fraction = 0.2;

  AcquisitionConfig acquisition;
  /// MC-dropout forward passes per pixel.
  Index mc_samples = 20;
  double dropout = 0.2;
  Index hidden = 16;
  /// Total AL cycles, the first one seeded with random pixels.
  Index cycles = 10;
  TrainConfig train;
  UncertaintyConfig uncertainty;
  /// Continue from the previous cycle's weights instead of the fixed initialisation.
  bool warm_start = false;

  void validate() const;
  Index num_train_images() const;
};

/// A sparse annotation: pixels of the training images with their oracle labels.
struct LabeledSet {
  struct Entry {
    std::size_t image_id = 0;
    Index row = 0;
    Index col = 0;
    std::int32_t label = 0;
    std::size_t cycle = 0;
  };
  std::vector<Entry> entries;
};

struct ALResult {
  std::vector<CycleMetrics> history;
  /// Every queried pixel. `cycle` is the cycle whose training set first
  /// contains the pixel: 0 for the random seed set, k + 1 for pixels chosen
  /// by the model of cycle k. The final cycle's picks carry cycle = cycles.
  SelectionList selections;
  std::vector<std::int32_t> selection_labels;
  LabeledSet labeled;
  NormalizationReport normalization;
  /// The unlabeled pool ran out before the configured number of cycles.
  bool truncated = false;
};

/// Sparse-pixel active learning: seed n random pixels per image, then per
/// cycle train, sample MC predictions on the pool, score, select n per image
/// and label them with the oracle.
ALResult run_al(const ALConfig& cfg, const SyntheticDataset& data);
ALResult run_al(const ALConfig& cfg);

/// Validation mIoU of a model trained on every training pixel with the same
/// training recipe and initialisation as run_al.
IouResult supervised_reference(const ALConfig& cfg, const SyntheticDataset& data);

/// Validation mIoU of `model` on the held-out images.
IouResult evaluate(const ToyModel& model, const SyntheticDataset& data, std::size_t first_val_image);

}  // namespace balent
