#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "balent/dataset.hpp"
#include "balent/tensorio.hpp"

namespace balent {

/// Counts (truth, prediction) pairs; rows are truth classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(Index num_classes);

  void add(const LabelMap& prediction, const LabelMap& truth);
  Index num_classes() const noexcept { return counts_.rows(); }
  const Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>& counts() const noexcept { return counts_; }

  /// IoU per class; empty for classes absent from both prediction and truth.
  std::vector<std::optional<double>> iou() const;
  /// Mean over the present classes.
  double mean_iou() const;

 private:
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts_;
};

struct IouResult {
  std::vector<std::optional<double>> per_class;
  double mean = 0.0;
};

IouResult miou(const LabelMap& prediction, const LabelMap& truth);

/// Mean Euclidean distance over all unordered pixel pairs; empty for fewer than two pixels.
std::optional<double> pair_distance(std::span<const PixelCoord> pixels);

/// pair_distance per image, averaged over the images where it is defined.
std::optional<double> avg_pair_distance(const SelectionList& selections);

/// Distinct classes among each image's selected pixels, averaged over images.
/// `labels[i]` is the true class of `selections[i]`.
double avg_unique_labels(const SelectionList& selections, std::span<const std::int32_t> labels);

struct CycleMetrics {
  std::size_t cycle = 0;
  double miou = 0.0;
  std::vector<std::optional<double>> per_class_iou;
  std::optional<double> avg_pair_distance;
  std::optional<double> avg_unique_labels;
  /// Means over the pixels queried at this cycle.
  std::optional<double> mean_epistemic;
  std::optional<double> mean_aleatoric;
  std::optional<double> mean_posterior;
  /// The same means divided by their first-cycle values.
  std::optional<double> epistemic_norm;
  std::optional<double> aleatoric_norm;
  std::optional<double> posterior_norm;
  std::size_t labeled_count = 0;
};

/// Fills the *_norm fields of `history` from its first entry. The posterior
/// series is divided by |first value| so its sign survives. A series whose
/// first value is within 1e-15 of zero (or absent) is left unnormalised and
/// reported in the return value.
struct NormalizationReport {
  bool epistemic_ok = true;
  bool aleatoric_ok = true;
  bool posterior_ok = true;
};
NormalizationReport normalized_trajectories(std::vector<CycleMetrics>& history);

/// CSV: cycle,miou,iou_class_0..,avg_pair_distance,avg_unique_labels,epi,alea,post,epi_norm,alea_norm,post_norm.
/// Absent values are empty fields.
void write_metrics(const std::vector<CycleMetrics>& history, Index num_classes, const std::filesystem::path& path);
std::vector<CycleMetrics> read_metrics(const std::filesystem::path& path, Index* num_classes = nullptr);

}  // namespace balent
