#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace balent {

using Index = Eigen::Index;

template <typename Scalar>
using RowMajorMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Acquisition functions; the string forms are part of the CLI and file surface.
enum class AcquisitionKind { balent_acq, bald, power_bald, margin, entropy, random };

std::string_view to_string(AcquisitionKind kind);
/// Throws ValidationError for names outside the six known kinds.
AcquisitionKind parse_acquisition_kind(std::string_view name);
std::span<const AcquisitionKind> all_acquisition_kinds();

/// Monte-Carlo softmax samples for one image, stored [H, W, C, m] with the
/// sample index fastest-varying.
class PredictionCube {
 public:
  using PixelView = Eigen::Map<const RowMajorMatrix<float>>;

  PredictionCube() = default;
  /// Zero-filled cube; call validate() once populated.
  PredictionCube(Index height, Index width, Index num_classes, Index num_samples);

  Index height() const noexcept { return height_; }
  Index width() const noexcept { return width_; }
  Index num_classes() const noexcept { return classes_; }
  Index num_samples() const noexcept { return samples_; }
  Index num_pixels() const noexcept { return height_ * width_; }

  float& at(Index row, Index col, Index cls, Index sample) { return values_[offset(row, col) + cls * samples_ + sample]; }
  float at(Index row, Index col, Index cls, Index sample) const {
    return values_[offset(row, col) + cls * samples_ + sample];
  }

  /// C x m view of one pixel's samples.
  PixelView pixel(Index row, Index col) const { return PixelView(values_.data() + offset(row, col), classes_, samples_); }
  Eigen::Map<RowMajorMatrix<float>> pixel(Index row, Index col) {
    return Eigen::Map<RowMajorMatrix<float>>(values_.data() + offset(row, col), classes_, samples_);
  }
  /// C x m samples of one pixel promoted to double.
  Eigen::MatrixXd pixel_samples(Index row, Index col) const { return pixel(row, col).cast<double>(); }

  std::span<const float> values() const noexcept { return values_; }
  std::span<float> values() noexcept { return values_; }

  /// Throws ValidationError unless dims are positive, m >= 2, every value is in
  /// [0, 1] and each (pixel, sample) column sums to 1 within 1e-4.
  void validate() const;

  friend bool operator==(const PredictionCube&, const PredictionCube&) = default;

 private:
  std::size_t offset(Index row, Index col) const {
    return static_cast<std::size_t>((row * width_ + col) * classes_ * samples_);
  }

  Index height_ = 0;
  Index width_ = 0;
  Index classes_ = 0;
  Index samples_ = 0;
  std::vector<float> values_;
};

/// Per-pixel acquisition scores for one image. Non-finite entries are sentinels:
/// +inf is a BalEnt exactly at the balance point (ranks first) and -inf marks an
/// already-labeled pixel in maps produced by the simulator.
struct ScoreMap {
  AcquisitionKind kind = AcquisitionKind::balent_acq;
  RowMajorMatrix<double> scores;

  Index height() const noexcept { return scores.rows(); }
  Index width() const noexcept { return scores.cols(); }
  /// Throws ValidationError on NaN.
  void validate() const;
};

/// Ground-truth or annotation map. Value num_classes means "unlabeled".
struct LabelMap {
  Index num_classes = 0;
  RowMajorMatrix<std::int32_t> labels;

  static LabelMap unlabeled(Index height, Index width, Index num_classes);

  Index height() const noexcept { return labels.rows(); }
  Index width() const noexcept { return labels.cols(); }
  std::int32_t ignore_value() const noexcept { return static_cast<std::int32_t>(num_classes); }
  bool is_labeled(Index row, Index col) const { return labels(row, col) != ignore_value(); }
  Index labeled_count() const;
  void validate() const;
};

struct SelectionEntry {
  std::size_t image_id = 0;
  Index row = 0;
  Index col = 0;
  std::size_t cycle = 0;

  friend bool operator==(const SelectionEntry&, const SelectionEntry&) = default;
};

using SelectionList = std::vector<SelectionEntry>;

/// Throws ValidationError on a duplicate (image_id, row, col).
void validate_unique(const SelectionList& selections);

void write_cube(const PredictionCube& cube, const std::filesystem::path& path);
PredictionCube read_cube(const std::filesystem::path& path);

/// CSV `row,col,score`, row-major, 9 significant digits.
void write_scores(const ScoreMap& map, const std::filesystem::path& path);
/// The CSV carries no acquisition metadata; the caller supplies the kind.
ScoreMap read_scores(const std::filesystem::path& path, AcquisitionKind kind = AcquisitionKind::balent_acq);

/// CSV `image_id,row,col,cycle`.
void write_selections(const SelectionList& selections, const std::filesystem::path& path);
SelectionList read_selections(const std::filesystem::path& path);

/// Reads a sparse annotation CSV whose header names at least `row` and `col`
/// (optionally `label`). Listed pixels are marked labeled (class 0 when no
/// label column exists); everything else stays unlabeled. Selection logs are
/// accepted as-is.
LabelMap read_labeled_pixels(const std::filesystem::path& path, Index height, Index width, Index num_classes);

/// Shared formatting for every CSV this project writes.
std::string format_real(double value);

}  // namespace balent
