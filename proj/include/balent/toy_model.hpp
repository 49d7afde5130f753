#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "balent/acquisition.hpp"
#include "balent/tensorio.hpp"

namespace balent {

/// Parameters (or gradients) of the per-pixel classifier
///   x -> ReLU(W1 x + b1) -> dropout -> W2 h + b2 -> softmax.
struct ModelParams {
  Eigen::MatrixXd w1;  // hidden x d
  Eigen::VectorXd b1;  // hidden
  Eigen::MatrixXd w2;  // C x hidden
  Eigen::VectorXd b2;  // C

  static ModelParams zeros_like(const ModelParams& other);
  bool all_finite() const;

  /// Flat views over the four tensors, in declaration order.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
};

/// Inverted-dropout mask for a batch: entries are 0 or 1 / (1 - rate).
using DropoutMask = RowMajorMatrix<double>;

/// Pixel classifier whose only stochastic stage is a dropout layer in front of
/// the final linear map, so MC sampling reuses one hidden representation.
class ToyModel {
 public:
  ToyModel() = default;
  /// He-initialised first layer, Glorot-initialised last layer, zero biases.
  ToyModel(Index input_dim, Index hidden, Index num_classes, double dropout_rate, Rng& init_rng);

  Index input_dim() const noexcept { return params_.w1.cols(); }
  Index hidden() const noexcept { return params_.w1.rows(); }
  Index num_classes() const noexcept { return params_.w2.rows(); }
  double dropout_rate() const noexcept { return dropout_; }

  ModelParams& params() noexcept { return params_; }
  const ModelParams& params() const noexcept { return params_; }

  /// ReLU activations of the hidden layer, N x hidden.
  RowMajorMatrix<double> hidden_activations(const Eigen::Ref<const RowMajorMatrix<double>>& x) const;

  /// Expected-dropout (deterministic) class probabilities, N x C.
  RowMajorMatrix<double> predict(const Eigen::Ref<const RowMajorMatrix<double>>& x) const;

  /// Probabilities with an explicit dropout mask applied to the hidden layer.
  RowMajorMatrix<double> predict_masked(const Eigen::Ref<const RowMajorMatrix<double>>& x,
                                        const DropoutMask& mask) const;

  /// Fresh inverted-dropout mask of shape rows x hidden.
  DropoutMask sample_mask(Index rows, Rng& rng) const;

  /// Mean cross-entropy of `labels` under the masked forward pass, and its
  /// exact gradient with respect to every parameter.
  double loss_and_gradient(const Eigen::Ref<const RowMajorMatrix<double>>& x, std::span<const std::int32_t> labels,
                           const DropoutMask& mask, ModelParams& grad) const;

  /// Arg-max of the deterministic prediction; ties go to the lowest class.
  LabelMap predict_labels(const Eigen::Ref<const RowMajorMatrix<double>>& x, Index height, Index width) const;

 private:
  ModelParams params_;
  double dropout_ = 0.0;
};

/// m stochastic passes with independent dropout masks. `features` holds one
/// row per pixel in row-major order.
PredictionCube mc_forward(const ToyModel& model, const Eigen::Ref<const RowMajorMatrix<double>>& features,
                          Index height, Index width, Index num_samples, Rng& rng);

/// -(1/|L|) sum over labeled pixels of ln p(true class). Rows whose label equals
/// `ignore_label` do not contribute.
double masked_ce_loss(const Eigen::Ref<const RowMajorMatrix<double>>& probs, std::span<const std::int32_t> labels,
                      std::int32_t ignore_label);

struct TrainConfig {
  Index epochs = 100;
  double learning_rate = 0.05;
  Index batch_size = 32;
  /// Learning rate is multiplied by `decay` at each milestone fraction of the epochs.
  double decay = 0.1;
  std::vector<double> milestones = {0.5, 0.75};

  void validate() const;
  double rate_at(Index epoch) const;
};

struct TrainReport {
  /// Masked loss on the training pixels after each epoch, deterministic pass.
  std::vector<double> epoch_loss;
  double initial_loss = 0.0;
};

/// Minibatch gradient descent on the masked cross-entropy. Training passes
/// sample dropout; the monitored loss uses the deterministic pass.
TrainReport train(ToyModel& model, const Eigen::Ref<const RowMajorMatrix<double>>& x,
                  std::span<const std::int32_t> labels, const TrainConfig& cfg, Rng& rng);

}  // namespace balent
