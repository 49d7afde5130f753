#include "balent/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "balent/errors.hpp"

namespace balent {

namespace {

// Row-wise softmax in place, shifted by the row maximum.
void softmax_rows(RowMajorMatrix<double>& z) {
  for (Index i = 0; i < z.rows(); ++i) {
    auto row = z.row(i);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

RowMajorMatrix<double> logits(const ModelParams& p, const RowMajorMatrix<double>& hidden) {
  RowMajorMatrix<double> z = hidden * p.w2.transpose();
  z.rowwise() += p.b2.transpose();
  return z;
}

void require_labels(std::span<const std::int32_t> labels, Index rows, Index classes) {
  if (static_cast<Index>(labels.size()) != rows) throw ValidationError("label count does not match batch size");
  for (const auto y : labels) {
    if (y < 0 || y >= classes) throw ValidationError("training label outside [0, C)");
  }
}

}  // namespace

ModelParams ModelParams::zeros_like(const ModelParams& other) {
  return {Eigen::MatrixXd::Zero(other.w1.rows(), other.w1.cols()), Eigen::VectorXd::Zero(other.b1.size()),
          Eigen::MatrixXd::Zero(other.w2.rows(), other.w2.cols()), Eigen::VectorXd::Zero(other.b2.size())};
}

bool ModelParams::all_finite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
}

std::vector<std::span<double>> ModelParams::tensors() {
  return {{w1.data(), static_cast<std::size_t>(w1.size())},
          {b1.data(), static_cast<std::size_t>(b1.size())},
          {w2.data(), static_cast<std::size_t>(w2.size())},
          {b2.data(), static_cast<std::size_t>(b2.size())}};
}

std::vector<std::span<const double>> ModelParams::tensors() const {
  return {{w1.data(), static_cast<std::size_t>(w1.size())},
          {b1.data(), static_cast<std::size_t>(b1.size())},
          {w2.data(), static_cast<std::size_t>(w2.size())},
          {b2.data(), static_cast<std::size_t>(b2.size())}};
}

ToyModel::ToyModel(Index input_dim, Index hidden, Index num_classes, double dropout_rate, Rng& init_rng)
    : dropout_(dropout_rate) {
  if (input_dim < 1 || hidden < 1 || num_classes < 2) throw ValidationError("invalid model dimensions");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ValidationError("dropout rate must be in [0, 1)");
  std::normal_distribution<double> normal(0.0, 1.0);
  const double s1 = std::sqrt(2.0 / static_cast<double>(input_dim));
  const double s2 = std::sqrt(2.0 / static_cast<double>(hidden + num_classes));
  params_.w1 = Eigen::MatrixXd::NullaryExpr(hidden, input_dim, [&] { return s1 * normal(init_rng); });
  params_.b1 = Eigen::VectorXd::Zero(hidden);
  params_.w2 = Eigen::MatrixXd::NullaryExpr(num_classes, hidden, [&] { return s2 * normal(init_rng); });
  params_.b2 = Eigen::VectorXd::Zero(num_classes);
}

RowMajorMatrix<double> ToyModel::hidden_activations(const Eigen::Ref<const RowMajorMatrix<double>>& x) const {
  if (x.cols() != input_dim()) throw ValidationError("feature dimension does not match the model");
  RowMajorMatrix<double> h = x * params_.w1.transpose();
  h.rowwise() += params_.b1.transpose();
  return h.cwiseMax(0.0);
}

RowMajorMatrix<double> ToyModel::predict(const Eigen::Ref<const RowMajorMatrix<double>>& x) const {
  auto z = logits(params_, hidden_activations(x));
  softmax_rows(z);
  return z;
}

RowMajorMatrix<double> ToyModel::predict_masked(const Eigen::Ref<const RowMajorMatrix<double>>& x,
                                                const DropoutMask& mask) const {
  RowMajorMatrix<double> h = hidden_activations(x);
  if (mask.rows() != h.rows() || mask.cols() != h.cols()) throw ValidationError("dropout mask shape mismatch");
  h.array() *= mask.array();
  auto z = logits(params_, h);
  softmax_rows(z);
  return z;
}

DropoutMask ToyModel::sample_mask(Index rows, Rng& rng) const {
  const double keep = 1.0 - dropout_;
  const double scale = 1.0 / keep;
  if (dropout_ == 0.0) return DropoutMask::Ones(rows, hidden());
  return DropoutMask::NullaryExpr(rows, hidden(), [&] { return uniform01(rng) < keep ? scale : 0.0; });
}

double ToyModel::loss_and_gradient(const Eigen::Ref<const RowMajorMatrix<double>>& x,
                                   std::span<const std::int32_t> labels, const DropoutMask& mask,
                                   ModelParams& grad) const {
  const Index n = x.rows();
  if (n == 0) throw ValidationError("empty training batch");
  require_labels(labels, n, num_classes());

  RowMajorMatrix<double> pre = x * params_.w1.transpose();
  pre.rowwise() += params_.b1.transpose();
  const RowMajorMatrix<double> dropped = (pre.cwiseMax(0.0).array() * mask.array()).matrix();
  RowMajorMatrix<double> probs = logits(params_, dropped);
  softmax_rows(probs);

  double loss = 0.0;
  RowMajorMatrix<double> d_logits = probs;
  for (Index i = 0; i < n; ++i) {
    const auto y = labels[static_cast<std::size_t>(i)];
    loss -= std::log(probs(i, y));
    d_logits(i, y) -= 1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  d_logits *= inv_n;

  grad.w2 = d_logits.transpose() * dropped;
  grad.b2 = d_logits.colwise().sum().transpose();
  RowMajorMatrix<double> d_hidden = d_logits * params_.w2;
  d_hidden.array() *= mask.array() * (pre.array() > 0.0).cast<double>();
  grad.w1 = d_hidden.transpose() * x;
  grad.b1 = d_hidden.colwise().sum().transpose();
  return loss * inv_n;
}

LabelMap ToyModel::predict_labels(const Eigen::Ref<const RowMajorMatrix<double>>& x, Index height,
                                  Index width) const {
  if (x.rows() != height * width) throw ValidationError("feature rows do not match image size");
  const auto probs = predict(x);
  auto out = LabelMap::unlabeled(height, width, num_classes());
  for (Index i = 0; i < probs.rows(); ++i) {
    Index best = 0;
    probs.row(i).maxCoeff(&best);  // first maximum wins
    out.labels(i / width, i % width) = static_cast<std::int32_t>(best);
  }
  return out;
}

PredictionCube mc_forward(const ToyModel& model, const Eigen::Ref<const RowMajorMatrix<double>>& features,
                          Index height, Index width, Index num_samples, Rng& rng) {
  if (num_samples < 2) throw ValidationError("mc_forward: m must be >= 2");
  if (features.rows() != height * width) throw ValidationError("mc_forward: feature rows do not match image size");
  const RowMajorMatrix<double> hidden = model.hidden_activations(features);
  PredictionCube cube(height, width, model.num_classes(), num_samples);
  const auto& p = model.params();
  RowMajorMatrix<double> probs;
  for (Index j = 0; j < num_samples; ++j) {
    const DropoutMask mask = model.sample_mask(hidden.rows(), rng);
    probs = (hidden.array() * mask.array()).matrix() * p.w2.transpose();
    probs.rowwise() += p.b2.transpose();
    softmax_rows(probs);
    for (Index i = 0; i < probs.rows(); ++i) {
      for (Index c = 0; c < probs.cols(); ++c) cube.at(i / width, i % width, c, j) = static_cast<float>(probs(i, c));
    }
  }
  return cube;
}

double masked_ce_loss(const Eigen::Ref<const RowMajorMatrix<double>>& probs, std::span<const std::int32_t> labels,
                      std::int32_t ignore_label) {
  if (static_cast<Index>(labels.size()) != probs.rows()) throw ValidationError("masked_ce_loss: size mismatch");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto y = labels[i];
    if (y == ignore_label) continue;
    if (y < 0 || y >= probs.cols()) throw ValidationError("masked_ce_loss: label outside [0, C)");
    total -= std::log(probs(static_cast<Index>(i), y));
    ++count;
  }
  if (count == 0) throw ValidationError("masked_ce_loss: no labeled pixels");
  return total / static_cast<double>(count);
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(decay > 0.0 && decay <= 1.0)) throw ValidationError("decay must be in (0, 1]");
}

double TrainConfig::rate_at(Index epoch) const {
  double rate = learning_rate;
  for (const double m : milestones) {
    if (static_cast<double>(epoch) >= m * static_cast<double>(epochs)) rate *= decay;
  }
  return rate;
}

TrainReport train(ToyModel& model, const Eigen::Ref<const RowMajorMatrix<double>>& x,
                  std::span<const std::int32_t> labels, const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  const Index n = x.rows();
  if (n == 0) throw ValidationError("train: labeled set is empty");
  require_labels(labels, n, model.num_classes());
  const auto ignore = static_cast<std::int32_t>(model.num_classes());

  TrainReport report;
  report.initial_loss = masked_ce_loss(model.predict(x), labels, ignore);

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  auto grad = ModelParams::zeros_like(model.params());
  RowMajorMatrix<double> batch_x;
  std::vector<std::int32_t> batch_y;

  for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double rate = cfg.rate_at(epoch);
    for (Index start = 0; start < n; start += cfg.batch_size) {
      const Index size = std::min(cfg.batch_size, n - start);
      batch_x.resize(size, x.cols());
      batch_y.resize(static_cast<std::size_t>(size));
      for (Index i = 0; i < size; ++i) {
        const Index src = order[static_cast<std::size_t>(start + i)];
        batch_x.row(i) = x.row(src);
        batch_y[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(src)];
      }
      model.loss_and_gradient(batch_x, batch_y, model.sample_mask(size, rng), grad);
      auto& p = model.params();
      p.w1 -= rate * grad.w1;
      p.b1 -= rate * grad.b1;
      p.w2 -= rate * grad.w2;
      p.b2 -= rate * grad.b2;
    }
    const double loss = masked_ce_loss(model.predict(x), labels, ignore);
    if (!std::isfinite(loss) || !model.params().all_finite()) {
      throw TrainingError("training diverged: non-finite loss", static_cast<std::size_t>(epoch));
    }
    report.epoch_loss.push_back(loss);
  }
  return report;
}

}  // namespace balent
