#include "balent/active_learning.hpp"

#include <cmath>
#include <stdexcept>

#include "balent/errors.hpp"

namespace balent {

namespace {

// Independent random streams per purpose.
enum Stream : std::uint64_t { kInit = 1, kTrain = 2, kSeedPixels = 3, kMc = 4, kAcquire = 5, kSupervised = 6 };

Rng stream_rng(std::uint64_t seed, Stream stream, std::uint64_t image_id, std::uint64_t cycle) {
  return Rng(derive_seed(derive_seed(seed, stream, ~0ull), image_id, cycle));
}

void require(bool cond, const char* what) {
  if (!cond) throw std::logic_error(std::string("active learning invariant violated: ") + what);
}

ToyModel initial_model(const ALConfig& cfg) {
  auto rng = stream_rng(cfg.acquisition.seed, kInit, 0, 0);
  return ToyModel(cfg.data.feature_dim, cfg.hidden, cfg.data.num_classes, cfg.dropout, rng);
}

std::optional<double> mean_or_empty(double sum, std::size_t count) {
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

struct Pending {
  SelectionList picks;
  std::vector<std::int32_t> labels;
};

}  // namespace

void ALConfig::validate() const {
  data.validate();
  acquisition.validate();
  train.validate();
  if (cycles < 1) throw ValidationError("cycles (K_tot) must be >= 1");
  if (mc_samples < 2) throw ValidationError("m (MC samples) must be >= 2");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("dropout must be in [0, 1)");
  if (hidden < 1) throw ValidationError("hidden width must be >= 1");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ValidationError("val_fraction must be in (0, 1)");
  const Index train_images = num_train_images();
  if (train_images < 1 || train_images >= data.num_images) {
    throw ValidationError("val_fraction must leave at least one training and one validation image");
  }
}

Index ALConfig::num_train_images() const {
  const auto held_out = static_cast<Index>(std::lround(val_fraction * static_cast<double>(data.num_images)));
  return data.num_images - std::max<Index>(held_out, 1);
}

IouResult evaluate(const ToyModel& model, const SyntheticDataset& data, std::size_t first_val_image) {
  ConfusionMatrix cm(data.num_classes);
  for (std::size_t img = first_val_image; img < data.size(); ++img) {
    cm.add(model.predict_labels(data.features[img], data.height, data.width), data.truth[img]);
  }
  return {cm.iou(), cm.mean_iou()};
}

ALResult run_al(const ALConfig& cfg) { return run_al(cfg, generate_dataset(cfg.data)); }

ALResult run_al(const ALConfig& cfg, const SyntheticDataset& data) {
  cfg.validate();
  if (static_cast<Index>(data.size()) != cfg.data.num_images || data.num_classes != cfg.data.num_classes ||
      data.feature_dim != cfg.data.feature_dim) {
    throw ValidationError("dataset does not match the configuration");
  }
  const auto train_images = static_cast<std::size_t>(cfg.num_train_images());
  const Index n = cfg.acquisition.n;
  const auto seed = cfg.acquisition.seed;

  ALResult result;
  std::vector<LabelMap> annotations;
  for (std::size_t img = 0; img < train_images; ++img) {
    annotations.push_back(LabelMap::unlabeled(data.height, data.width, data.num_classes));
  }

  // Cycle 0 starts from n uniformly random pixels per image.
  Pending pending;
  for (std::size_t img = 0; img < train_images; ++img) {
    auto rng = stream_rng(seed, kSeedPixels, img, 0);
    const auto uniform = RowMajorMatrix<double>::NullaryExpr(data.height, data.width, [&] { return uniform01(rng); });
    const auto picks = select_top_n(ScoreMap{AcquisitionKind::random, uniform}, annotations[img], n, rng, img, 0);
    std::vector<PixelCoord> coords;
    for (const auto& e : picks) coords.push_back({e.row, e.col});
    const auto labels = oracle_label(data, img, coords, &annotations[img]);
    pending.picks.insert(pending.picks.end(), picks.begin(), picks.end());
    pending.labels.insert(pending.labels.end(), labels.begin(), labels.end());
  }
  result.selections = pending.picks;
  result.selection_labels = pending.labels;

  const ToyModel init = initial_model(cfg);
  ToyModel model = init;

  for (Index k = 0; k < cfg.cycles; ++k) {
    const auto cycle = static_cast<std::size_t>(k);

    // Add the pending picks to the labeled set.
    const std::size_t before = result.labeled.entries.size();
    for (std::size_t i = 0; i < pending.picks.size(); ++i) {
      const auto& e = pending.picks[i];
      auto& annot = annotations[e.image_id];
      require(!annot.is_labeled(e.row, e.col), "pixel labeled twice");
      annot.labels(e.row, e.col) = pending.labels[i];
      result.labeled.entries.push_back({e.image_id, e.row, e.col, pending.labels[i], cycle});
    }
    require(result.labeled.entries.size() == before + pending.picks.size(), "labeled-set growth");
    Index annotated = 0;
    for (const auto& a : annotations) annotated += a.labeled_count();
    require(static_cast<std::size_t>(annotated) == result.labeled.entries.size(), "labeled/pool disjointness");

    // Train on D_L.
    const auto& entries = result.labeled.entries;
    RowMajorMatrix<double> x(static_cast<Index>(entries.size()), data.feature_dim);
    std::vector<std::int32_t> y(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      x.row(static_cast<Index>(i)) = data.features[e.image_id].row(e.row * data.width + e.col);
      y[i] = e.label;
      require(e.label == data.truth[e.image_id].labels(e.row, e.col), "label differs from oracle truth");
    }
    if (!cfg.warm_start) model = init;
    auto train_rng = stream_rng(seed, kTrain, 0, cycle);
    train(model, x, y, cfg.train, train_rng);

    CycleMetrics metrics;
    metrics.cycle = cycle;
    metrics.labeled_count = entries.size();
    const auto iou = evaluate(model, data, train_images);
    metrics.miou = iou.mean;
    metrics.per_class_iou = iou.per_class;

    // Acquire the next picks with this cycle's model.
    Pending next;
    double epi = 0.0, alea = 0.0, post = 0.0;
    for (std::size_t img = 0; img < train_images; ++img) {
      auto mc_rng = stream_rng(seed, kMc, img, cycle);
      const auto cube = mc_forward(model, data.features[img], data.height, data.width, cfg.mc_samples, mc_rng);
      const auto unc = analyze_cube(cube, cfg.uncertainty);

      auto acq_rng = stream_rng(seed, kAcquire, img, cycle);
      SelectionList picks;
      if (cfg.acquisition.kind == AcquisitionKind::margin) {
        picks = margin_select(unc.mean_probs, annotations[img], n, cfg.acquisition.margin_pool_factor, acq_rng, img,
                              cycle + 1);
      } else {
        const auto scores = score_image(unc, annotations[img], cfg.acquisition, acq_rng);
        picks = select_top_n(scores, annotations[img], n, acq_rng, img, cycle + 1);
      }
      require(static_cast<Index>(picks.size()) == std::min(n, data.pixels_per_image() - annotations[img].labeled_count()),
              "per-image budget");

      std::vector<PixelCoord> coords;
      for (const auto& e : picks) {
        coords.push_back({e.row, e.col});
        const auto& rec = unc.at(e.row, e.col);
        epi += rec.epistemic;
        alea += rec.aleatoric;
        post += rec.posterior_u;
      }
      const auto labels = oracle_label(data, img, coords, &annotations[img]);
      next.picks.insert(next.picks.end(), picks.begin(), picks.end());
      next.labels.insert(next.labels.end(), labels.begin(), labels.end());
    }

    const std::size_t queried = next.picks.size();
    metrics.mean_epistemic = mean_or_empty(epi, queried);
    metrics.mean_aleatoric = mean_or_empty(alea, queried);
    metrics.mean_posterior = mean_or_empty(post, queried);
    metrics.avg_pair_distance = avg_pair_distance(next.picks);
    if (queried > 0) metrics.avg_unique_labels = avg_unique_labels(next.picks, next.labels);
    result.history.push_back(std::move(metrics));

    result.selections.insert(result.selections.end(), next.picks.begin(), next.picks.end());
    result.selection_labels.insert(result.selection_labels.end(), next.labels.begin(), next.labels.end());
    pending = std::move(next);
    if (queried == 0) {
      result.truncated = k + 1 < cfg.cycles;
      break;
    }
  }

  validate_unique(result.selections);
  result.normalization = normalized_trajectories(result.history);
  return result;
}

IouResult supervised_reference(const ALConfig& cfg, const SyntheticDataset& data) {
  cfg.validate();
  const auto train_images = static_cast<std::size_t>(cfg.num_train_images());
  const Index per_image = data.pixels_per_image();
  RowMajorMatrix<double> x(static_cast<Index>(train_images) * per_image, data.feature_dim);
  std::vector<std::int32_t> y(static_cast<std::size_t>(x.rows()));
  for (std::size_t img = 0; img < train_images; ++img) {
    const Index offset = static_cast<Index>(img) * per_image;
    x.middleRows(offset, per_image) = data.features[img];
    for (Index i = 0; i < per_image; ++i) {
      y[static_cast<std::size_t>(offset + i)] = data.truth[img].labels.data()[i];
    }
  }
  ToyModel model = initial_model(cfg);
  auto rng = stream_rng(cfg.acquisition.seed, kSupervised, 0, 0);
  train(model, x, y, cfg.train, rng);
  return evaluate(model, data, train_images);
}

}  // namespace balent
