#include "balent/metrics.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "balent/errors.hpp"
#include "csv.hpp"

namespace balent {

ConfusionMatrix::ConfusionMatrix(Index num_classes) : counts_(decltype(counts_)::Zero(num_classes, num_classes)) {
  if (num_classes < 1) throw ValidationError("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(const LabelMap& prediction, const LabelMap& truth) {
  if (prediction.height() != truth.height() || prediction.width() != truth.width()) {
    throw ValidationError("miou: prediction and truth maps differ in size");
  }
  const Index c = num_classes();
  for (Index i = 0; i < truth.labels.size(); ++i) {
    const auto t = truth.labels.data()[i];
    const auto p = prediction.labels.data()[i];
    if (t < 0 || t >= c || p < 0 || p >= c) continue;
    ++counts_(t, p);
  }
}

std::vector<std::optional<double>> ConfusionMatrix::iou() const {
  std::vector<std::optional<double>> out;
  const auto truth_totals = counts_.rowwise().sum();
  const auto pred_totals = counts_.colwise().sum();
  for (Index c = 0; c < num_classes(); ++c) {
    const auto inter = counts_(c, c);
    const auto uni = truth_totals(c) + pred_totals(c) - inter;
    if (uni == 0) {
      out.emplace_back();
    } else {
      out.emplace_back(static_cast<double>(inter) / static_cast<double>(uni));
    }
  }
  return out;
}

double ConfusionMatrix::mean_iou() const {
  double sum = 0.0;
  int present = 0;
  for (const auto& v : iou()) {
    if (v) {
      sum += *v;
      ++present;
    }
  }
  return present == 0 ? 0.0 : sum / present;
}

IouResult miou(const LabelMap& prediction, const LabelMap& truth) {
  ConfusionMatrix cm(std::max(prediction.num_classes, truth.num_classes));
  cm.add(prediction, truth);
  return {cm.iou(), cm.mean_iou()};
}

std::optional<double> pair_distance(std::span<const PixelCoord> pixels) {
  if (pixels.size() < 2) return std::nullopt;
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    for (std::size_t j = i + 1; j < pixels.size(); ++j) {
      total += std::hypot(static_cast<double>(pixels[i].row - pixels[j].row),
                          static_cast<double>(pixels[i].col - pixels[j].col));
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

std::optional<double> avg_pair_distance(const SelectionList& selections) {
  std::map<std::size_t, std::vector<PixelCoord>> by_image;
  for (const auto& e : selections) by_image[e.image_id].push_back({e.row, e.col});
  double sum = 0.0;
  std::size_t images = 0;
  for (const auto& [id, pixels] : by_image) {
    if (const auto d = pair_distance(pixels)) {
      sum += *d;
      ++images;
    }
  }
  if (images == 0) return std::nullopt;
  return sum / static_cast<double>(images);
}

double avg_unique_labels(const SelectionList& selections, std::span<const std::int32_t> labels) {
  if (labels.size() != selections.size()) throw ValidationError("avg_unique_labels: one label per selection needed");
  std::map<std::size_t, std::set<std::int32_t>> by_image;
  for (std::size_t i = 0; i < selections.size(); ++i) by_image[selections[i].image_id].insert(labels[i]);
  if (by_image.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [id, classes] : by_image) sum += static_cast<double>(classes.size());
  return sum / static_cast<double>(by_image.size());
}

NormalizationReport normalized_trajectories(std::vector<CycleMetrics>& history) {
  if (history.empty()) throw ValidationError("normalized_trajectories: empty history");
  NormalizationReport report;

  const auto normalise = [&history](auto raw, auto norm, bool use_abs) {
    const auto& base = history.front().*raw;
    const bool ok = base.has_value() && std::isfinite(*base) && std::abs(*base) > 1e-15;
    const double scale = ok ? (use_abs ? std::abs(*base) : *base) : 1.0;
    for (auto& m : history) {
      const auto& v = m.*raw;
      m.*norm = v ? std::optional<double>(*v / scale) : std::nullopt;
    }
    return ok;
  };
  report.epistemic_ok = normalise(&CycleMetrics::mean_epistemic, &CycleMetrics::epistemic_norm, false);
  report.aleatoric_ok = normalise(&CycleMetrics::mean_aleatoric, &CycleMetrics::aleatoric_norm, false);
  report.posterior_ok = normalise(&CycleMetrics::mean_posterior, &CycleMetrics::posterior_norm, true);
  return report;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

std::optional<double> parse_opt(const std::string& field, const std::filesystem::path& path, std::size_t line) {
  if (field.empty()) return std::nullopt;
  return csv::parse_real(field, path, line);
}

}  // namespace

void write_metrics(const std::vector<CycleMetrics>& history, Index num_classes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path.string());
  out << "cycle,miou";
  for (Index c = 0; c < num_classes; ++c) out << ",iou_class_" << c;
  out << ",avg_pair_distance,avg_unique_labels,epi,alea,post,epi_norm,alea_norm,post_norm\n";
  for (const auto& m : history) {
    if (static_cast<Index>(m.per_class_iou.size()) != num_classes) {
      throw ValidationError("write_metrics: per-class IoU length differs from class count");
    }
    out << m.cycle << ',' << format_real(m.miou);
    for (const auto& v : m.per_class_iou) out << ',' << opt(v);
    out << ',' << opt(m.avg_pair_distance) << ',' << opt(m.avg_unique_labels) << ',' << opt(m.mean_epistemic) << ','
        << opt(m.mean_aleatoric) << ',' << opt(m.mean_posterior) << ',' << opt(m.epistemic_norm) << ','
        << opt(m.aleatoric_norm) << ',' << opt(m.posterior_norm) << '\n';
  }
  out.flush();
  if (!out) throw IoError("write failed", path.string());
}

std::vector<CycleMetrics> read_metrics(const std::filesystem::path& path, Index* num_classes) {
  const auto table = csv::read(path);
  const auto& h = table.header;
  if (h.size() < 10 || h[0] != "cycle" || h[1] != "miou") throw FormatError(path.string() + ": not a metrics CSV");
  const Index classes = static_cast<Index>(h.size()) - 10;
  for (Index c = 0; c < classes; ++c) {
    if (h[static_cast<std::size_t>(2 + c)] != "iou_class_" + std::to_string(c)) {
      throw FormatError(path.string() + ": unexpected column '" + h[static_cast<std::size_t>(2 + c)] + "'");
    }
  }
  const std::vector<std::string> tail = {"avg_pair_distance", "avg_unique_labels", "epi",      "alea",
                                         "post",              "epi_norm",          "alea_norm", "post_norm"};
  if (!std::equal(tail.begin(), tail.end(), h.begin() + 2 + classes)) {
    throw FormatError(path.string() + ": unexpected trailing metrics columns");
  }
  if (num_classes != nullptr) *num_classes = classes;

  std::vector<CycleMetrics> out;
  for (const auto& row : table.rows) {
    const auto& f = row.fields;
    CycleMetrics m;
    m.cycle = static_cast<std::size_t>(csv::parse_integer(f[0], path, row.line));
    m.miou = csv::parse_real(f[1], path, row.line);
    for (Index c = 0; c < classes; ++c) m.per_class_iou.push_back(parse_opt(f[static_cast<std::size_t>(2 + c)], path, row.line));
    std::size_t i = static_cast<std::size_t>(2 + classes);
    m.avg_pair_distance = parse_opt(f[i++], path, row.line);
    m.avg_unique_labels = parse_opt(f[i++], path, row.line);
    m.mean_epistemic = parse_opt(f[i++], path, row.line);
    m.mean_aleatoric = parse_opt(f[i++], path, row.line);
    m.mean_posterior = parse_opt(f[i++], path, row.line);
    m.epistemic_norm = parse_opt(f[i++], path, row.line);
    m.aleatoric_norm = parse_opt(f[i++], path, row.line);
    m.posterior_norm = parse_opt(f[i++], path, row.line);
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace balent
