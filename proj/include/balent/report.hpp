#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "balent/metrics.hpp"

namespace balent {

struct RunMetrics {
  /// Grouping key, normally the acquisition kind.
  std::string label;
  std::filesystem::path source;
  Index num_classes = 0;
  std::vector<CycleMetrics> history;
};

/// Loads a metrics CSV. The label comes from `acquisition = ...` in a
/// manifest.txt next to the file, falling back to the parent directory name.
RunMetrics load_run(const std::filesystem::path& metrics_csv);

struct MeanStd {
  double mean = 0.0;
  /// Sample standard deviation; empty for a single run.
  std::optional<double> stddev;
};

struct ReportRow {
  std::string label;
  std::size_t runs = 0;
  std::vector<MeanStd> miou_per_cycle;
  MeanStd final_miou;
  MeanStd avg_unique_labels;
  MeanStd avg_pair_distance;
};

struct Report {
  std::size_t cycles = 0;
  Index num_classes = 0;
  std::vector<ReportRow> rows;
};

MeanStd mean_std(const std::vector<double>& values);

/// Groups runs by label (first-appearance order). Throws ValidationError when
/// runs disagree on cycle count or class count.
Report build_report(const std::vector<RunMetrics>& runs);

/// Markdown table: final mIoU as mean ± std, then per-cycle mean mIoU.
std::string render_table(const Report& report);

/// Long format, one line per (run, cycle):
/// label,run,cycle,miou,avg_pair_distance,avg_unique_labels,epi_norm,alea_norm,post_norm
void write_long_csv(const std::vector<RunMetrics>& runs, const std::filesystem::path& path);

}  // namespace balent
