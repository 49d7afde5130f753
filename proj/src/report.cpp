#include "balent/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "balent/errors.hpp"

namespace balent {

namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string show(const MeanStd& m) {
  if (!m.stddev) return fixed3(m.mean);
  return fixed3(m.mean) + " ± " + fixed3(*m.stddev);
}

std::string manifest_label(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto key = line.substr(0, eq);
    key.erase(key.find_last_not_of(" \t") + 1);
    if (key != "acquisition") continue;
    auto value = line.substr(eq + 1);
    value.erase(0, value.find_first_not_of(" \t"));
    value.erase(value.find_last_not_of(" \t\r") + 1);
    return value;
  }
  return {};
}

}  // namespace

RunMetrics load_run(const std::filesystem::path& metrics_csv) {
  RunMetrics run;
  run.source = metrics_csv;
  run.history = read_metrics(metrics_csv, &run.num_classes);
  const auto dir = metrics_csv.parent_path();
  const auto manifest = dir / "manifest.txt";
  if (std::filesystem::exists(manifest)) run.label = manifest_label(manifest);
  if (run.label.empty()) run.label = std::filesystem::absolute(dir).filename().string();
  return run;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (const double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

Report build_report(const std::vector<RunMetrics>& runs) {
  if (runs.empty()) throw ValidationError("report needs at least one metrics file");
  Report report;
  report.cycles = runs.front().history.size();
  report.num_classes = runs.front().num_classes;
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunMetrics*>> groups;
  for (const auto& run : runs) {
    if (run.history.size() != report.cycles) {
      throw ValidationError(run.source.string() + " has " + std::to_string(run.history.size()) + " cycles, expected " +
                            std::to_string(report.cycles));
    }
    if (run.num_classes != report.num_classes) {
      throw ValidationError(run.source.string() + " has " + std::to_string(run.num_classes) + " classes, expected " +
                            std::to_string(report.num_classes));
    }
    if (report.cycles == 0) throw ValidationError(run.source.string() + " has no cycles");
    if (!groups.contains(run.label)) order.push_back(run.label);
    groups[run.label].push_back(&run);
  }

  for (const auto& label : order) {
    const auto& members = groups[label];
    ReportRow row;
    row.label = label;
    row.runs = members.size();
    for (std::size_t k = 0; k < report.cycles; ++k) {
      std::vector<double> v;
      for (const auto* run : members) v.push_back(run->history[k].miou);
      row.miou_per_cycle.push_back(mean_std(v));
    }
    row.final_miou = row.miou_per_cycle.back();

    // Diversity metrics are averaged over cycles per run, then across runs.
    std::vector<double> unique, distance;
    for (const auto* run : members) {
      double u = 0.0, d = 0.0;
      std::size_t nu = 0, nd = 0;
      for (const auto& m : run->history) {
        if (m.avg_unique_labels) u += *m.avg_unique_labels, ++nu;
        if (m.avg_pair_distance) d += *m.avg_pair_distance, ++nd;
      }
      if (nu > 0) unique.push_back(u / static_cast<double>(nu));
      if (nd > 0) distance.push_back(d / static_cast<double>(nd));
    }
    row.avg_unique_labels = mean_std(unique);
    row.avg_pair_distance = mean_std(distance);
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string render_table(const Report& report) {
  std::ostringstream out;
  out << "| acquisition | runs | final mIoU | avg unique labels | avg pair distance |";
  for (std::size_t k = 0; k < report.cycles; ++k) out << " cycle " << k << " |";
  out << "\n|---|---|---|---|---|";
  for (std::size_t k = 0; k < report.cycles; ++k) out << "---|";
  out << '\n';
  for (const auto& row : report.rows) {
    out << "| " << row.label << " | " << row.runs << " | " << show(row.final_miou) << " | "
        << show(row.avg_unique_labels) << " | " << show(row.avg_pair_distance) << " |";
    for (const auto& m : row.miou_per_cycle) out << ' ' << fixed3(m.mean) << " |";
    out << '\n';
  }
  return out.str();
}

void write_long_csv(const std::vector<RunMetrics>& runs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path.string());
  out << "label,run,cycle,miou,avg_pair_distance,avg_unique_labels,epi_norm,alea_norm,post_norm\n";
  std::map<std::string, std::size_t> run_index;
  const auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  for (const auto& run : runs) {
    const auto index = run_index[run.label]++;
    for (const auto& m : run.history) {
      out << run.label << ',' << index << ',' << m.cycle << ',' << format_real(m.miou) << ','
          << opt(m.avg_pair_distance) << ',' << opt(m.avg_unique_labels) << ',' << opt(m.epistemic_norm) << ','
          << opt(m.aleatoric_norm) << ',' << opt(m.posterior_norm) << '\n';
    }
  }
  out.flush();
  if (!out) throw IoError("write failed", path.string());
}

}  // namespace balent
