#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "balent/acquisition.hpp"
#include "balent/active_learning.hpp"
#include "balent/config.hpp"
#include "balent/errors.hpp"
#include "balent/report.hpp"
#include "balent/tensorio.hpp"

namespace balent::cli {

namespace fs = std::filesystem;

namespace {

/// `scores.csv` -> `scores.records.csv`.
fs::path companion_path(const fs::path& out, const std::string& suffix) {
  auto p = out;
  p.replace_extension();
  p += suffix;
  return p;
}

void write_records(const ImageUncertainty& unc, const ScoreMap& scores, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path.string());
  out << "row,col,shannon,epistemic,aleatoric,posterior,mjent,balent,score\n";
  for (Index r = 0; r < unc.height; ++r) {
    for (Index c = 0; c < unc.width; ++c) {
      const auto& rec = unc.at(r, c);
      out << r << ',' << c << ',' << format_real(rec.shannon) << ',' << format_real(rec.epistemic) << ','
          << format_real(rec.aleatoric) << ',' << format_real(rec.posterior_u) << ',' << format_real(rec.mjent) << ','
          << format_real(rec.balent) << ',' << format_real(scores.scores(r, c)) << '\n';
    }
  }
  out.flush();
  if (!out) throw IoError("write failed", path.string());
}

struct ScoreArgs {
  std::string cube;
  std::string acquisition = "balent_acq";
  std::uint64_t seed = 0;
  double gamma = 1.0;
  std::string out;
  std::string balent_map;
};

int cmd_score(const ScoreArgs& a, std::ostream& err) {
  AcquisitionConfig cfg;
  cfg.kind = parse_acquisition_kind(a.acquisition);
  cfg.seed = a.seed;
  cfg.gamma = a.gamma;
  cfg.validate();
  const auto cube = read_cube(a.cube);

  const auto unc = analyze_cube(cube);
  Rng rng(derive_seed(a.seed, 0, 0));
  const auto scores = score_image(unc, LabelMap::unlabeled(cube.height(), cube.width(), cube.num_classes()), cfg, rng);
  write_scores(scores, a.out);
  const auto records = companion_path(a.out, ".records.csv");
  write_records(unc, scores, records);
  if (!a.balent_map.empty()) write_scores(export_balent_map(unc), a.balent_map);
  err << "scored " << cube.num_pixels() << " pixels with " << to_string(cfg.kind) << " -> " << a.out << ", "
      << records.string() << '\n';
  return kOk;
}

struct SelectArgs {
  std::string scores;
  std::string labeled;
  Index n = 5;
  Index pool_factor = 1;
  std::uint64_t seed = 0;
  std::size_t image = 0;
  std::size_t cycle = 0;
  std::string out;
};

int cmd_select(const SelectArgs& a, std::ostream& err) {
  if (a.n < 1) throw ValidationError("--n must be >= 1");
  const auto scores = read_scores(a.scores);
  // Only the labeled/unlabeled split matters here; labels are kept as given.
  constexpr Index kAnyClassCount = std::numeric_limits<std::int32_t>::max();
  const auto labeled = a.labeled.empty()
                           ? LabelMap::unlabeled(scores.height(), scores.width(), kAnyClassCount)
                           : read_labeled_pixels(a.labeled, scores.height(), scores.width(), kAnyClassCount);
  const Index unlabeled = scores.scores.size() - labeled.labeled_count();
  if (a.n > unlabeled) {
    err << "warning: requested " << a.n << " pixels but only " << unlabeled << " are unlabeled; selecting all\n";
  }
  Rng rng(derive_seed(a.seed, a.image, a.cycle));
  const auto picks = a.pool_factor > 1
                         ? select_top_n_in_pool(scores, labeled, a.n, a.pool_factor, rng, a.image, a.cycle)
                         : select_top_n(scores, labeled, a.n, rng, a.image, a.cycle);
  write_selections(picks, a.out);
  err << "selected " << picks.size() << " pixels -> " << a.out << '\n';
  return kOk;
}

struct SimulateArgs {
  std::string config;
  std::string out;
  std::optional<std::string> acquisition;
  std::optional<Index> n, m, cycles, pool_factor;
  std::optional<double> dropout, gamma;
  std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& err) {
  ALConfig cfg = a.config.empty() ? ALConfig{} : load_config(a.config);
  if (a.acquisition) cfg.acquisition.kind = parse_acquisition_kind(*a.acquisition);
  if (a.n) cfg.acquisition.n = *a.n;
  if (a.m) cfg.mc_samples = *a.m;
  if (a.cycles) cfg.cycles = *a.cycles;
  if (a.pool_factor) cfg.acquisition.margin_pool_factor = *a.pool_factor;
  if (a.dropout) cfg.dropout = *a.dropout;
  if (a.gamma) cfg.acquisition.gamma = *a.gamma;
  if (a.seed) cfg.acquisition.seed = *a.seed;
  cfg.validate();

  const fs::path dir = a.out;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory", dir.string());

  const auto result = run_al(cfg);
  write_metrics(result.history, cfg.data.num_classes, dir / "metrics.csv");
  write_selections(result.selections, dir / "selections.csv");
  {
    const auto path = dir / "manifest.txt";
    std::ofstream manifest(path, std::ios::trunc);
    if (!manifest) throw IoError("cannot open for writing", path.string());
    manifest << "# resolved configuration\n" << render_config(cfg);
    manifest << "# outcome\n# cycles_completed = " << result.history.size()
             << "\n# truncated = " << (result.truncated ? "true" : "false")
             << "\n# labeled_pixels = " << result.labeled.entries.size() << '\n';
    if (!manifest) throw IoError("write failed", path.string());
  }
  if (result.truncated) err << "warning: unlabeled pool exhausted after " << result.history.size() << " cycles\n";
  if (!result.normalization.epistemic_ok || !result.normalization.aleatoric_ok || !result.normalization.posterior_ok) {
    err << "warning: a first-cycle uncertainty mean is zero; that series is reported unnormalised\n";
  }
  err << to_string(cfg.acquisition.kind) << ": final mIoU " << format_real(result.history.back().miou) << " after "
      << result.history.size() << " cycles -> " << dir.string() << '\n';
  return kOk;
}

struct ReportArgs {
  std::vector<std::string> metrics;
  std::string out;
};

int cmd_report(const ReportArgs& a, std::ostream& err) {
  std::vector<RunMetrics> runs;
  for (const auto& path : a.metrics) runs.push_back(load_run(path));
  const auto report = build_report(runs);
  const fs::path out = a.out;
  {
    std::ofstream table(out, std::ios::trunc);
    if (!table) throw IoError("cannot open for writing", out.string());
    table << render_table(report);
    if (!table) throw IoError("write failed", out.string());
  }
  const auto long_csv = companion_path(out, "_long.csv");
  write_long_csv(runs, long_csv);
  err << "report over " << runs.size() << " runs -> " << out.string() << ", " << long_csv.string() << '\n';
  return kOk;
}

struct CubeArgs {
  std::string config;
  std::size_t image = 0;
  std::optional<Index> m;
  std::optional<double> dropout;
  std::optional<std::uint64_t> seed;
  std::string out;
};

// Trains the toy model on a random seed set and dumps the MC predictions of one image.
int cmd_cube(const CubeArgs& a, std::ostream& err) {
  ALConfig cfg = a.config.empty() ? ALConfig{} : load_config(a.config);
  if (a.m) cfg.mc_samples = *a.m;
  if (a.dropout) cfg.dropout = *a.dropout;
  if (a.seed) cfg.acquisition.seed = *a.seed;
  cfg.cycles = 1;
  cfg.validate();
  const auto data = generate_dataset(cfg.data);
  if (a.image >= data.size()) throw ValidationError("--image out of range");

  Rng init_rng(derive_seed(cfg.acquisition.seed, 1, 0));
  ToyModel model(cfg.data.feature_dim, cfg.hidden, cfg.data.num_classes, cfg.dropout, init_rng);
  RowMajorMatrix<double> x;
  std::vector<std::int32_t> y;
  Rng pick_rng(derive_seed(cfg.acquisition.seed, 3, 0));
  const auto train_images = static_cast<std::size_t>(cfg.num_train_images());
  x.resize(static_cast<Index>(train_images) * cfg.acquisition.n, cfg.data.feature_dim);
  Index row = 0;
  for (std::size_t img = 0; img < train_images; ++img) {
    for (Index k = 0; k < cfg.acquisition.n; ++k) {
      const auto p = static_cast<Index>(uniform01(pick_rng) * static_cast<double>(data.pixels_per_image()));
      x.row(row++) = data.features[img].row(p);
      y.push_back(data.truth[img].labels.data()[p]);
    }
  }
  Rng train_rng(derive_seed(cfg.acquisition.seed, 2, 0));
  train(model, x, y, cfg.train, train_rng);
  Rng mc_rng(derive_seed(cfg.acquisition.seed, 4, a.image));
  const auto cube = mc_forward(model, data.features[a.image], data.height, data.width, cfg.mc_samples, mc_rng);
  write_cube(cube, a.out);
  err << "wrote " << cube.height() << "x" << cube.width() << "x" << cube.num_classes() << "x" << cube.num_samples()
      << " cube -> " << a.out << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& err) {
  CLI::App app{"Balanced-entropy active learning for sparse pixel annotation"};
  app.require_subcommand(1);

  ScoreArgs score;
  auto* sc = app.add_subcommand("score", "Score every pixel of a prediction cube");
  sc->add_option("cube", score.cube, "BALCUBE1 prediction cube")->required();
  sc->add_option("--acquisition", score.acquisition, "balent_acq|bald|power_bald|margin|entropy|random");
  sc->add_option("--seed", score.seed, "Seed for random and power_bald scores");
  sc->add_option("--gamma", score.gamma, "PowerBALD exponent");
  sc->add_option("--out", score.out, "Score map CSV; records go to <stem>.records.csv")->required();
  sc->add_option("--balent-map", score.balent_map, "Optional display map Phi(BalEnt)/100");

  SelectArgs select;
  auto* se = app.add_subcommand("select", "Pick the top-n unlabeled pixels of a score map");
  se->add_option("scores", select.scores, "Score map CSV")->required();
  se->add_option("--labeled", select.labeled, "CSV with row,col columns marking labeled pixels");
  se->add_option("--n", select.n, "Pixels to select");
  se->add_option("--pool-factor", select.pool_factor, "Rank inside a random pool of pool-factor * n pixels");
  se->add_option("--seed", select.seed, "Tie-breaking seed");
  se->add_option("--image", select.image, "Image id written to the selection");
  se->add_option("--cycle", select.cycle, "Cycle written to the selection");
  se->add_option("--out", select.out, "Selection CSV")->required();

  SimulateArgs sim;
  auto* si = app.add_subcommand("simulate", "Run the active-learning loop on a synthetic dataset");
  si->add_option("--config", sim.config, "key = value configuration file");
  si->add_option("--out", sim.out, "Output directory")->required();
  si->add_option("--acquisition", sim.acquisition);
  si->add_option("--n", sim.n);
  si->add_option("--m", sim.m);
  si->add_option("--dropout", sim.dropout);
  si->add_option("--cycles", sim.cycles);
  si->add_option("--gamma", sim.gamma);
  si->add_option("--pool-factor", sim.pool_factor);
  si->add_option("--seed", sim.seed);

  ReportArgs rep;
  auto* re = app.add_subcommand("report", "Compare simulation runs");
  re->add_option("metrics", rep.metrics, "metrics.csv files")->required();
  re->add_option("--out", rep.out, "Markdown table; long CSV goes to <stem>_long.csv")->required();

  CubeArgs cube;
  auto* cu = app.add_subcommand("cube", "Write MC-dropout predictions of one synthetic image");
  cu->add_option("--config", cube.config, "key = value configuration file");
  cu->add_option("--image", cube.image, "Image id");
  cu->add_option("--m", cube.m);
  cu->add_option("--dropout", cube.dropout);
  cu->add_option("--seed", cube.seed);
  cu->add_option("--out", cube.out, "Cube file")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, std::cout, err) == 0 ? kOk : kValidation;
  }

  try {
    if (sc->parsed()) return cmd_score(score, err);
    if (se->parsed()) return cmd_select(select, err);
    if (si->parsed()) return cmd_simulate(sim, err);
    if (re->parsed()) return cmd_report(rep, err);
    if (cu->parsed()) return cmd_cube(cube, err);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kValidation;
}

}  // namespace balent::cli
