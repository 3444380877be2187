// Command-line front end: synthetic cohort generation, training with
// cross-validation, evaluation, per-patient prediction, and the w1 sweep.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "scmil/scmil.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw scmil::ValidationError("cannot open config file: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw scmil::ValidationError("bad JSON in " + path + ": " + e.what());
  }
  return j;
}

scmil::RunConfig run_config_for_cohort(const std::string& config_path,
                                       const scmil::Cohort& cohort) {
  json j = config_path.empty() ? json::object() : read_json_file(config_path);
  if (!j.contains("d")) j["d"] = cohort.feature_dim();
  return scmil::RunConfig::from_json(j);
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
  const json j = config_path.empty() ? json::object() : read_json_file(config_path);
  const auto cfg = scmil::SyntheticConfig::from_json(j);
  auto cohort = scmil::generate_synthetic_cohort(cfg);
  const std::string manifest = scmil::write_cohort(cohort, out_dir);
  int events = 0;
  for (const auto& r : cohort.records) events += r.event;
  std::printf("wrote %zu bags, %d events, %d censored -> %s\n", cohort.bags.size(),
              events, static_cast<int>(cohort.records.size()) - events,
              manifest.c_str());
  return 0;
}

int cmd_train(const std::string& manifest, const std::string& config_path,
              const std::string& fold_arg, const std::string& out_dir) {
  const scmil::Cohort cohort = scmil::load_cohort(manifest);
  const scmil::RunConfig cfg = run_config_for_cohort(config_path, cohort);
  fs::create_directories(out_dir);
  if (fold_arg == "all") {
    const scmil::CvResult cv = scmil::cross_validate(cohort, cfg, out_dir);
    for (const auto& f : cv.folds) {
      if (f.excluded)
        std::printf("fold %d: excluded (%s)\n", f.fold, f.note.c_str());
      else
        std::printf("fold %d: tdc=%.4f ibs=%.4f\n", f.fold, f.result.tdc, f.result.ibs);
    }
    std::printf("aggregate: tdc=%.4f±%.4f ibs=%.4f±%.4f (%d folds)\n", cv.tdc_mean,
                cv.tdc_std, cv.ibs_mean, cv.ibs_std, cv.included);
    std::printf("metrics -> %s\n", (fs::path(out_dir) / "metrics.json").string().c_str());
    return 0;
  }
  int fold_index;
  try {
    fold_index = std::stoi(fold_arg);
  } catch (const std::exception&) {
    throw scmil::ValidationError("--fold must be an index or 'all', got " + fold_arg);
  }
  if (fold_index < 0 || fold_index >= cfg.n_folds)
    throw scmil::ValidationError("--fold out of range for " +
                                 std::to_string(cfg.n_folds) + " folds");
  const auto folds = scmil::make_folds(cohort.records, cfg.n_folds, cfg.seed);
  const std::string fold_dir =
      (fs::path(out_dir) / ("fold" + std::to_string(fold_index))).string();
  auto trained = scmil::train_fold(cohort, folds[static_cast<size_t>(fold_index)],
                                   cfg, fold_dir);
  std::printf("fold %d trained, %d epochs, final mean loss %.6f\n", fold_index,
              cfg.epochs, trained.epoch_loss.back());
  try {
    const auto r = scmil::evaluate_subset(
        *trained.model, cohort, folds[static_cast<size_t>(fold_index)].test_ids, cfg);
    json out{{"fold", fold_index},       {"tdc", r.tdc},
             {"ibs", r.ibs},             {"tau", r.tau},
             {"n_comparable_pairs", r.n_comparable_pairs},
             {"grid_size", r.grid_size}};
    std::ofstream os((fs::path(fold_dir) / "metrics.json").string());
    os << out.dump(2) << '\n';
    std::printf("fold %d: tdc=%.4f ibs=%.4f\n", fold_index, r.tdc, r.ibs);
  } catch (const scmil::UndefinedMetricError& e) {
    std::printf("fold %d: metric undefined (%s)\n", fold_index, e.what());
  }
  return 0;
}

struct LoadedModel {
  scmil::RunConfig cfg;
  std::unique_ptr<scmil::ScmilModel> model;
};

LoadedModel model_from_checkpoint(const std::string& path) {
  const scmil::Checkpoint ck = scmil::read_checkpoint(path);
  json j;
  try {
    j = json::parse(ck.config_json);
  } catch (const json::exception& e) {
    throw scmil::FormatError("checkpoint config is not valid JSON: " +
                             std::string(e.what()));
  }
  LoadedModel lm;
  lm.cfg = scmil::RunConfig::from_json(j);
  lm.model = std::make_unique<scmil::ScmilModel>(lm.cfg.model, lm.cfg.seed);
  scmil::load_into_store(ck, lm.model->store());
  return lm;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& manifest,
                 const std::string& out_path) {
  LoadedModel lm = model_from_checkpoint(checkpoint);
  const scmil::Cohort cohort = scmil::load_cohort(manifest);
  std::vector<int> ids(static_cast<size_t>(cohort.size()));
  for (int i = 0; i < cohort.size(); ++i) ids[static_cast<size_t>(i)] = i;
  const auto r = scmil::evaluate_subset(*lm.model, cohort, ids, lm.cfg);
  json out{{"tdc", r.tdc},
           {"ibs", r.ibs},
           {"tau", r.tau},
           {"n_comparable_pairs", r.n_comparable_pairs},
           {"grid_size", r.grid_size}};
  std::ofstream os(out_path);
  if (!os) throw scmil::ValidationError("cannot open output file: " + out_path);
  os << out.dump(2) << '\n';
  std::printf("tdc=%.4f ibs=%.4f tau=%.3f -> %s\n", r.tdc, r.ibs, r.tau,
              out_path.c_str());
  return 0;
}

int cmd_predict(const std::string& checkpoint, const std::string& bag_path,
                int grid_n, double horizon, const std::string& out_csv,
                const std::string& svg_path, const std::string& patches_csv) {
  if (grid_n < 1) throw scmil::ValidationError("--grid must be >= 1");
  LoadedModel lm = model_from_checkpoint(checkpoint);
  const scmil::PatchBag bag = scmil::load_bag(bag_path);
  scmil::Tape tape = lm.model->make_tape();
  scmil::Rng rng(scmil::mix_seed(lm.cfg.seed, "predict"));
  const auto fwd = lm.model->forward(tape, bag, false, rng);

  if (horizon <= 0.0) {
    // cover the distribution out to roughly 4 sigma past the farthest mean
    double ymax = fwd.dist.mus[0] + 4.0 * fwd.dist.sigmas[0];
    for (int i = 1; i < fwd.dist.components(); ++i)
      ymax = std::fmax(ymax, fwd.dist.mus[static_cast<size_t>(i)] +
                                 4.0 * fwd.dist.sigmas[static_cast<size_t>(i)]);
    horizon = scmil::g_forward(ymax);
  }
  std::vector<double> grid;
  for (int k = 1; k <= grid_n; ++k)
    grid.push_back(horizon * static_cast<double>(k) / grid_n);
  const auto rows = scmil::predict_curve(fwd.dist, grid);
  std::ofstream os(out_csv);
  if (!os) throw scmil::ValidationError("cannot open output file: " + out_csv);
  os << "time,scdf,dpdf\n";
  for (const auto& r : rows) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g", r.t, r.scdf, r.dpdf);
    os << buf << '\n';
  }
  if (!patches_csv.empty()) scmil::write_patch_table(bag, fwd.interp, patches_csv);
  if (!svg_path.empty()) scmil::write_scatter_svg(bag, fwd.interp, svg_path);
  std::printf("%d curve points over (0, %.3f] -> %s\n", grid_n, horizon,
              out_csv.c_str());
  return 0;
}

int cmd_sweep(const std::string& manifest, const std::string& config_path,
              const std::string& values_arg, const std::string& out_csv) {
  std::vector<double> values;
  std::stringstream ss(values_arg);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      values.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw scmil::ValidationError("--values entry is not a number: " + tok);
    }
  }
  if (values.empty()) throw scmil::ValidationError("--values is empty");
  const scmil::Cohort cohort = scmil::load_cohort(manifest);
  const scmil::RunConfig cfg = run_config_for_cohort(config_path, cohort);
  const auto rows = scmil::sweep_w1(cohort, cfg, values, out_csv);
  for (const auto& r : rows)
    std::printf("w1=%.3f tdc=%.4f±%.4f ibs=%.4f±%.4f\n", r.w1, r.tdc_mean, r.tdc_std,
                r.ibs_mean, r.ibs_std);
  std::printf("sweep table -> %s\n", out_csv.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"survival prediction on patch-feature bags"};
  app.require_subcommand(1);

  std::string config_path, out_path, manifest, checkpoint, bag_path;
  std::string fold_arg = "all", values_arg, svg_path, patches_csv;
  int grid_n = 100;
  double horizon = 0.0;

  auto* sim = app.add_subcommand("simulate", "generate a synthetic cohort");
  sim->add_option("--config", config_path, "generator config JSON");
  sim->add_option("--out", out_path, "output directory")->required();

  auto* train = app.add_subcommand("train", "train one fold or full cross-validation");
  train->add_option("--manifest", manifest, "cohort manifest CSV")->required();
  train->add_option("--config", config_path, "run config JSON");
  train->add_option("--fold", fold_arg, "fold index or 'all' (default)");
  train->add_option("--out", out_path, "output directory")->required();

  auto* eval = app.add_subcommand("evaluate", "evaluate a checkpoint on a manifest");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--manifest", manifest, "cohort manifest CSV")->required();
  eval->add_option("--out", out_path, "metrics JSON path")->required();

  auto* pred = app.add_subcommand("predict", "survival curve for one bag");
  pred->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  pred->add_option("--bag", bag_path, "bag file (.scmb)")->required();
  pred->add_option("--grid", grid_n, "number of curve points");
  pred->add_option("--horizon", horizon, "largest time on the grid (years)");
  pred->add_option("--out", out_path, "curve CSV path")->required();
  pred->add_option("--svg", svg_path, "scatter SVG of importance and clusters");
  pred->add_option("--patches", patches_csv, "per-patch table CSV");

  auto* sweep = app.add_subcommand("sweep-w1", "cross-validate over w1 values");
  sweep->add_option("--values", values_arg, "comma-separated w1 values")->required();
  sweep->add_option("--manifest", manifest, "cohort manifest CSV")->required();
  sweep->add_option("--config", config_path, "run config JSON");
  sweep->add_option("--out", out_path, "output CSV path")->required();

  try {
    app.parse(argc, argv);
    if (sim->parsed()) return cmd_simulate(config_path, out_path);
    if (train->parsed()) return cmd_train(manifest, config_path, fold_arg, out_path);
    if (eval->parsed()) return cmd_evaluate(checkpoint, manifest, out_path);
    if (pred->parsed())
      return cmd_predict(checkpoint, bag_path, grid_n, horizon, out_path, svg_path,
                         patches_csv);
    if (sweep->parsed()) return cmd_sweep(manifest, config_path, values_arg, out_path);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const scmil::UndefinedMetricError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const scmil::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
