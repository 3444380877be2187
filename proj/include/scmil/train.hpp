#pragma once
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "scmil/checkpoint.hpp"
#include "scmil/metrics.hpp"
#include "scmil/model.hpp"
#include "scmil/optim.hpp"

namespace scmil {

struct RunConfig {
  ModelConfig model;
  double lr = 2e-4;
  double weight_decay = 1e-3;
  int epochs = 20;
  int batch_size = 1;
  uint64_t seed = 42;
  int n_folds = 5;
  int grid_size = 100;
  double tau = 0.0;  // 0: use the max observed event time of the evaluation set
  int jobs = 0;      // 0: one thread per core, capped at n_folds

  void validate() const {
    model.validate();
    if (!(lr > 0.0)) throw ConfigError("config: lr must be > 0");
    if (weight_decay < 0.0) throw ConfigError("config: weight_decay must be >= 0");
    if (epochs < 1) throw ConfigError("config: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
    if (n_folds < 2) throw ConfigError("config: n_folds must be >= 2");
    if (grid_size < 2) throw ConfigError("config: grid_size must be >= 2");
    if (tau < 0.0) throw ConfigError("config: tau must be >= 0");
  }

  static RunConfig from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "d",        "filter_hidden", "gate_hidden", "wnet_hidden",
        "heads",    "cluster_size",  "threshold",   "w1",
        "mixture_components",        "variant",     "dropout",
        "layer_norm",                "lr",          "weight_decay",
        "epochs",   "batch_size",    "seed",        "n_folds",
        "grid_size", "tau",          "jobs"};
    for (auto it = j.begin(); it != j.end(); ++it)
      if (known.count(it.key()) == 0)
        throw ValidationError("config: unknown key '" + it.key() + "'");
    RunConfig c;
    c.model.d = j.value("d", c.model.d);
    c.model.filter_hidden = j.value("filter_hidden", c.model.filter_hidden);
    c.model.gate_hidden = j.value("gate_hidden", c.model.gate_hidden);
    c.model.wnet_hidden = j.value("wnet_hidden", c.model.wnet_hidden);
    c.model.heads = j.value("heads", c.model.heads);
    c.model.cluster_size = j.value("cluster_size", c.model.cluster_size);
    c.model.threshold = j.value("threshold", c.model.threshold);
    c.model.w1 = j.value("w1", c.model.w1);
    c.model.mixture_components = j.value("mixture_components", c.model.mixture_components);
    if (j.contains("variant"))
      c.model.variant = mdn_variant_from_string(j.at("variant").get<std::string>());
    c.model.dropout = j.value("dropout", c.model.dropout);
    c.model.layer_norm = j.value("layer_norm", c.model.layer_norm);
    c.lr = j.value("lr", c.lr);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    c.n_folds = j.value("n_folds", c.n_folds);
    c.grid_size = j.value("grid_size", c.grid_size);
    c.tau = j.value("tau", c.tau);
    c.jobs = j.value("jobs", c.jobs);
    c.validate();
    return c;
  }

  nlohmann::json to_json() const {
    const ModelConfig m = model.resolved();
    return nlohmann::json{{"d", m.d},
                          {"filter_hidden", m.filter_hidden},
                          {"gate_hidden", m.gate_hidden},
                          {"wnet_hidden", m.wnet_hidden},
                          {"heads", m.heads},
                          {"cluster_size", m.cluster_size},
                          {"threshold", m.threshold},
                          {"w1", m.w1},
                          {"mixture_components", m.mixture_components},
                          {"variant", to_string(m.variant)},
                          {"dropout", m.dropout},
                          {"layer_norm", m.layer_norm},
                          {"lr", lr},
                          {"weight_decay", weight_decay},
                          {"epochs", epochs},
                          {"batch_size", batch_size},
                          {"seed", seed},
                          {"n_folds", n_folds},
                          {"grid_size", grid_size},
                          {"tau", tau},
                          {"jobs", jobs}};
  }
};

// In-memory cohort: records and bags share indices.
struct Cohort {
  std::vector<CohortRecord> records;
  std::vector<PatchBag> bags;

  int size() const { return static_cast<int>(records.size()); }
  int feature_dim() const { return bags.empty() ? 0 : bags.front().features.cols(); }
};

inline Cohort load_cohort(const std::string& manifest_path) {
  Cohort c;
  c.records = load_manifest(manifest_path);
  int d = -1;
  for (auto& rec : c.records) {
    PatchBag bag = load_bag(rec.bag_path);
    bag.patient_id = rec.patient_id;
    if (d < 0)
      d = bag.features.cols();
    else if (bag.features.cols() != d)
      throw ValidationError("cohort: bag " + rec.patient_id + " has d=" +
                            std::to_string(bag.features.cols()) +
                            ", cohort uses d=" + std::to_string(d));
    c.bags.push_back(std::move(bag));
  }
  return c;
}

struct FoldSplit {
  int index = 0;
  std::vector<int> train_ids;
  std::vector<int> test_ids;
};

// Stratified by event flag so every fold sees both events and censorings.
inline std::vector<FoldSplit> make_folds(const std::vector<CohortRecord>& records,
                                         int n_folds, uint64_t seed) {
  if (static_cast<int>(records.size()) < n_folds)
    throw ValidationError("make_folds: cohort smaller than fold count");
  std::vector<int> fold_of(records.size(), -1);
  Rng rng(mix_seed(seed, "folds"));
  for (int stratum = 0; stratum <= 1; ++stratum) {
    std::vector<int> ids;
    for (size_t i = 0; i < records.size(); ++i)
      if (records[i].event == stratum) ids.push_back(static_cast<int>(i));
    rng.shuffle(ids);
    for (size_t k = 0; k < ids.size(); ++k)
      fold_of[static_cast<size_t>(ids[k])] = static_cast<int>(k) % n_folds;
  }
  std::vector<FoldSplit> folds(static_cast<size_t>(n_folds));
  for (int f = 0; f < n_folds; ++f) folds[static_cast<size_t>(f)].index = f;
  for (size_t i = 0; i < records.size(); ++i)
    for (int f = 0; f < n_folds; ++f) {
      if (fold_of[i] == f)
        folds[static_cast<size_t>(f)].test_ids.push_back(static_cast<int>(i));
      else
        folds[static_cast<size_t>(f)].train_ids.push_back(static_cast<int>(i));
    }
  return folds;
}

struct TrainedFold {
  std::unique_ptr<ScmilModel> model;
  std::vector<double> epoch_loss;  // entry 0 is the pre-training mean loss
  uint64_t optimizer_steps = 0;
};

namespace detail {

inline double eval_mode_loss(ScmilModel& model, const Cohort& cohort, int id,
                             uint64_t seed) {
  Tape t = model.make_tape();
  Rng rng(mix_seed(seed, "eval", static_cast<uint64_t>(id)));
  const ForwardResult fwd = model.forward(t, cohort.bags[static_cast<size_t>(id)],
                                          /*training=*/false, rng);
  const auto& rec = cohort.records[static_cast<size_t>(id)];
  return t.value(model.loss_node(t, fwd, rec.duration, rec.event)).at(0, 0);
}

}  // namespace detail

// One fold of training: per-patient Adam steps over shuffled training ids,
// optional per-epoch checkpoints under out_dir. Passing a checkpoint resumes
// at the epoch boundary it was written at and reproduces the uninterrupted
// run bit for bit.
inline TrainedFold train_fold(const Cohort& cohort, const FoldSplit& split,
                              const RunConfig& cfg, const std::string& out_dir = "",
                              const Checkpoint* resume = nullptr) {
  cfg.validate();
  {
    std::set<int> test(split.test_ids.begin(), split.test_ids.end());
    for (const int id : split.train_ids)
      if (test.count(id) > 0)
        throw StateError("fold " + std::to_string(split.index) +
                         ": train/test sets overlap at patient index " +
                         std::to_string(id));
  }
  TrainedFold out;
  out.model = std::make_unique<ScmilModel>(
      cfg.model, mix_seed(cfg.seed, "fold", static_cast<uint64_t>(split.index)));
  ScmilModel& model = *out.model;
  Adam adam(AdamConfig{cfg.lr, cfg.weight_decay, 0.9, 0.999, 1e-8});

  const int n_train = static_cast<int>(split.train_ids.size());
  const int steps_per_epoch = (n_train + cfg.batch_size - 1) / cfg.batch_size;
  int start_epoch = 0;
  if (resume != nullptr) {
    load_into_store(*resume, model.store());
    adam.set_step_count(resume->optimizer_steps);
    start_epoch = static_cast<int>(resume->optimizer_steps /
                                   static_cast<uint64_t>(steps_per_epoch));
  }

  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  const std::string config_json = cfg.to_json().dump();

  if (resume == nullptr) {
    double init_loss = 0.0;
    for (const int id : split.train_ids)
      init_loss += detail::eval_mode_loss(model, cohort, id, cfg.seed);
    out.epoch_loss.push_back(init_loss / n_train);
  }

  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    Rng stream(mix_seed(mix_seed(cfg.seed, "train"),
                        static_cast<uint64_t>(split.index),
                        static_cast<uint64_t>(epoch)));
    std::vector<int> order = split.train_ids;
    stream.shuffle(order);
    double epoch_loss = 0.0;
    for (int b = 0; b < n_train; b += cfg.batch_size) {
      const int batch_end = std::min(b + cfg.batch_size, n_train);
      const double inv_batch = 1.0 / (batch_end - b);
      for (int s = b; s < batch_end; ++s) {
        const int id = order[static_cast<size_t>(s)];
        Tape t = model.make_tape();
        const ForwardResult fwd =
            model.forward(t, cohort.bags[static_cast<size_t>(id)], /*training=*/true,
                          stream);
        const auto& rec = cohort.records[static_cast<size_t>(id)];
        const int loss = model.loss_node(t, fwd, rec.duration, rec.event);
        const double loss_val = t.value(loss).at(0, 0);
        if (!std::isfinite(loss_val))
          throw StateError("training aborted: non-finite loss for patient " +
                           rec.patient_id + " in fold " + std::to_string(split.index));
        epoch_loss += loss_val;
        t.backward(t.scale(loss, inv_batch));
      }
      adam.step(model.store());
      model.store().zero_grad();
    }
    out.epoch_loss.push_back(epoch_loss / n_train);
    if (!out_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", epoch + 1);
      save_checkpoint((std::filesystem::path(out_dir) / name).string(), config_json,
                      model.store(), adam.step_count());
    }
  }
  out.optimizer_steps = adam.step_count();
  if (!out_dir.empty()) {
    save_checkpoint((std::filesystem::path(out_dir) / "final.ckpt").string(),
                    config_json, model.store(), adam.step_count());
    std::ofstream hist((std::filesystem::path(out_dir) / "history.csv").string());
    hist << "epoch,mean_loss\n";
    for (size_t e = 0; e < out.epoch_loss.size(); ++e) {
      char buf[48];
      std::snprintf(buf, sizeof(buf), "%.17g", out.epoch_loss[e]);
      hist << (resume == nullptr ? e : e + static_cast<size_t>(start_epoch) + 1)
           << ',' << buf << '\n';
    }
  }
  return out;
}

// Survival distributions for a subset of the cohort, eval mode.
inline std::vector<SurvivalDistribution> predict_subset(ScmilModel& model,
                                                        const Cohort& cohort,
                                                        const std::vector<int>& ids,
                                                        uint64_t seed) {
  std::vector<SurvivalDistribution> dists;
  dists.reserve(ids.size());
  for (const int id : ids) {
    Tape t = model.make_tape();
    Rng rng(mix_seed(seed, "eval", static_cast<uint64_t>(id)));
    dists.push_back(
        model.forward(t, cohort.bags[static_cast<size_t>(id)], false, rng).dist);
  }
  return dists;
}

inline EvalResult evaluate_subset(ScmilModel& model, const Cohort& cohort,
                                  const std::vector<int>& ids, const RunConfig& cfg) {
  if (ids.empty()) throw UndefinedMetricError("evaluate: empty evaluation set");
  const std::vector<SurvivalDistribution> dists =
      predict_subset(model, cohort, ids, cfg.seed);
  std::vector<CohortRecord> records;
  records.reserve(ids.size());
  for (const int id : ids) records.push_back(cohort.records[static_cast<size_t>(id)]);

  double tau = cfg.tau;
  if (tau <= 0.0) {
    for (const auto& r : records)
      if (r.event == 1) tau = std::fmax(tau, r.duration);
    if (tau <= 0.0)
      throw UndefinedMetricError("evaluate: no observed events, tau undefined");
  }
  std::vector<std::function<double(double)>> dcdf_fns, scdf_fns;
  for (const auto& d : dists) {
    dcdf_fns.emplace_back([&d](double t) { return d.dcdf(t); });
    scdf_fns.emplace_back([&d](double t) { return d.scdf(t); });
  }
  EvalResult r;
  r.tau = tau;
  r.grid_size = cfg.grid_size;
  r.tdc = tdc(records, dcdf_fns, tau, &r.n_comparable_pairs);
  r.ibs = ibs(records, scdf_fns, tau, cfg.grid_size);
  return r;
}

struct FoldOutcome {
  int fold = 0;
  bool excluded = false;
  std::string note;
  EvalResult result;
  std::vector<double> epoch_loss;
};

struct CvResult {
  std::vector<FoldOutcome> folds;
  int included = 0;
  double tdc_mean = 0.0, tdc_std = 0.0;
  double ibs_mean = 0.0, ibs_std = 0.0;
};

inline nlohmann::json cv_to_json(const CvResult& cv, const RunConfig& cfg) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : cv.folds) {
    nlohmann::json jf{{"fold", f.fold}, {"excluded", f.excluded}, {"note", f.note}};
    if (!f.excluded) {
      jf["tdc"] = f.result.tdc;
      jf["ibs"] = f.result.ibs;
      jf["tau"] = f.result.tau;
      jf["n_comparable_pairs"] = f.result.n_comparable_pairs;
      jf["grid_size"] = f.result.grid_size;
    }
    folds.push_back(jf);
  }
  return nlohmann::json{{"folds", folds},
                        {"aggregate",
                         {{"tdc_mean", cv.tdc_mean},
                          {"tdc_std", cv.tdc_std},
                          {"ibs_mean", cv.ibs_mean},
                          {"ibs_std", cv.ibs_std},
                          {"n_folds_included", cv.included}}},
                        {"epoch_policy", "final"},
                        {"config", cfg.to_json()}};
}

inline CvResult cross_validate(const Cohort& cohort, const RunConfig& cfg,
                               const std::string& out_dir = "") {
  cfg.validate();
  const std::vector<FoldSplit> folds = make_folds(cohort.records, cfg.n_folds, cfg.seed);
  CvResult cv;
  cv.folds.resize(folds.size());
  std::vector<std::exception_ptr> errors(folds.size());
  std::atomic<size_t> next{0};

  const auto worker = [&]() {
    for (;;) {
      const size_t k = next.fetch_add(1);
      if (k >= folds.size()) return;
      FoldOutcome& out = cv.folds[k];
      out.fold = folds[k].index;
      try {
        std::string fold_dir;
        if (!out_dir.empty())
          fold_dir = (std::filesystem::path(out_dir) /
                      ("fold" + std::to_string(folds[k].index)))
                         .string();
        TrainedFold trained = train_fold(cohort, folds[k], cfg, fold_dir);
        out.epoch_loss = trained.epoch_loss;
        out.result = evaluate_subset(*trained.model, cohort, folds[k].test_ids, cfg);
      } catch (const UndefinedMetricError& e) {
        out.excluded = true;
        out.note = e.what();
      } catch (...) {
        errors[k] = std::current_exception();
        return;
      }
    }
  };

  int jobs = cfg.jobs > 0 ? cfg.jobs
                          : static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::clamp(jobs, 1, static_cast<int>(folds.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  double tsum = 0.0, isum = 0.0;
  for (const auto& f : cv.folds) {
    if (f.excluded) continue;
    ++cv.included;
    tsum += f.result.tdc;
    isum += f.result.ibs;
  }
  if (cv.included == 0)
    throw UndefinedMetricError("cross_validate: every fold was excluded");
  cv.tdc_mean = tsum / cv.included;
  cv.ibs_mean = isum / cv.included;
  double tvar = 0.0, ivar = 0.0;
  for (const auto& f : cv.folds) {
    if (f.excluded) continue;
    tvar += (f.result.tdc - cv.tdc_mean) * (f.result.tdc - cv.tdc_mean);
    ivar += (f.result.ibs - cv.ibs_mean) * (f.result.ibs - cv.ibs_mean);
  }
  cv.tdc_std = std::sqrt(tvar / cv.included);
  cv.ibs_std = std::sqrt(ivar / cv.included);

  if (!out_dir.empty()) {
    std::ofstream os((std::filesystem::path(out_dir) / "metrics.json").string());
    os << cv_to_json(cv, cfg).dump(2) << '\n';
  }
  return cv;
}

struct SweepRow {
  double w1 = 0.0;
  double tdc_mean = 0.0, tdc_std = 0.0;
  double ibs_mean = 0.0, ibs_std = 0.0;
};

// One cross-validation per w1 value over shared fold splits.
inline std::vector<SweepRow> sweep_w1(const Cohort& cohort, const RunConfig& base,
                                      const std::vector<double>& values,
                                      const std::string& csv_path = "") {
  std::vector<SweepRow> rows;
  for (const double v : values) {
    if (!(v >= 0.0 && v <= 1.0))
      throw ConfigError("sweep_w1: value " + std::to_string(v) + " outside [0,1]");
    RunConfig cfg = base;
    cfg.model.w1 = v;
    const CvResult cv = cross_validate(cohort, cfg);
    rows.push_back({v, cv.tdc_mean, cv.tdc_std, cv.ibs_mean, cv.ibs_std});
  }
  if (!csv_path.empty()) {
    std::ofstream os(csv_path);
    if (!os) throw FormatError("sweep_w1: cannot open " + csv_path);
    os << "w1,tdc_mean,tdc_std,ibs_mean,ibs_std\n";
    for (const auto& r : rows) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%.6g,%.6g,%.6g,%.6g,%.6g", r.w1, r.tdc_mean,
                    r.tdc_std, r.ibs_mean, r.ibs_std);
      os << buf << '\n';
    }
  }
  return rows;
}

struct CurveRow {
  double t = 0.0;
  double scdf = 0.0;
  double dpdf = 0.0;
};

inline std::vector<CurveRow> predict_curve(const SurvivalDistribution& dist,
                                           const std::vector<double>& grid) {
  std::vector<CurveRow> rows;
  for (const double t : grid) {
    if (!(t > 0.0))
      throw DomainError("predict_curve: grid times must be > 0, got " +
                        std::to_string(t));
    rows.push_back({t, dist.scdf(t), dist.dpdf(t)});
  }
  return rows;
}

}  // namespace scmil
