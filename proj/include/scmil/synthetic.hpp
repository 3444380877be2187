#pragma once
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "scmil/bag.hpp"
#include "scmil/error.hpp"
#include "scmil/rng.hpp"

namespace scmil {

// Synthetic cohort with a planted survival signal: each bag mixes isotropic
// background patches with a spatially co-located "risky" clique whose
// features are shifted along a fixed direction. A patient's hazard grows
// with the fraction of risky patches.
struct SyntheticConfig {
  int n_patients = 200;
  int patches_min = 256;
  int patches_max = 1024;
  int d = 32;
  std::vector<double> risky_direction;  // unit vector; empty -> drawn from seed
  double risky_fraction_lo = 0.0;
  double risky_fraction_hi = 1.0;
  double base_hazard = 0.25;       // events per year at risk fraction 0
  double hazard_multiplier = 16.0;  // rate scales by multiplier^fraction
  double censor_rate = 0.3;
  uint64_t seed = 42;

  void validate() const {
    if (n_patients < 1) throw ValidationError("synthetic: n_patients must be >= 1");
    if (patches_min < 1 || patches_max < patches_min)
      throw ValidationError("synthetic: need 1 <= patches_min <= patches_max");
    if (d < 1) throw ValidationError("synthetic: d must be >= 1");
    if (!(risky_fraction_lo >= 0.0 && risky_fraction_hi <= 1.0 &&
          risky_fraction_lo <= risky_fraction_hi))
      throw ValidationError("synthetic: risky_fraction_range must be within [0,1]");
    if (!(base_hazard > 0.0)) throw ValidationError("synthetic: base_hazard must be > 0");
    if (!(hazard_multiplier > 0.0))
      throw ValidationError("synthetic: hazard_multiplier must be > 0");
    if (!(censor_rate >= 0.0 && censor_rate < 1.0))
      throw ValidationError("synthetic: censor_rate must lie in [0,1)");
    if (!risky_direction.empty() && static_cast<int>(risky_direction.size()) != d)
      throw ValidationError("synthetic: risky_direction must have d entries");
  }

  static SyntheticConfig from_json(const nlohmann::json& j) {
    static const char* known[] = {"n_patients",  "patches_min",
                                  "patches_max", "d",
                                  "risky_direction", "risky_fraction_range",
                                  "base_hazard", "hazard_multiplier",
                                  "censor_rate", "seed"};
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool ok = false;
      for (const char* k : known) ok = ok || it.key() == k;
      if (!ok) throw ValidationError("synthetic: unknown key '" + it.key() + "'");
    }
    SyntheticConfig c;
    c.n_patients = j.value("n_patients", c.n_patients);
    c.patches_min = j.value("patches_min", c.patches_min);
    c.patches_max = j.value("patches_max", c.patches_max);
    c.d = j.value("d", c.d);
    if (j.contains("risky_direction"))
      c.risky_direction = j.at("risky_direction").get<std::vector<double>>();
    if (j.contains("risky_fraction_range")) {
      const auto r = j.at("risky_fraction_range").get<std::vector<double>>();
      if (r.size() != 2)
        throw ValidationError("synthetic: risky_fraction_range must be [lo, hi]");
      c.risky_fraction_lo = r[0];
      c.risky_fraction_hi = r[1];
    }
    c.base_hazard = j.value("base_hazard", c.base_hazard);
    c.hazard_multiplier = j.value("hazard_multiplier", c.hazard_multiplier);
    c.censor_rate = j.value("censor_rate", c.censor_rate);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
  }
};

struct SyntheticCohort {
  std::vector<PatchBag> bags;
  std::vector<CohortRecord> records;     // bag_path empty until written
  std::vector<double> risky_fraction;    // planted ground truth per patient
};

namespace detail {

// Patients fall into low / intermediate / high risk strata spanning the
// configured fraction range; the bimodal mix keeps the planted ranking
// signal visible over the exponential noise.
inline double sample_risk_fraction(double lo, double hi, Rng& rng) {
  const double u = rng.uniform();
  if (u < 0.4) return lo;
  if (u < 0.6) return 0.5 * (lo + hi);
  return hi;
}

}  // namespace detail

inline SyntheticCohort generate_synthetic_cohort(const SyntheticConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  constexpr double kRiskyShift = 2.0;     // feature offset along the risky direction
  constexpr double kCliqueSpread = 0.03;  // spatial stddev of the risky clique
  constexpr double kCoordScale = 20000.0; // raw slide units
  constexpr double kMinDuration = 1e-3;   // years

  std::vector<double> direction = cfg.risky_direction;
  if (direction.empty()) {
    direction.resize(cfg.d);
    double norm2 = 0.0;
    for (double& x : direction) {
      x = rng.normal();
      norm2 += x * x;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : direction) x *= inv;
  }

  SyntheticCohort cohort;
  std::vector<double> event_times;
  for (int p = 0; p < cfg.n_patients; ++p) {
    const int n = cfg.patches_min +
                  static_cast<int>(rng.below(static_cast<uint64_t>(
                      cfg.patches_max - cfg.patches_min + 1)));
    const double target_frac = detail::sample_risk_fraction(
        cfg.risky_fraction_lo, cfg.risky_fraction_hi, rng);
    const int n_risky = static_cast<int>(std::lround(target_frac * n));
    const double frac = static_cast<double>(n_risky) / n;

    PatchBag bag;
    char pid[16];
    std::snprintf(pid, sizeof(pid), "P%04d", p);
    bag.patient_id = pid;
    bag.features = Matrix(n, cfg.d);
    bag.positions = Matrix(n, 2);

    const double cx = rng.uniform(0.15, 0.85);
    const double cy = rng.uniform(0.15, 0.85);
    for (int i = 0; i < n; ++i) {
      const bool risky = i < n_risky;
      for (int j = 0; j < cfg.d; ++j) {
        double x = rng.normal();
        if (risky) x += kRiskyShift * direction[j];
        bag.features.at(i, j) = x;
      }
      double px, py;
      if (risky) {
        px = std::clamp(cx + kCliqueSpread * rng.normal(), 0.0, 1.0);
        py = std::clamp(cy + kCliqueSpread * rng.normal(), 0.0, 1.0);
      } else {
        px = rng.uniform();
        py = rng.uniform();
      }
      bag.positions.at(i, 0) = px * kCoordScale;
      bag.positions.at(i, 1) = py * kCoordScale;
    }
    // Shuffle patch order so the clique is not positionally encoded.
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    Matrix sf(n, cfg.d), sp(n, 2);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < cfg.d; ++j) sf.at(i, j) = bag.features.at(order[i], j);
      sp.at(i, 0) = bag.positions.at(order[i], 0);
      sp.at(i, 1) = bag.positions.at(order[i], 1);
    }
    bag.features = std::move(sf);
    bag.positions = std::move(sp);

    const double rate = cfg.base_hazard * std::pow(cfg.hazard_multiplier, frac);
    event_times.push_back(rng.exponential(rate));
    cohort.bags.push_back(std::move(bag));
    cohort.risky_fraction.push_back(frac);
  }

  // Censoring is decided independently of the event time; a censored
  // patient's follow-up ends uniformly within their survival span.
  for (int p = 0; p < cfg.n_patients; ++p) {
    CohortRecord rec;
    rec.patient_id = cohort.bags[static_cast<size_t>(p)].patient_id;
    double t = event_times[static_cast<size_t>(p)];
    int event = 1;
    if (cfg.censor_rate > 0.0 && rng.uniform() < cfg.censor_rate) {
      t *= rng.uniform();
      event = 0;
    }
    rec.duration = std::fmax(t, kMinDuration);
    rec.event = event;
    cohort.records.push_back(std::move(rec));
  }
  return cohort;
}

// Write bags under dir/bags and a manifest at dir/manifest.csv.
inline std::string write_cohort(SyntheticCohort& cohort, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "bags");
  for (size_t i = 0; i < cohort.bags.size(); ++i) {
    const std::string p =
        (fs::path(dir) / "bags" / (cohort.bags[i].patient_id + ".scmb")).string();
    write_bag(cohort.bags[i], p);
    cohort.records[i].bag_path = p;
  }
  const std::string manifest = (fs::path(dir) / "manifest.csv").string();
  write_manifest(cohort.records, manifest);
  return manifest;
}

}  // namespace scmil
