#pragma once
#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "scmil/bag.hpp"
#include "scmil/error.hpp"

namespace scmil {

// Right-continuous step function equal to 1 before the first breakpoint.
struct StepFunction {
  std::vector<double> times;   // sorted breakpoints
  std::vector<double> values;  // value at and after each breakpoint

  double operator()(double t) const {
    // last breakpoint <= t
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    return values[static_cast<size_t>(it - times.begin()) - 1];
  }

  double left_limit(double t) const {
    // last breakpoint strictly < t
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    return values[static_cast<size_t>(it - times.begin()) - 1];
  }
};

// Product-limit estimator. At tied times all events are processed before
// censorings, i.e. censored patients at t remain in the risk set for the
// deaths at t.
inline StepFunction kaplan_meier(const std::vector<CohortRecord>& records) {
  if (records.empty()) throw UndefinedMetricError("kaplan_meier: empty cohort");
  std::vector<std::pair<double, int>> obs;  // (time, event)
  obs.reserve(records.size());
  for (const auto& r : records) obs.emplace_back(r.duration, r.event);
  std::sort(obs.begin(), obs.end());
  StepFunction s;
  double surv = 1.0;
  size_t i = 0;
  size_t at_risk = obs.size();
  while (i < obs.size()) {
    const double t = obs[i].first;
    int deaths = 0;
    size_t tied = 0;
    while (i + tied < obs.size() && obs[i + tied].first == t) {
      deaths += obs[i + tied].second;
      ++tied;
    }
    if (deaths > 0) {
      surv *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
      s.times.push_back(t);
      s.values.push_back(surv);
    }
    at_risk -= tied;
    i += tied;
  }
  return s;
}

// Kaplan-Meier of the censoring distribution G: same estimator on flipped
// event indicators.
inline StepFunction censoring_km(const std::vector<CohortRecord>& records) {
  std::vector<CohortRecord> flipped = records;
  for (auto& r : flipped) r.event = 1 - r.event;
  return kaplan_meier(flipped);
}

// Time-dependent concordance. Comparable pairs (i,j): i uncensored,
// t_i < t_j, t_i <= tau; concordant when the predicted death probability of
// i at t_i exceeds that of j; exact ties count one half.
inline double tdc(const std::vector<CohortRecord>& records,
                  const std::vector<std::function<double(double)>>& predicted_dcdf,
                  double tau, long* comparable_out = nullptr) {
  if (records.size() != predicted_dcdf.size())
    throw ShapeError("tdc: records and predictions differ in length");
  if (!(tau > 0.0)) throw DomainError("tdc: tau must be > 0");
  const size_t n = records.size();
  double concordant = 0.0;
  long comparable = 0;
  for (size_t i = 0; i < n; ++i) {
    if (records[i].event != 1) continue;
    const double ti = records[i].duration;
    if (ti > tau) continue;
    const double di = predicted_dcdf[i](ti);
    for (size_t j = 0; j < n; ++j) {
      if (j == i || !(ti < records[j].duration)) continue;
      ++comparable;
      const double dj = predicted_dcdf[j](ti);
      if (di > dj)
        concordant += 1.0;
      else if (di == dj)
        concordant += 0.5;
    }
  }
  if (comparable_out != nullptr) *comparable_out = comparable;
  if (comparable == 0)
    throw UndefinedMetricError("tdc: no comparable pairs in cohort");
  return concordant / static_cast<double>(comparable);
}

// IPCW Brier score at time t. censor_km must be the Kaplan-Meier estimate of
// the censoring distribution (censoring_km above). Patients censored before
// t contribute zero.
inline double brier(const std::vector<CohortRecord>& records,
                    const std::vector<std::function<double(double)>>& predicted_scdf,
                    double t, const StepFunction& censor_km) {
  if (records.size() != predicted_scdf.size())
    throw ShapeError("brier: records and predictions differ in length");
  if (t < 0.0) throw DomainError("brier: t must be >= 0");
  double acc = 0.0;
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.duration <= t && r.event == 1) {
      const double g = censor_km.left_limit(r.duration);
      if (g <= 0.0)
        throw UndefinedMetricError(
            "brier: censoring survival is 0 at t=" + std::to_string(r.duration) +
            " while scoring t=" + std::to_string(t));
      const double s = predicted_scdf[i](t);
      acc += s * s / g;
    } else if (r.duration > t) {
      const double g = censor_km(t);
      if (g <= 0.0)
        throw UndefinedMetricError("brier: censoring survival is 0 at t=" +
                                   std::to_string(t));
      const double s = predicted_scdf[i](t);
      acc += (1.0 - s) * (1.0 - s) / g;
    }
    // censored with duration <= t: no contribution
  }
  return acc / static_cast<double>(records.size());
}

// Integrated Brier score: trapezoid over an equally spaced grid on [0, tau],
// normalized by tau.
inline double ibs(const std::vector<CohortRecord>& records,
                  const std::vector<std::function<double(double)>>& predicted_scdf,
                  double tau, int grid_size) {
  if (grid_size < 2) throw ConfigError("ibs: grid_size must be >= 2");
  if (!(tau > 0.0)) throw DomainError("ibs: tau must be > 0");
  const StepFunction g = censoring_km(records);
  std::vector<double> bs(static_cast<size_t>(grid_size));
  for (int k = 0; k < grid_size; ++k) {
    const double t = tau * static_cast<double>(k) / (grid_size - 1);
    bs[static_cast<size_t>(k)] = brier(records, predicted_scdf, t, g);
  }
  double integral = 0.0;
  const double dt = tau / (grid_size - 1);
  for (int k = 0; k + 1 < grid_size; ++k)
    integral += 0.5 * (bs[static_cast<size_t>(k)] + bs[static_cast<size_t>(k) + 1]) * dt;
  return integral / tau;
}

struct EvalResult {
  double tdc = 0.0;
  double ibs = 0.0;
  double tau = 0.0;
  int grid_size = 0;
  long n_comparable_pairs = 0;
};

}  // namespace scmil
