#pragma once
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "scmil/tape.hpp"

namespace scmil_test {

// Relative error with a small absolute floor so near-zero gradients compare
// on an absolute scale.
inline double rel_err(double a, double b, double floor_scale = 1e-2) {
  const double diff = std::fabs(a - b);
  const double scale = std::fmax(std::fmax(std::fabs(a), std::fabs(b)), floor_scale);
  return diff / scale;
}

// Central finite differences over every trainable parameter entry in the
// store. `run(false)` must rebuild the loss from scratch (fresh tape, fresh
// RNG seeds) and return its value; `run(true)` must additionally run
// backward so analytic gradients land in Parameter::grad.
inline double max_grad_rel_err(scmil::ParamStore& store,
                               const std::function<double(bool)>& run,
                               double h = 1e-5, double floor_scale = 1e-2) {
  store.zero_grad();
  run(true);
  std::vector<std::vector<double>> analytic;
  for (scmil::Parameter* p : store.all())
    analytic.emplace_back(p->grad.data(), p->grad.data() + p->grad.size());
  double worst = 0.0;
  size_t pi = 0;
  for (scmil::Parameter* p : store.all()) {
    const auto& an = analytic[pi++];
    if (!p->trainable) continue;
    for (size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value.data()[i];
      p->value.data()[i] = orig + h;
      const double fp = run(false);
      p->value.data()[i] = orig - h;
      const double fm = run(false);
      p->value.data()[i] = orig;
      const double fd = (fp - fm) / (2.0 * h);
      worst = std::fmax(worst, rel_err(an[i], fd, floor_scale));
    }
  }
  store.zero_grad();
  return worst;
}

inline scmil::Matrix random_matrix(int rows, int cols, scmil::Rng& rng,
                                   double scale = 1.0) {
  scmil::Matrix m(rows, cols);
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

// Spearman rank correlation; average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  const auto ranks = [n](const std::vector<double>& v) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
      for (size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace scmil_test
