#pragma once
#include <cmath>
#include <string>
#include <vector>

#include "scmil/layers.hpp"
#include "scmil/special.hpp"
#include "scmil/tape.hpp"

namespace scmil {

// Time warp t = g(y) = log(1 + exp(y)) maps the mixture's real line onto
// positive survival times.
inline double g_forward(double y) { return softplus_scalar(y); }

inline double g_inverse(double t) {
  if (!(t > 0.0)) throw DomainError("g_inverse: time must be > 0, got " + std::to_string(t));
  // log(exp(t) - 1) in the branch that avoids cancellation
  return t > 0.7 ? t + std::log1p(-std::exp(-t)) : std::log(std::expm1(t));
}

inline double g_inverse_abs_derivative(double t) {
  if (!(t > 0.0))
    throw DomainError("g_inverse_abs_derivative: time must be > 0, got " + std::to_string(t));
  return 1.0 / (-std::expm1(-t));  // 1 / (1 - e^{-t})
}

constexpr double kSigmaFloor = 1e-3;
constexpr double kScdfLogClamp = 1e-12;

// Gaussian mixture over warped time. lambdas live on the simplex; sigmas are
// floored at kSigmaFloor. scdf is evaluated with upper-tail erfc so distant
// horizons keep relative accuracy; dcdf = 1 - scdf by construction.
struct SurvivalDistribution {
  std::vector<double> lambdas;
  std::vector<double> mus;
  std::vector<double> sigmas;

  int components() const { return static_cast<int>(lambdas.size()); }

  double scdf(double t) const {
    if (t < 0.0) throw DomainError("scdf: time must be >= 0, got " + std::to_string(t));
    if (t == 0.0) return 1.0;
    const double y = g_inverse(t);
    double s = 0.0;
    for (int i = 0; i < components(); ++i)
      s += lambdas[i] * norm_sf((y - mus[i]) / sigmas[i]);
    return s;
  }

  double dcdf(double t) const { return 1.0 - scdf(t); }

  double dpdf(double t) const {
    if (!(t > 0.0)) throw DomainError("dpdf: time must be > 0, got " + std::to_string(t));
    const double y = g_inverse(t);
    double s = 0.0;
    for (int i = 0; i < components(); ++i)
      s += lambdas[i] * norm_pdf((y - mus[i]) / sigmas[i]) / sigmas[i];
    return g_inverse_abs_derivative(t) * s;
  }

  double log_dpdf(double t) const {
    if (!(t > 0.0)) throw DomainError("log_dpdf: time must be > 0, got " + std::to_string(t));
    const double y = g_inverse(t);
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> lp(lambdas.size());
    for (size_t i = 0; i < lambdas.size(); ++i) {
      if (lambdas[i] <= 0.0) {
        lp[i] = -std::numeric_limits<double>::infinity();
        continue;
      }
      const double z = (y - mus[i]) / sigmas[i];
      lp[i] = std::log(lambdas[i]) + log_norm_pdf(z) - std::log(sigmas[i]);
      mx = std::fmax(mx, lp[i]);
    }
    if (!std::isfinite(mx)) return -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (const double x : lp) sum += std::exp(x - mx);
    return std::log(g_inverse_abs_derivative(t)) + mx + std::log(sum);
  }
};

// Censored negative log-likelihood on plain values (evaluation path).
inline double nll_value(const SurvivalDistribution& dist, double td, int event) {
  if (!(td > 0.0)) throw DomainError("nll: time must be > 0, got " + std::to_string(td));
  if (event != 0 && event != 1)
    throw DomainError("nll: censor flag must be 0 or 1, got " + std::to_string(event));
  if (event == 1) return -dist.log_dpdf(td);
  const double s = std::fmin(std::fmax(dist.scdf(td), kScdfLogClamp), 1.0);
  return -std::log(s);
}

enum class MdnVariant { learnable, fixed, predicted };

inline std::string to_string(MdnVariant v) {
  switch (v) {
    case MdnVariant::learnable: return "learnable";
    case MdnVariant::fixed: return "fixed";
    case MdnVariant::predicted: return "predicted";
  }
  return "?";
}

inline MdnVariant mdn_variant_from_string(const std::string& s) {
  if (s == "learnable") return MdnVariant::learnable;
  if (s == "fixed") return MdnVariant::fixed;
  if (s == "predicted") return MdnVariant::predicted;
  throw ConfigError("unknown mdn variant: " + s);
}

struct MixtureNodes {
  int logits = -1;  // 1 x K, pre-softmax component weights
  int mu = -1;      // 1 x K
  int sigma = -1;   // 1 x K, already floored
};

// Mixture-density survival head. Component weights always come from the
// bag feature; means and deviations come from register vectors routed
// through one linear map each (learnable or frozen), or from two heads on
// the bag feature in the predicted variant.
struct RegisterMdn {
  MdnVariant variant = MdnVariant::learnable;
  int K = 100;
  Linear wnet1, wnet2;        // d -> hidden tanh -> K
  Parameter* Pm = nullptr;    // 1 x K register of means
  Parameter* Pv = nullptr;    // 1 x K register of deviations
  Parameter* mean_W = nullptr;  // K x K, no bias
  Parameter* var_W = nullptr;   // K x K, no bias
  Linear pred_mean, pred_var;   // predicted variant heads d -> K

  static RegisterMdn create(ParamStore& store, int d, int hidden, int K,
                            MdnVariant variant, Rng& rng) {
    if (K < 1) throw ConfigError("mdn: K must be >= 1");
    RegisterMdn m;
    m.variant = variant;
    m.K = K;
    m.wnet1 = Linear::create(store, "mdn.weight_net.fc1", d, hidden, rng);
    m.wnet2 = Linear::create(store, "mdn.weight_net.fc2", hidden, K, rng);
    switch (variant) {
      case MdnVariant::learnable: {
        Matrix pm(1, K);
        for (int i = 0; i < K; ++i) pm.at(0, i) = 0.1 * rng.normal();
        m.Pm = &store.add("mdn.P_m", std::move(pm), true);
        m.Pv = &store.add("mdn.P_v", Matrix(1, K), true);
        m.mean_W = &store.add("mdn.mean_net.weight", dense_init(K, K, K, rng), true);
        m.var_W = &store.add("mdn.var_net.weight", dense_init(K, K, K, rng), true);
        break;
      }
      case MdnVariant::fixed: {
        // Means anchored at standard-normal quantiles, deviations exactly 1.
        Matrix pm(1, K);
        for (int i = 0; i < K; ++i)
          pm.at(0, i) = norm_quantile((i + 0.5) / static_cast<double>(K));
        Matrix pv(1, K, softplus_inverse_scalar(1.0 - kSigmaFloor));
        m.Pm = &store.add("mdn.P_m", std::move(pm), false);
        m.Pv = &store.add("mdn.P_v", std::move(pv), false);
        m.mean_W = &store.add("mdn.mean_net.weight", Matrix::identity(K), false);
        m.var_W = &store.add("mdn.var_net.weight", Matrix::identity(K), false);
        break;
      }
      case MdnVariant::predicted: {
        m.pred_mean = Linear::create(store, "mdn.pred_mean", d, K, rng);
        m.pred_var = Linear::create(store, "mdn.pred_var", d, K, rng);
        break;
      }
    }
    return m;
  }

  MixtureNodes nodes(Tape& t, int feat_prime) const {
    MixtureNodes n;
    n.logits = wnet2.apply(t, t.tanh_act(wnet1.apply(t, feat_prime)));
    if (variant == MdnVariant::predicted) {
      n.mu = pred_mean.apply(t, feat_prime);
      n.sigma = t.add_scalar(t.softplus(pred_var.apply(t, feat_prime)), kSigmaFloor);
    } else {
      n.mu = t.matmul(t.param(*Pm), t.param(*mean_W));
      n.sigma = t.add_scalar(t.softplus(t.matmul(t.param(*Pv), t.param(*var_W))),
                             kSigmaFloor);
    }
    return n;
  }

  SurvivalDistribution extract(Tape& t, const MixtureNodes& n) const {
    SurvivalDistribution d;
    const Matrix lam = t.value(t.softmax_rows(n.logits));
    const Matrix& mu = t.value(n.mu);
    const Matrix& sg = t.value(n.sigma);
    d.lambdas.assign(lam.data(), lam.data() + lam.size());
    d.mus.assign(mu.data(), mu.data() + mu.size());
    d.sigmas.assign(sg.data(), sg.data() + sg.size());
    return d;
  }

  // Censored negative log-likelihood as a tape node (training path).
  int nll(Tape& t, const MixtureNodes& n, double td, int event) const {
    if (!(td > 0.0))
      throw DomainError("nll: time must be > 0, got " + std::to_string(td));
    if (event != 0 && event != 1)
      throw DomainError("nll: censor flag must be 0 or 1, got " + std::to_string(event));
    const double y = g_inverse(td);
    const int ymat = t.constant(Matrix(1, K, y));
    const int z = t.divide(t.sub(ymat, n.mu), n.sigma);
    if (event == 1) {
      const int log_phi = t.add_scalar(
          t.sub(t.scale(t.mul(z, z), -0.5), t.log_(n.sigma)), -kLogSqrt2Pi);
      const int log_comp = t.add(t.log_softmax_rows(n.logits), log_phi);
      const int ll = t.add_scalar(t.logsumexp(log_comp),
                                  std::log(g_inverse_abs_derivative(td)));
      return t.neg(ll);
    }
    // SCDF = sum_i lambda_i * 0.5*(1 - erf(z_i / sqrt(2)))
    const int upper = t.scale(
        t.add_scalar(t.neg(t.erf_(t.scale(z, 1.0 / kSqrt2))), 1.0), 0.5);
    const int scdf = t.sum(t.mul(t.softmax_rows(n.logits), upper));
    return t.neg(t.log_clamped(scdf, kScdfLogClamp));
  }
};

}  // namespace scmil
