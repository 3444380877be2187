#pragma once
#include <cmath>
#include <cstdint>

#include "scmil/error.hpp"
#include "scmil/tape.hpp"

namespace scmil {

struct AdamConfig {
  double lr = 2e-4;
  double weight_decay = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with decoupled weight decay. Moment state lives on the parameters
// themselves so checkpoints capture it for free.
class Adam {
public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(ParamStore& store) {
    if (!store.grads_ready())
      throw StateError("adam step requested before any backward pass");
    ++steps_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
    for (Parameter* p : store.all()) {
      if (!p->trainable) continue;
      double* w = p->value.data();
      const double* g = p->grad.data();
      double* m = p->m.data();
      double* v = p->v.data();
      for (size_t i = 0; i < p->value.size(); ++i) {
        w[i] -= cfg_.lr * cfg_.weight_decay * w[i];
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

  uint64_t step_count() const { return steps_; }
  void set_step_count(uint64_t n) { steps_ = n; }
  const AdamConfig& config() const { return cfg_; }

private:
  AdamConfig cfg_;
  uint64_t steps_ = 0;
};

}  // namespace scmil
