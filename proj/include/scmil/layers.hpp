#pragma once
#include <cmath>
#include <string>

#include "scmil/rng.hpp"
#include "scmil/tape.hpp"

namespace scmil {

// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))
inline Matrix dense_init(int rows, int cols, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix m(rows, cols);
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  return m;
}

// Dense layer y = x W + b with W stored (in x out).
struct Linear {
  Parameter* W = nullptr;
  Parameter* b = nullptr;

  static Linear create(ParamStore& store, const std::string& name, int in, int out,
                       Rng& rng, bool bias = true, bool trainable = true) {
    Linear l;
    l.W = &store.add(name + ".weight", dense_init(in, out, in, rng), trainable);
    if (bias)
      l.b = &store.add(name + ".bias", dense_init(1, out, in, rng), trainable);
    return l;
  }

  int apply(Tape& t, int x) const {
    int y = t.matmul(x, t.param(*W));
    if (b != nullptr) y = t.add_rowvec(y, t.param(*b));
    return y;
  }

  int in_dim() const { return W->value.rows(); }
  int out_dim() const { return W->value.cols(); }
};

}  // namespace scmil
