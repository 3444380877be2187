#pragma once
#include <string>
#include <vector>

#include "scmil/layers.hpp"
#include "scmil/tape.hpp"

namespace scmil {

// Split of a scaled bag into task-relevant and task-irrelevant rows.
// Indices refer to rows of the original bag; membership is decided on
// importance values and is not differentiated through.
struct FilteredBag {
  int importance = -1;  // tape id, n x 1, entries in (0,1)
  int scaled = -1;      // tape id, n x d, features * importance
  std::vector<int> relevant;
  std::vector<int> irrelevant;
};

// Per-patch importance scoring: small MLP ending in a sigmoid, applied
// row-wise. Trains end to end from the bag-level loss alone.
struct SoftFilter {
  Linear fc1;  // d -> hidden, tanh
  Linear fc2;  // hidden -> 1

  static SoftFilter create(ParamStore& store, int d, int hidden, Rng& rng) {
    SoftFilter f;
    f.fc1 = Linear::create(store, "soft_filter.fc1", d, hidden, rng);
    f.fc2 = Linear::create(store, "soft_filter.fc2", hidden, 1, rng);
    return f;
  }

  int score(Tape& t, int feat) const {
    if (t.num_cols(feat) != fc1.in_dim())
      throw ShapeError("soft_filter: features have " +
                       std::to_string(t.num_cols(feat)) + " columns, expected " +
                       std::to_string(fc1.in_dim()));
    return t.sigmoid(fc2.apply(t, t.tanh_act(fc1.apply(t, feat))));
  }
};

// H = feat * IS (broadcast over columns); rows with IS >= thre are relevant.
inline FilteredBag apply_and_split(Tape& t, int feat, int importance, double thre) {
  if (!(thre > 0.0 && thre < 1.0))
    throw ConfigError("apply_and_split: threshold must lie in (0,1), got " +
                      std::to_string(thre));
  if (t.num_rows(importance) != t.num_rows(feat) || t.num_cols(importance) != 1)
    throw ShapeError("apply_and_split: importance must be n x 1 matching features");
  FilteredBag fb;
  fb.importance = importance;
  fb.scaled = t.scale_rows(feat, importance);
  const Matrix& is = t.value(importance);
  for (int i = 0; i < is.rows(); ++i) {
    if (is.at(i, 0) >= thre)
      fb.relevant.push_back(i);
    else
      fb.irrelevant.push_back(i);
  }
  return fb;
}

}  // namespace scmil
