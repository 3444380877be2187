#pragma once
#include <cmath>
#include <string>
#include <vector>

#include "scmil/layers.hpp"
#include "scmil/tape.hpp"

namespace scmil {

// Multi-head self-attention block with a residual connection. Attention is
// only ever evaluated inside one cluster, so softmax width is bounded by the
// cluster size. Dropout hits the attention weights and the projected output.
struct MhsaBlock {
  int heads = 1;
  Linear q, k, v, out;
  double dropout_rate = 0.0;
  bool layer_norm = false;

  static MhsaBlock create(ParamStore& store, const std::string& name, int d,
                          int heads, double dropout_rate, bool layer_norm,
                          Rng& rng) {
    if (heads < 1 || d % heads != 0)
      throw ConfigError("mhsa: feature dim " + std::to_string(d) +
                        " not divisible by " + std::to_string(heads) + " heads");
    MhsaBlock b;
    b.heads = heads;
    b.dropout_rate = dropout_rate;
    b.layer_norm = layer_norm;
    b.q = Linear::create(store, name + ".q", d, d, rng);
    b.k = Linear::create(store, name + ".k", d, d, rng);
    b.v = Linear::create(store, name + ".v", d, d, rng);
    b.out = Linear::create(store, name + ".out", d, d, rng);
    return b;
  }

  int apply(Tape& t, int x, bool training, Rng& rng) const {
    const int d = t.num_cols(x);
    const int dh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const int src = layer_norm ? t.row_layernorm(x) : x;
    const int Q = q.apply(t, src);
    const int K = k.apply(t, src);
    const int V = v.apply(t, src);
    std::vector<int> head_outs;
    head_outs.reserve(heads);
    for (int h = 0; h < heads; ++h) {
      const int c0 = h * dh, c1 = (h + 1) * dh;
      const int qh = t.slice_cols(Q, c0, c1);
      const int kh = t.slice_cols(K, c0, c1);
      const int vh = t.slice_cols(V, c0, c1);
      const int scores = t.scale(t.matmul(qh, t.transpose(kh)), scale);
      int probs = t.attn_softmax(scores);
      probs = t.dropout(probs, dropout_rate, training, rng);
      head_outs.push_back(t.matmul(probs, vh));
    }
    const int merged = heads == 1 ? head_outs[0] : t.concat_cols(head_outs);
    int proj = out.apply(t, merged);
    proj = t.dropout(proj, dropout_rate, training, rng);
    return t.add(proj, x);
  }
};

// Gated attention pooling: per-row gate a^T (tanh(x V) . sigmoid(x U)),
// softmax over rows, weighted sum. Dropout applies to the gate input only.
struct GatedAttentionPool {
  Parameter* V = nullptr;  // d x h
  Parameter* U = nullptr;  // d x h
  Parameter* a = nullptr;  // h x 1
  double dropout_rate = 0.0;

  static GatedAttentionPool create(ParamStore& store, int d, int h,
                                   double dropout_rate, Rng& rng) {
    GatedAttentionPool p;
    p.dropout_rate = dropout_rate;
    p.V = &store.add("pool.V", dense_init(d, h, d, rng));
    p.U = &store.add("pool.U", dense_init(d, h, d, rng));
    p.a = &store.add("pool.a", dense_init(h, 1, h, rng));
    return p;
  }

  struct Result {
    int pooled = -1;  // 1 x d
    int alphas = -1;  // 1 x n, sums to 1
  };

  Result apply(Tape& t, int hprime, bool training, Rng& rng) const {
    const int gate_in = t.dropout(hprime, dropout_rate, training, rng);
    const int gv = t.tanh_act(t.matmul(gate_in, t.param(*V)));
    const int gu = t.sigmoid(t.matmul(gate_in, t.param(*U)));
    const int scores = t.matmul(t.mul(gv, gu), t.param(*a));  // n x 1
    Result r;
    r.alphas = t.softmax_rows(t.transpose(scores));  // 1 x n
    r.pooled = t.matmul(r.alphas, hprime);           // 1 x d
    return r;
  }
};

}  // namespace scmil
