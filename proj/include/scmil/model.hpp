#pragma once
#include <string>
#include <vector>

#include "scmil/attention.hpp"
#include "scmil/bag.hpp"
#include "scmil/cluster.hpp"
#include "scmil/mdn.hpp"
#include "scmil/soft_filter.hpp"

namespace scmil {

struct ModelConfig {
  int d = 32;
  int filter_hidden = 0;  // 0 resolves to max(1, d/2)
  int gate_hidden = 0;
  int wnet_hidden = 0;
  int heads = 4;
  int cluster_size = 64;
  double threshold = 0.5;
  double w1 = 0.8;
  int mixture_components = 100;
  MdnVariant variant = MdnVariant::learnable;
  double dropout = 0.1;
  bool layer_norm = false;

  ModelConfig resolved() const {
    ModelConfig c = *this;
    const int half = std::max(1, c.d / 2);
    if (c.filter_hidden <= 0) c.filter_hidden = half;
    if (c.gate_hidden <= 0) c.gate_hidden = half;
    if (c.wnet_hidden <= 0) c.wnet_hidden = half;
    return c;
  }

  void validate() const {
    if (d < 1) throw ConfigError("model: d must be >= 1");
    if (heads < 1 || d % heads != 0)
      throw ConfigError("model: d=" + std::to_string(d) +
                        " must be divisible by heads=" + std::to_string(heads));
    if (cluster_size < 1) throw ConfigError("model: cluster_size must be >= 1");
    if (!(threshold > 0.0 && threshold < 1.0))
      throw ConfigError("model: threshold must lie in (0,1)");
    if (!(w1 >= 0.0 && w1 <= 1.0)) throw ConfigError("model: w1 must lie in [0,1]");
    if (mixture_components < 1) throw ConfigError("model: K must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0))
      throw ConfigError("model: dropout must lie in [0,1)");
  }
};

// Per-patch outputs of one forward pass, in original patch order.
struct PatchInterpretation {
  std::vector<double> importance;  // IS
  std::vector<int> cluster;        // -1 for task-irrelevant patches
  std::vector<double> alpha;       // pooling weight
};

struct ForwardResult {
  MixtureNodes mixture;
  SurvivalDistribution dist;
  PatchInterpretation interp;
  int pooled = -1;  // tape id, 1 x d
};

// Full pipeline: importance scoring, relevance split, joint-space clustering
// of relevant patches, per-cluster self-attention, gated pooling, and the
// mixture survival head.
class ScmilModel {
public:
  ScmilModel(const ModelConfig& config, uint64_t init_seed)
      : cfg_(config.resolved()) {
    cfg_.validate();
    Rng rng(mix_seed(init_seed, "model_init"));
    filter_ = SoftFilter::create(store_, cfg_.d, cfg_.filter_hidden, rng);
    mhsa_ = MhsaBlock::create(store_, "scsa.mhsa", cfg_.d, cfg_.heads, cfg_.dropout,
                              cfg_.layer_norm, rng);
    pool_ = GatedAttentionPool::create(store_, cfg_.d, cfg_.gate_hidden,
                                       cfg_.dropout, rng);
    mdn_ = RegisterMdn::create(store_, cfg_.d, cfg_.wnet_hidden,
                               cfg_.mixture_components, cfg_.variant, rng);
  }

  Tape make_tape() { return Tape(&store_); }

  ForwardResult forward(Tape& t, const PatchBag& bag, bool training, Rng& rng) {
    if (bag.features.cols() != cfg_.d)
      throw ShapeError("forward: bag has d=" + std::to_string(bag.features.cols()) +
                       ", model expects d=" + std::to_string(cfg_.d));
    const int n = bag.features.rows();
    const int feat = t.input(bag.features);
    const int is = filter_.score(t, feat);
    const FilteredBag fb = apply_and_split(t, feat, is, cfg_.threshold);

    ForwardResult res;
    res.interp.importance.resize(n);
    for (int i = 0; i < n; ++i) res.interp.importance[i] = t.value(is).at(i, 0);
    res.interp.cluster.assign(n, -1);

    // H' rows in concat order -> original patch index
    std::vector<int> order;
    int hprime;
    if (fb.relevant.empty()) {
      // nothing passes the filter: pool over the scaled bag directly
      hprime = fb.scaled;
      order.resize(n);
      for (int i = 0; i < n; ++i) order[i] = i;
    } else {
      const int n_rel = static_cast<int>(fb.relevant.size());
      Matrix rel_feat(n_rel, cfg_.d);
      Matrix rel_pos(n_rel, 2);
      const Matrix& h = t.value(fb.scaled);
      const Matrix pos01 = normalize_positions(bag.positions);
      for (int r = 0; r < n_rel; ++r) {
        const int src = fb.relevant[static_cast<size_t>(r)];
        for (int j = 0; j < cfg_.d; ++j) rel_feat.at(r, j) = h.at(src, j);
        rel_pos.at(r, 0) = pos01.at(src, 0);
        rel_pos.at(r, 1) = pos01.at(src, 1);
      }
      const ClusterPartition part =
          cluster_relevant(rel_feat, rel_pos, cfg_.w1, cfg_.cluster_size, rng);
      std::vector<int> parts;
      for (int c = 0; c < part.num_clusters; ++c) {
        std::vector<int> members;
        for (int r = 0; r < n_rel; ++r) {
          if (part.assignments[static_cast<size_t>(r)] != c) continue;
          const int src = fb.relevant[static_cast<size_t>(r)];
          members.push_back(src);
          res.interp.cluster[static_cast<size_t>(src)] = c;
          order.push_back(src);
        }
        const int rows = t.select_rows(fb.scaled, members);
        parts.push_back(mhsa_.apply(t, rows, training, rng));
      }
      if (!fb.irrelevant.empty()) {
        parts.push_back(t.select_rows(fb.scaled, fb.irrelevant));
        for (const int src : fb.irrelevant) order.push_back(src);
      }
      hprime = parts.size() == 1 ? parts[0] : t.concat_rows(parts);
    }

    const auto pooled = pool_.apply(t, hprime, training, rng);
    res.pooled = pooled.pooled;
    res.interp.alpha.resize(n);
    const Matrix& alphas = t.value(pooled.alphas);
    for (size_t k = 0; k < order.size(); ++k)
      res.interp.alpha[static_cast<size_t>(order[k])] = alphas.at(0, static_cast<int>(k));

    res.mixture = mdn_.nodes(t, res.pooled);
    res.dist = mdn_.extract(t, res.mixture);
    return res;
  }

  int loss_node(Tape& t, const ForwardResult& fwd, double td, int event) const {
    return mdn_.nll(t, fwd.mixture, td, event);
  }

  ParamStore& store() { return store_; }
  const ModelConfig& config() const { return cfg_; }
  const RegisterMdn& mdn() const { return mdn_; }

private:
  ModelConfig cfg_;
  ParamStore store_;
  SoftFilter filter_;
  MhsaBlock mhsa_;
  GatedAttentionPool pool_;
  RegisterMdn mdn_;
};

}  // namespace scmil
