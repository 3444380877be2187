#pragma once
#include <cmath>
#include <limits>
#include <vector>

#include "scmil/error.hpp"
#include "scmil/matrix.hpp"
#include "scmil/rng.hpp"

namespace scmil {

// Joint embedding in which squared Euclidean distance blends morphology and
// location: w1*(2 - 2*cos(f_i, f_j)) + (1-w1)*2*||p_i - p_j||^2. Rows are
// concat(sqrt(w1) * normalized features, sqrt(2*(1-w1)) * positions).
inline Matrix joint_embed(const Matrix& features, const Matrix& positions01,
                          double w1) {
  if (positions01.rows() != features.rows() || positions01.cols() != 2)
    throw ShapeError("joint_embed: positions are " + positions01.shape_str() +
                     " for features " + features.shape_str());
  if (!(w1 >= 0.0 && w1 <= 1.0))
    throw ConfigError("joint_embed: w1 must lie in [0,1], got " + std::to_string(w1));
  const int n = features.rows();
  const int d = features.cols();
  const double fw = std::sqrt(w1);
  const double pw = std::sqrt(2.0 * (1.0 - w1));
  Matrix out(n, d + 2);
  for (int i = 0; i < n; ++i) {
    double norm2 = 0.0;
    for (int j = 0; j < d; ++j) norm2 += features.at(i, j) * features.at(i, j);
    // zero-norm rows stay at the origin: cosine-neutral
    const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
    for (int j = 0; j < d; ++j) out.at(i, j) = fw * inv * features.at(i, j);
    out.at(i, d) = pw * positions01.at(i, 0);
    out.at(i, d + 1) = pw * positions01.at(i, 1);
  }
  return out;
}

struct ClusterPartition {
  std::vector<int> assignments;        // cluster id per input row
  int num_clusters = 0;
  Matrix centroids;                    // num_clusters x q
  std::vector<double> objective_trace; // within-cluster sum of squares per iteration
};

namespace detail {

inline double sq_dist(const Matrix& a, int i, const Matrix& b, int k) {
  double s = 0.0;
  for (int j = 0; j < a.cols(); ++j) {
    const double diff = a.at(i, j) - b.at(k, j);
    s += diff * diff;
  }
  return s;
}

inline Matrix kmeanspp_seed(const Matrix& x, int k, Rng& rng) {
  const int n = x.rows();
  Matrix centroids(k, x.cols());
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  int first = static_cast<int>(rng.below(static_cast<uint64_t>(n)));
  for (int j = 0; j < x.cols(); ++j) centroids.at(0, j) = x.at(first, j);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      min_d2[i] = std::fmin(min_d2[i], sq_dist(x, i, centroids, c - 1));
      total += min_d2[i];
    }
    int pick;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        acc += min_d2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<int>(rng.below(static_cast<uint64_t>(n)));
    }
    for (int j = 0; j < x.cols(); ++j) centroids.at(c, j) = x.at(pick, j);
  }
  return centroids;
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding. Empty clusters are repaired by
// stealing the point currently farthest from its own centroid. The recorded
// objective is non-increasing across iterations.
inline ClusterPartition kmeans(const Matrix& points, int k, Rng& rng,
                               int max_iter = 100, double tol = 1e-6) {
  const int n = points.rows();
  if (k < 1 || k > n)
    throw ConfigError("kmeans: k must lie in [1, n], got k=" + std::to_string(k) +
                      " for n=" + std::to_string(n));
  ClusterPartition part;
  part.num_clusters = k;
  part.centroids = detail::kmeanspp_seed(points, k, rng);
  part.assignments.assign(n, 0);
  std::vector<int> counts(k, 0);
  double prev_obj = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < max_iter; ++iter) {
    // assignment
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = detail::sq_dist(points, i, part.centroids, 0);
      for (int c = 1; c < k; ++c) {
        const double d = detail::sq_dist(points, i, part.centroids, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      part.assignments[i] = best;
      ++counts[best];
    }
    // repair empty clusters
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      int steal = -1;
      double worst = -1.0;
      for (int i = 0; i < n; ++i) {
        if (counts[part.assignments[i]] < 2) continue;
        const double d = detail::sq_dist(points, i, part.centroids, part.assignments[i]);
        if (d > worst) {
          worst = d;
          steal = i;
        }
      }
      if (steal < 0) continue;  // n == k edge, every cluster singleton
      --counts[part.assignments[steal]];
      part.assignments[steal] = c;
      ++counts[c];
      for (int j = 0; j < points.cols(); ++j)
        part.centroids.at(c, j) = points.at(steal, j);
    }
    // objective with current assignments and centroids
    double obj = 0.0;
    for (int i = 0; i < n; ++i)
      obj += detail::sq_dist(points, i, part.centroids, part.assignments[i]);
    part.objective_trace.push_back(obj);
    const bool converged =
        prev_obj - obj <= tol * std::fmax(prev_obj, 1e-300) && iter > 0;
    prev_obj = obj;
    if (converged) break;
    // centroid update
    Matrix sums(k, points.cols());
    for (int i = 0; i < n; ++i) {
      const int c = part.assignments[i];
      for (int j = 0; j < points.cols(); ++j) sums.at(c, j) += points.at(i, j);
    }
    for (int c = 0; c < k; ++c)
      for (int j = 0; j < points.cols(); ++j)
        part.centroids.at(c, j) = sums.at(c, j) / counts[c];
  }
  return part;
}

// Number of clusters is derived from the fixed cluster size.
inline int derive_cluster_count(int n_relevant, int cluster_size) {
  if (cluster_size < 1) throw ConfigError("cluster_size must be >= 1");
  return (n_relevant + cluster_size - 1) / cluster_size;
}

inline ClusterPartition cluster_relevant(const Matrix& features,
                                         const Matrix& positions01, double w1,
                                         int cluster_size, Rng& rng) {
  if (features.rows() < 1)
    throw ConfigError("cluster_relevant: need at least one relevant patch");
  const int k = derive_cluster_count(features.rows(), cluster_size);
  return kmeans(joint_embed(features, positions01, w1), k, rng);
}

}  // namespace scmil
