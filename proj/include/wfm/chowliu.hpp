// Feature co-occurrence statistics and the Chow-Liu dependence tree.
#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "wfm/featurize.hpp"

namespace wfm {

inline constexpr double kDefaultSmoothing = 0.5;

/// Counts of single features and feature pairs over a set of binary vectors,
/// with pseudo-count smoothing applied on read.
class FeatureStats {
 public:
  FeatureStats() = default;
  FeatureStats(Eigen::Index n_features, std::span<const std::vector<FeatureIndex>> samples, double alpha);

  Eigen::Index n_features() const { return counts_.size(); }
  std::size_t n_samples() const { return n_samples_; }
  double alpha() const { return alpha_; }

  int count(FeatureIndex q) const { return counts_[q]; }
  int co_count(FeatureIndex q, FeatureIndex v) const { return cooc_.coeff(q, v); }
  const Eigen::VectorXi& counts() const { return counts_; }
  /// Symmetric pair counts; the diagonal holds the single-feature counts.
  const Eigen::SparseMatrix<int>& co_occurrence() const { return cooc_; }

  /// (count + alpha) / (n + 2 alpha)
  double p1(FeatureIndex q) const;
  Eigen::VectorXd p1() const;
  /// (co_count + alpha) / (n + 4 alpha)
  double p11(FeatureIndex q, FeatureIndex v) const;
  /// Smoothed 2x2 joint, entry (a, b) = p(z_q = a, z_v = b). Every cell
  /// receives the same pseudo-count, so the table is a proper distribution;
  /// its (1, 1) cell equals p11(q, v).
  Eigen::Matrix2d pair_table(FeatureIndex q, FeatureIndex v) const;

 private:
  std::size_t n_samples_ = 0;
  double alpha_ = kDefaultSmoothing;
  Eigen::VectorXi counts_;
  Eigen::SparseMatrix<int> cooc_;
};

FeatureStats estimate_stats(std::span<const FeatureVector> vectors, double alpha = kDefaultSmoothing);
FeatureStats estimate_stats(Eigen::Index n_features, std::span<const std::vector<FeatureIndex>> samples,
                            double alpha = kDefaultSmoothing);

/// 2x2 table from raw counts, smoothed with `alpha` per cell.
Eigen::Matrix2d smoothed_pair_table(double n, double alpha, double count_q, double count_v, double count_qv);

/// Mutual information (nats) of a 2x2 joint distribution. Zero cells
/// contribute nothing.
template <typename Derived>
typename Derived::Scalar mutual_information(const Eigen::MatrixBase<Derived>& joint) {
  using Scalar = typename Derived::Scalar;
  static_assert(Derived::RowsAtCompileTime == 2 && Derived::ColsAtCompileTime == 2, "2x2 table expected");
  const Eigen::Matrix<Scalar, 2, 1> row = joint.rowwise().sum();
  const Eigen::Matrix<Scalar, 1, 2> col = joint.colwise().sum();
  Scalar info(0);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const Scalar p = joint(a, b);
      if (p > Scalar(0)) info += p * std::log(p / (row(a) * col(b)));
    }
  }
  return info;
}

/// Symmetric in (q, v) bit for bit: the table is always built with the lower
/// index as the row variable.
double mutual_information(const FeatureStats& stats, FeatureIndex q, FeatureIndex v);

struct SpanningForest {
  Eigen::VectorXi parent;             // -1 for roots
  std::vector<FeatureIndex> roots;    // ascending; lowest index of each component
  std::vector<std::pair<FeatureIndex, FeatureIndex>> edges;  // (min, max), insertion order
  double total_weight = 0.0;
};

/// Maximum-weight spanning forest by Prim's algorithm. Only strictly positive
/// edges are used. Equal weights are ordered by the (min, max) index pair, which
/// makes the result unique. `prepare(u)` runs once before the weights from a
/// newly attached vertex u are queried as `weight(min, max)`.
template <typename Prepare, typename Weight>
SpanningForest max_spanning_forest(Eigen::Index n, Prepare&& prepare, Weight&& weight) {
  SpanningForest forest;
  forest.parent = Eigen::VectorXi::Constant(n, -1);
  std::vector<char> in_tree(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd best_w = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
  Eigen::VectorXi best_from = Eigen::VectorXi::Constant(n, -1);

  const auto pair_of = [](Eigen::Index a, Eigen::Index b) {
    return std::pair<Eigen::Index, Eigen::Index>(std::min(a, b), std::max(a, b));
  };
  // Strict total order on edges: higher weight first, then lower index pair.
  const auto better = [&](double w, std::pair<Eigen::Index, Eigen::Index> e, double w_ref,
                          std::pair<Eigen::Index, Eigen::Index> e_ref) {
    if (w != w_ref) return w > w_ref;
    return e < e_ref;
  };

  const auto attach = [&](Eigen::Index u) {
    in_tree[static_cast<std::size_t>(u)] = 1;
    prepare(u);
    for (Eigen::Index v = 0; v < n; ++v) {
      if (in_tree[static_cast<std::size_t>(v)]) continue;
      const auto e = pair_of(u, v);
      const double w = weight(e.first, e.second);
      if (best_from[v] < 0 || better(w, e, best_w[v], pair_of(best_from[v], v))) {
        best_w[v] = w;
        best_from[v] = static_cast<int>(u);
      }
    }
  };

  Eigen::Index next_root = 0;
  Eigen::Index attached = 0;
  while (attached < n) {
    while (in_tree[static_cast<std::size_t>(next_root)]) ++next_root;
    forest.roots.push_back(static_cast<FeatureIndex>(next_root));
    attach(next_root);
    ++attached;
    while (true) {
      Eigen::Index pick = -1;
      for (Eigen::Index v = 0; v < n; ++v) {
        if (in_tree[static_cast<std::size_t>(v)] || best_from[v] < 0 || !(best_w[v] > 0.0)) continue;
        if (pick < 0 || better(best_w[v], pair_of(best_from[v], v), best_w[pick], pair_of(best_from[pick], pick)))
          pick = v;
      }
      if (pick < 0) break;
      forest.parent[pick] = best_from[pick];
      forest.edges.emplace_back(static_cast<FeatureIndex>(std::min<Eigen::Index>(pick, best_from[pick])),
                                static_cast<FeatureIndex>(std::max<Eigen::Index>(pick, best_from[pick])));
      forest.total_weight += best_w[pick];
      attach(pick);
      ++attached;
    }
  }
  return forest;
}

/// Dense symmetric weight matrix variant (upper triangle is read).
SpanningForest max_spanning_forest(const Eigen::MatrixXd& weights);

/// Tree-structured approximation of the feature distribution. Each feature
/// has at most one parent; a forest is possible when some features share no
/// positive-information edge with the rest.
struct ChowLiuTree {
  Eigen::VectorXi parent;             // -1 for roots
  std::vector<FeatureIndex> roots;
  Eigen::VectorXd marginal;           // p(z_q = 1)
  /// Row q: p(z_q=0|z_p=0), p(z_q=1|z_p=0), p(z_q=0|z_p=1), p(z_q=1|z_p=1).
  /// Root rows repeat the marginal.
  Eigen::Matrix<double, Eigen::Dynamic, 4> cond;
  double total_weight = 0.0;  // sum of edge mutual information

  Eigen::Index size() const { return parent.size(); }
  bool is_root(FeatureIndex q) const { return parent[q] < 0; }
  double conditional(FeatureIndex q, bool z_q, bool z_parent) const {
    return cond(q, (z_parent ? 2 : 0) + (z_q ? 1 : 0));
  }
  std::vector<std::vector<FeatureIndex>> children() const;

  /// Throws std::logic_error when the structure or the tables are invalid.
  void validate() const;
};

ChowLiuTree build_tree(const FeatureStats& stats);

/// Tree with a given forest structure and tables estimated from `stats`.
ChowLiuTree tree_from_structure(const FeatureStats& stats, const SpanningForest& forest);

/// log p(z) under the tree.
double tree_log_joint(const ChowLiuTree& tree, const FeatureVector& z);
double tree_joint(const ChowLiuTree& tree, const FeatureVector& z);

}  // namespace wfm
