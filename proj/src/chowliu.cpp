#include "wfm/chowliu.hpp"

#include <cmath>

namespace wfm {

FeatureStats::FeatureStats(Eigen::Index n_features, std::span<const std::vector<FeatureIndex>> samples,
                           double alpha)
    : n_samples_(samples.size()), alpha_(alpha) {
  if (samples.empty()) throw std::invalid_argument("feature statistics need at least one sample");
  if (!(alpha >= 0.0)) throw std::invalid_argument("smoothing alpha must be non-negative");

  std::vector<Eigen::Triplet<int>> triplets;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    for (const auto q : samples[s]) {
      if (q < 0 || q >= n_features) throw std::out_of_range("sample references feature outside layout");
      triplets.emplace_back(static_cast<int>(s), q, 1);
    }
  }
  Eigen::SparseMatrix<int> x(static_cast<Eigen::Index>(samples.size()), n_features);
  x.setFromTriplets(triplets.begin(), triplets.end());
  if ((x.coeffs().array() > 1).any()) throw std::invalid_argument("sample lists a feature twice");
  cooc_ = Eigen::SparseMatrix<int>(x.transpose() * x);
  cooc_.makeCompressed();
  counts_ = cooc_.diagonal();
}

double FeatureStats::p1(FeatureIndex q) const {
  return (counts_[q] + alpha_) / (static_cast<double>(n_samples_) + 2.0 * alpha_);
}

Eigen::VectorXd FeatureStats::p1() const {
  return (counts_.cast<double>().array() + alpha_) / (static_cast<double>(n_samples_) + 2.0 * alpha_);
}

double FeatureStats::p11(FeatureIndex q, FeatureIndex v) const {
  return (co_count(q, v) + alpha_) / (static_cast<double>(n_samples_) + 4.0 * alpha_);
}

Eigen::Matrix2d smoothed_pair_table(double n, double alpha, double count_q, double count_v, double count_qv) {
  Eigen::Matrix2d counts;
  counts << n - count_q - count_v + count_qv, count_v - count_qv, count_q - count_qv, count_qv;
  return (counts.array() + alpha) / (n + 4.0 * alpha);
}

Eigen::Matrix2d FeatureStats::pair_table(FeatureIndex q, FeatureIndex v) const {
  return smoothed_pair_table(static_cast<double>(n_samples_), alpha_, counts_[q], counts_[v], co_count(q, v));
}

FeatureStats estimate_stats(std::span<const FeatureVector> vectors, double alpha) {
  if (vectors.empty()) throw std::invalid_argument("feature statistics need at least one sample");
  const Eigen::Index n = vectors.front().size();
  std::vector<std::vector<FeatureIndex>> samples;
  samples.reserve(vectors.size());
  for (const auto& v : vectors) {
    if (v.size() != n) throw std::invalid_argument("feature vectors differ in length");
    samples.push_back(v.active());
  }
  return FeatureStats(n, samples, alpha);
}

FeatureStats estimate_stats(Eigen::Index n_features, std::span<const std::vector<FeatureIndex>> samples,
                            double alpha) {
  return FeatureStats(n_features, samples, alpha);
}

double mutual_information(const FeatureStats& stats, FeatureIndex q, FeatureIndex v) {
  if (q == v) throw std::invalid_argument("mutual information needs two distinct features");
  if (q > v) std::swap(q, v);
  return mutual_information(stats.pair_table(q, v));
}

SpanningForest max_spanning_forest(const Eigen::MatrixXd& weights) {
  if (weights.rows() != weights.cols()) throw std::invalid_argument("weight matrix must be square");
  return max_spanning_forest(
      weights.rows(), [](Eigen::Index) {}, [&](Eigen::Index a, Eigen::Index b) { return weights(a, b); });
}

std::vector<std::vector<FeatureIndex>> ChowLiuTree::children() const {
  std::vector<std::vector<FeatureIndex>> out(static_cast<std::size_t>(size()));
  for (Eigen::Index q = 0; q < size(); ++q) {
    if (parent[q] >= 0) out[static_cast<std::size_t>(parent[q])].push_back(static_cast<FeatureIndex>(q));
  }
  return out;
}

void ChowLiuTree::validate() const {
  const Eigen::Index n = size();
  if (marginal.size() != n || cond.rows() != n) throw std::logic_error("tree tables do not match feature count");
  std::vector<char> is_listed_root(static_cast<std::size_t>(n), 0);
  for (const auto r : roots) {
    if (r < 0 || r >= n || parent[r] >= 0) throw std::logic_error("invalid root list");
    is_listed_root[static_cast<std::size_t>(r)] = 1;
  }
  for (Eigen::Index q = 0; q < n; ++q) {
    if (parent[q] < 0 && !is_listed_root[static_cast<std::size_t>(q)]) throw std::logic_error("unlisted root");
    if (parent[q] >= n) throw std::logic_error("parent index out of range");
    // Walk up; a path longer than n means a cycle.
    Eigen::Index steps = 0;
    for (Eigen::Index a = q; parent[a] >= 0; a = parent[a]) {
      if (++steps > n) throw std::logic_error("parent structure contains a cycle");
    }
    if (!(marginal[q] >= 0.0 && marginal[q] <= 1.0)) throw std::logic_error("marginal outside [0, 1]");
    for (int b = 0; b < 2; ++b) {
      if (std::abs(cond(q, 2 * b) + cond(q, 2 * b + 1) - 1.0) > 1e-12)
        throw std::logic_error("conditional table row does not sum to 1");
    }
  }
}

ChowLiuTree tree_from_structure(const FeatureStats& stats, const SpanningForest& forest) {
  const Eigen::Index n = stats.n_features();
  if (forest.parent.size() != n) throw std::invalid_argument("forest does not match feature count");
  ChowLiuTree tree;
  tree.parent = forest.parent;
  tree.roots = forest.roots;
  tree.total_weight = forest.total_weight;
  tree.marginal = stats.p1();
  tree.cond.resize(n, 4);
  for (Eigen::Index q = 0; q < n; ++q) {
    const double m = tree.marginal[q];
    const int p = tree.parent[q];
    if (p < 0) {
      tree.cond.row(q) << 1.0 - m, m, 1.0 - m, m;
      continue;
    }
    const Eigen::Matrix2d joint = stats.pair_table(static_cast<FeatureIndex>(q), p);
    for (int b = 0; b < 2; ++b) {
      const double col = joint(0, b) + joint(1, b);
      if (col > 0.0) {
        tree.cond(q, 2 * b) = joint(0, b) / col;
        tree.cond(q, 2 * b + 1) = joint(1, b) / col;
      } else {
        // Parent value never observed (only without smoothing).
        tree.cond(q, 2 * b) = 1.0 - m;
        tree.cond(q, 2 * b + 1) = m;
      }
    }
  }
  return tree;
}

ChowLiuTree build_tree(const FeatureStats& stats) {
  const Eigen::Index n = stats.n_features();
  if (n < 1) throw std::invalid_argument("cannot build a tree over zero features");
  const double samples = static_cast<double>(stats.n_samples());
  const double alpha = stats.alpha();
  const Eigen::VectorXi& counts = stats.counts();
  const Eigen::SparseMatrix<int>& cooc = stats.co_occurrence();

  // Pair counts of the most recently attached vertex, scattered densely.
  Eigen::VectorXi row = Eigen::VectorXi::Zero(n);
  std::vector<Eigen::Index> touched;
  const auto prepare = [&](Eigen::Index u) {
    for (const auto i : touched) row[i] = 0;
    touched.clear();
    for (Eigen::SparseMatrix<int>::InnerIterator it(cooc, u); it; ++it) {
      row[it.row()] = it.value();
      touched.push_back(it.row());
    }
  };
  Eigen::Index current = -1;
  const auto prepare_tracked = [&](Eigen::Index u) {
    current = u;
    prepare(u);
  };
  // One endpoint is always the vertex passed to prepare(); weights go through
  // the same table construction as mutual_information(stats, lo, hi).
  const auto pair_weight = [&](Eigen::Index lo, Eigen::Index hi) {
    const Eigen::Index other = lo == current ? hi : lo;
    const Eigen::Matrix2d joint = smoothed_pair_table(samples, alpha, counts[lo], counts[hi], row[other]);
    return mutual_information(joint);
  };

  const SpanningForest forest = max_spanning_forest(n, prepare_tracked, pair_weight);
  return tree_from_structure(stats, forest);
}

double tree_log_joint(const ChowLiuTree& tree, const FeatureVector& z) {
  if (z.size() != tree.size()) throw std::invalid_argument("assignment length does not match tree");
  double lp = 0.0;
  for (Eigen::Index q = 0; q < tree.size(); ++q) {
    const int p = tree.parent[q];
    const bool zp = p >= 0 && z[p];
    lp += std::log(tree.conditional(static_cast<FeatureIndex>(q), z[q], zp));
  }
  return lp;
}

double tree_joint(const ChowLiuTree& tree, const FeatureVector& z) { return std::exp(tree_log_joint(tree, z)); }

}  // namespace wfm
