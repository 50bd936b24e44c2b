// Place recognition over a database of known places.
//
// Every database entry is one recorded scan. Its per-feature existence
// belief is p(e_q = 1 | z*_q) obtained by Bayes from the tree marginal and the
// detector model, so beliefs take one of two values per feature depending on
// whether the defining scan observed that feature. A query Z is scored by
//
//   log p(Z | L) = sum_q log sum_s p(z_q | e_q = s, z_parent) p(e_q = s | L)
//
// with p(z_q | e_q, z_p) proportional to p(z_q | e_q) p(z_q | z_p) / p(z_q).
#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "wfm/chowliu.hpp"
#include "wfm/cluster.hpp"
#include "wfm/dataset.hpp"
#include "wfm/featurize.hpp"

namespace wfm {

/// pzge = p(z = 1 | e = 0), pzgne = p(z = 0 | e = 1).
struct DetectorModel {
  double pzge = 0.4916;
  double pzgne = 0.0055;

  void validate() const;
  double p_detect(bool exists) const { return exists ? 1.0 - pzgne : pzge; }
  double p_z_given_e(bool z, bool exists) const { return z ? p_detect(exists) : 1.0 - p_detect(exists); }

  friend bool operator==(const DetectorModel&, const DetectorModel&) = default;
};

/// p(e = 1 | z) for a single feature with prior p(e = 1) = `prior`.
double place_belief(bool observed, double prior, const DetectorModel& detector);

/// Dense belief vector for a place defined by `observation`.
Eigen::VectorXd init_place(const FeatureVector& observation, const ChowLiuTree& tree, const DetectorModel& detector);

/// p(z_q | e_q = exists, z_parent) under the detector-tree coupling. For roots
/// `z_parent` is ignored and the result is the detector term alone.
double coupled_probability(const ChowLiuTree& tree, const DetectorModel& detector, FeatureIndex q, bool z_q,
                           bool exists, bool z_parent);

/// log p(Z | L) for an arbitrary belief vector, evaluated feature by feature.
double observation_log_likelihood(const Eigen::VectorXd& belief, const FeatureVector& z, const ChowLiuTree& tree,
                                  const DetectorModel& detector);

struct PlaceEntry {
  std::vector<FeatureIndex> observed;  // set bits of the defining scan, ascending
  GroundTruth label;
  std::size_t source_record = 0;
};

/// Detector-independent part of a database: which entry observed which
/// feature, plus the tree's child lists.
class PlaceIndex {
 public:
  PlaceIndex(const ChowLiuTree& tree, std::span<const PlaceEntry> entries);

  std::size_t entry_count() const { return static_cast<std::size_t>(incidence_.rows()); }
  Eigen::Index feature_count() const { return incidence_.cols(); }
  /// entries x features, 1.0 where the entry's defining scan set the bit.
  const Eigen::SparseMatrix<double>& incidence() const { return incidence_; }
  const std::vector<std::vector<FeatureIndex>>& children() const { return children_; }
  const Eigen::VectorXi& parent() const { return parent_; }

  /// Features whose (z_q, z_parent) is not (0, 0) for a query with these set
  /// bits, ascending.
  std::vector<FeatureIndex> touched_features(std::span<const FeatureIndex> active) const;

 private:
  Eigen::SparseMatrix<double> incidence_;
  std::vector<std::vector<FeatureIndex>> children_;
  Eigen::VectorXi parent_;
};

/// Detector-dependent log-likelihood tables and the fast scoring path.
///
/// Scores are split as log p(Z | L_e) = offset(Z) + relative(Z)_e, where the
/// offset is shared by all entries. Only the relative part is needed for
/// ranking and posteriors.
class PlaceScorer {
 public:
  PlaceScorer(const ChowLiuTree& tree, const DetectorModel& detector, std::shared_ptr<const PlaceIndex> index);

  const Eigen::VectorXd& belief_observed() const { return belief_observed_; }
  const Eigen::VectorXd& belief_unobserved() const { return belief_unobserved_; }

  /// log p(z_q | z_p, L) for a place whose defining scan had bit q = observed.
  double log_term(FeatureIndex q, bool observed, bool z_q, bool z_parent) const {
    return log_terms_(q, (observed ? 4 : 0) + (z_parent ? 2 : 0) + (z_q ? 1 : 0));
  }

  /// Change of an observing entry's relative score when feature q sees
  /// (z_q, z_parent) instead of (0, 0).
  double correction(FeatureIndex q, bool z_q, bool z_parent) const {
    return (log_term(q, true, z_q, z_parent) - log_term(q, false, z_q, z_parent)) -
           (log_terms_(q, 4) - log_terms_(q, 0));
  }
  /// Relative scores of the all-zero query.
  const Eigen::VectorXd& entry_offset() const { return entry_offset_; }
  Eigen::VectorXd relative_scores(std::span<const FeatureIndex> active) const;
  double offset(std::span<const FeatureIndex> active) const;

 private:
  std::shared_ptr<const PlaceIndex> index_;
  Eigen::VectorXd belief_observed_;
  Eigen::VectorXd belief_unobserved_;
  Eigen::Matrix<double, Eigen::Dynamic, 8> log_terms_;
  double base_unobserved_all_zero_ = 0.0;  // sum_q log_term(q, false, 0, 0)
  Eigen::VectorXd entry_offset_;           // sum over observed q of the (0, 0) delta
};

class PlaceDatabase {
 public:
  PlaceDatabase(ApRegistry registry, BinningConfig config, ChowLiuTree tree, DetectorModel detector,
                std::vector<PlaceEntry> entries);

  const ApRegistry& registry() const { return registry_; }
  const BinningConfig& config() const { return config_; }
  const ChowLiuTree& tree() const { return tree_; }
  const DetectorModel& detector() const { return detector_; }
  const std::vector<PlaceEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  Eigen::Index feature_count() const { return tree_.size(); }
  const PlaceScorer& scorer() const { return scorer_; }
  const std::shared_ptr<const PlaceIndex>& index() const { return index_; }

  /// Swaps the detector model; entries and tree are kept.
  void set_detector(const DetectorModel& detector);

  /// Dense belief vector of one entry.
  Eigen::VectorXd belief(std::size_t entry) const;

 private:
  ApRegistry registry_;
  BinningConfig config_;
  ChowLiuTree tree_;
  DetectorModel detector_;
  std::vector<PlaceEntry> entries_;
  std::shared_ptr<const PlaceIndex> index_;
  PlaceScorer scorer_;
};

/// Reference evaluation of log p(Z | L) for one entry.
double observation_likelihood(const PlaceDatabase& db, std::size_t entry, const FeatureVector& z);

struct MatchResult {
  /// (entry index, posterior), descending posterior; ties by lower index.
  std::vector<std::pair<std::size_t, double>> ranked;
  GroundTruth predicted;

  std::size_t best_entry() const { return ranked.front().first; }
};

/// Index of the highest score; the lowest index wins ties.
std::size_t best_index(const Eigen::VectorXd& scores);

MatchResult match_features(std::span<const FeatureIndex> active, const PlaceDatabase& db);
MatchResult match(const WifiScan& scan, const PlaceDatabase& db);

/// One entry per listed record, in the given order.
PlaceDatabase build_place_database(std::span<const std::size_t> records, const Dataset& dataset, ChowLiuTree tree,
                                   const DetectorModel& detector, const BinningConfig& config);
PlaceDatabase build_place_database(const SplitResult& split, const Dataset& dataset, ChowLiuTree tree,
                                   const DetectorModel& detector, const BinningConfig& config);

/// CSV `query_index,entry_index,posterior,pred_building,pred_floor,pred_lon,pred_lat`,
/// one row per reported rank (at most `top_k` per query).
void write_match_result_header(std::ostream& out);
void write_match_result(std::ostream& out, std::size_t query_index, const MatchResult& result,
                        const PlaceDatabase& db, std::size_t top_k);

}  // namespace wfm
