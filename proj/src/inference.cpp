#include "wfm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "wfm/math.hpp"

namespace wfm {

void DetectorModel::validate() const {
  if (!(pzge > 0.0 && pzge < 1.0)) throw std::invalid_argument("PzGe must lie in (0, 1)");
  if (!(pzgne > 0.0 && pzgne < 1.0)) throw std::invalid_argument("PzGne must lie in (0, 1)");
}

double place_belief(bool observed, double prior, const DetectorModel& detector) {
  const double present = detector.p_z_given_e(observed, true) * prior;
  const double absent = detector.p_z_given_e(observed, false) * (1.0 - prior);
  return present / (present + absent);
}

Eigen::VectorXd init_place(const FeatureVector& observation, const ChowLiuTree& tree, const DetectorModel& detector) {
  if (observation.size() != tree.size()) throw std::invalid_argument("observation length does not match tree");
  Eigen::VectorXd belief(tree.size());
  for (Eigen::Index q = 0; q < tree.size(); ++q) belief[q] = place_belief(observation[q], tree.marginal[q], detector);
  return belief;
}

double coupled_probability(const ChowLiuTree& tree, const DetectorModel& detector, FeatureIndex q, bool z_q,
                           bool exists, bool z_parent) {
  if (tree.is_root(q)) return detector.p_z_given_e(z_q, exists);
  const double m = tree.marginal[q];
  const auto term = [&](bool z) {
    return detector.p_z_given_e(z, exists) * tree.conditional(q, z, z_parent) / (z ? m : 1.0 - m);
  };
  const double hit = term(z_q);
  const double norm = hit + term(!z_q);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw std::domain_error("degenerate normalizer in detector-tree coupling at feature " + std::to_string(q));
  }
  return hit / norm;
}

namespace {

double mixed_log_term(const ChowLiuTree& tree, const DetectorModel& detector, FeatureIndex q, double belief,
                      bool z_q, bool z_parent) {
  return std::log(coupled_probability(tree, detector, q, z_q, true, z_parent) * belief +
                  coupled_probability(tree, detector, q, z_q, false, z_parent) * (1.0 - belief));
}

void check_active(std::span<const FeatureIndex> active, Eigen::Index n_features) {
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (active[i] < 0 || active[i] >= n_features) throw std::out_of_range("query feature index out of range");
    if (i > 0 && active[i] <= active[i - 1]) throw std::invalid_argument("query features must be strictly ascending");
  }
}

bool has(std::span<const FeatureIndex> sorted, FeatureIndex q) {
  return std::binary_search(sorted.begin(), sorted.end(), q);
}

}  // namespace

double observation_log_likelihood(const Eigen::VectorXd& belief, const FeatureVector& z, const ChowLiuTree& tree,
                                  const DetectorModel& detector) {
  if (z.size() != tree.size() || belief.size() != tree.size()) {
    throw std::invalid_argument("observation length does not match tree");
  }
  double lp = 0.0;
  for (Eigen::Index q = 0; q < tree.size(); ++q) {
    const int p = tree.parent[q];
    lp += mixed_log_term(tree, detector, static_cast<FeatureIndex>(q), belief[q], z[q], p >= 0 && z[p]);
  }
  return lp;
}

PlaceIndex::PlaceIndex(const ChowLiuTree& tree, std::span<const PlaceEntry> entries)
    : children_(tree.children()), parent_(tree.parent) {
  const Eigen::Index n = tree.size();
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    check_active(entries[e].observed, n);
    for (const auto q : entries[e].observed) triplets.emplace_back(static_cast<int>(e), q, 1.0);
  }
  incidence_.resize(static_cast<Eigen::Index>(entries.size()), n);
  incidence_.setFromTriplets(triplets.begin(), triplets.end());
  incidence_.makeCompressed();
}

std::vector<FeatureIndex> PlaceIndex::touched_features(std::span<const FeatureIndex> active) const {
  std::vector<FeatureIndex> out(active.begin(), active.end());
  for (const auto q : active) {
    const auto& c = children_[static_cast<std::size_t>(q)];
    out.insert(out.end(), c.begin(), c.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

PlaceScorer::PlaceScorer(const ChowLiuTree& tree, const DetectorModel& detector,
                         std::shared_ptr<const PlaceIndex> index)
    : index_(std::move(index)) {
  detector.validate();
  const Eigen::Index n = tree.size();
  if (index_->feature_count() != n) throw std::invalid_argument("place index does not match tree");

  belief_observed_.resize(n);
  belief_unobserved_.resize(n);
  log_terms_.resize(n, 8);
  for (Eigen::Index qi = 0; qi < n; ++qi) {
    const auto q = static_cast<FeatureIndex>(qi);
    belief_observed_[q] = place_belief(true, tree.marginal[q], detector);
    belief_unobserved_[q] = place_belief(false, tree.marginal[q], detector);
    for (int slot = 0; slot < 8; ++slot) {
      const bool observed = slot & 4;
      const bool z_parent = (slot & 2) && !tree.is_root(q);
      const bool z_q = slot & 1;
      const double b = observed ? belief_observed_[q] : belief_unobserved_[q];
      log_terms_(q, slot) = mixed_log_term(tree, detector, q, b, z_q, z_parent);
    }
  }
  base_unobserved_all_zero_ = log_terms_.col(0).sum();
  const Eigen::VectorXd delta_zero = log_terms_.col(4) - log_terms_.col(0);
  entry_offset_ = index_->incidence() * delta_zero;
}

Eigen::VectorXd PlaceScorer::relative_scores(std::span<const FeatureIndex> active) const {
  check_active(active, index_->feature_count());
  Eigen::VectorXd scores = entry_offset_;
  const auto& incidence = index_->incidence();
  const auto& parent = index_->parent();
  for (const auto q : index_->touched_features(active)) {
    const bool z_q = has(active, q);
    const bool z_p = parent[q] >= 0 && has(active, parent[q]);
    const double c = correction(q, z_q, z_p);
    if (c == 0.0) continue;
    for (Eigen::SparseMatrix<double>::InnerIterator it(incidence, q); it; ++it) scores[it.row()] += c;
  }
  return scores;
}

double PlaceScorer::offset(std::span<const FeatureIndex> active) const {
  check_active(active, index_->feature_count());
  const auto& parent = index_->parent();
  double total = base_unobserved_all_zero_;
  for (const auto q : index_->touched_features(active)) {
    const bool z_q = has(active, q);
    const bool z_p = parent[q] >= 0 && has(active, parent[q]);
    total += log_term(q, false, z_q, z_p) - log_terms_(q, 0);
  }
  return total;
}

namespace {

ChowLiuTree check_layout(ChowLiuTree tree, const ApRegistry& registry, const BinningConfig& config) {
  if (static_cast<std::size_t>(tree.size()) != feature_count(registry, config)) {
    throw std::invalid_argument("tree has " + std::to_string(tree.size()) + " features but the registry and " +
                                "binning define " + std::to_string(feature_count(registry, config)));
  }
  return tree;
}

}  // namespace

PlaceDatabase::PlaceDatabase(ApRegistry registry, BinningConfig config, ChowLiuTree tree, DetectorModel detector,
                             std::vector<PlaceEntry> entries)
    : registry_(std::move(registry)),
      config_(std::move(config)),
      tree_(check_layout(std::move(tree), registry_, config_)),
      detector_(detector),
      entries_(std::move(entries)),
      index_(std::make_shared<const PlaceIndex>(tree_, entries_)),
      scorer_(tree_, detector_, index_) {}

void PlaceDatabase::set_detector(const DetectorModel& detector) {
  scorer_ = PlaceScorer(tree_, detector, index_);
  detector_ = detector;
}

Eigen::VectorXd PlaceDatabase::belief(std::size_t entry) const {
  Eigen::VectorXd b = scorer_.belief_unobserved();
  for (const auto q : entries_.at(entry).observed) b[q] = scorer_.belief_observed()[q];
  return b;
}

double observation_likelihood(const PlaceDatabase& db, std::size_t entry, const FeatureVector& z) {
  return observation_log_likelihood(db.belief(entry), z, db.tree(), db.detector());
}

std::size_t best_index(const Eigen::VectorXd& scores) {
  if (scores.size() == 0) throw std::invalid_argument("no scores");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return static_cast<std::size_t>(best);
}

MatchResult match_features(std::span<const FeatureIndex> active, const PlaceDatabase& db) {
  if (db.empty()) throw std::invalid_argument("cannot match against an empty place database");
  const Eigen::VectorXd scores = db.scorer().relative_scores(active);
  const double norm = log_sum_exp(scores);
  std::vector<std::size_t> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[static_cast<Eigen::Index>(a)] > scores[static_cast<Eigen::Index>(b)];
  });
  MatchResult result;
  result.ranked.reserve(order.size());
  for (const auto e : order) result.ranked.emplace_back(e, std::exp(scores[static_cast<Eigen::Index>(e)] - norm));
  result.predicted = db.entries()[order.front()].label;
  return result;
}

MatchResult match(const WifiScan& scan, const PlaceDatabase& db) {
  return match_features(active_features(scan, db.registry(), db.config()), db);
}

PlaceDatabase build_place_database(std::span<const std::size_t> records, const Dataset& dataset, ChowLiuTree tree,
                                   const DetectorModel& detector, const BinningConfig& config) {
  std::vector<PlaceEntry> entries;
  entries.reserve(records.size());
  for (const auto r : records) {
    const Record& rec = dataset.records.at(r);
    entries.push_back({active_features(rec.scan, dataset.registry, config), rec.truth, r});
  }
  return PlaceDatabase(dataset.registry, config, std::move(tree), detector, std::move(entries));
}

PlaceDatabase build_place_database(const SplitResult& split, const Dataset& dataset, ChowLiuTree tree,
                                   const DetectorModel& detector, const BinningConfig& config) {
  const auto records = split.flat_place_db_scans();
  return build_place_database(records, dataset, std::move(tree), detector, config);
}

void write_match_result_header(std::ostream& out) {
  out << "query_index,entry_index,posterior,pred_building,pred_floor,pred_lon,pred_lat\n";
}

void write_match_result(std::ostream& out, std::size_t query_index, const MatchResult& result,
                        const PlaceDatabase& db, std::size_t top_k) {
  const std::size_t n = std::min(top_k, result.ranked.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [entry, posterior] = result.ranked[i];
    const auto& label = db.entries()[entry].label;
    out << query_index << ',' << entry << ',' << format_number(posterior) << ',' << label.building_id << ','
        << label.floor << ',' << format_number(label.longitude) << ',' << format_number(label.latitude) << '\n';
  }
}

}  // namespace wfm
