#include "wfm/tune.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "wfm/cluster.hpp"
#include "wfm/eval.hpp"
#include "wfm/parallel.hpp"

namespace wfm {

void GridSpec::validate() const {
  if (!(log_step > 0.0)) throw std::invalid_argument("grid step must be positive");
  if (!(pzge_log_start >= pzge_log_end)) throw std::invalid_argument("PzGe grid start must not be below its end");
  if (!(pzgne_log_start >= pzgne_log_end)) throw std::invalid_argument("PzGne grid start must not be below its end");
  if (pzge_log_start >= 0.0 || pzgne_log_start >= 0.0) throw std::invalid_argument("grid exponents must be negative");
}

std::vector<double> grid_exponents(double start, double end, double step) {
  std::vector<double> out;
  for (std::size_t k = 0;; ++k) {
    const double e = start - static_cast<double>(k) * step;
    if (e < end - 1e-12) break;
    out.push_back(e);
  }
  return out;
}

namespace {

std::vector<double> exp_all(std::vector<double> v) {
  for (auto& x : v) x = std::exp(x);
  return v;
}

}  // namespace

std::vector<double> GridSpec::pzge_values() const {
  return exp_all(grid_exponents(pzge_log_start, pzge_log_end, log_step));
}

std::vector<double> GridSpec::pzgne_values() const {
  return exp_all(grid_exponents(pzgne_log_start, pzgne_log_end, log_step));
}

ValidationSplit split_for_validation(const std::vector<std::vector<std::size_t>>& place_db_scans, std::uint64_t seed,
                                     double subtraining_fraction) {
  if (!(subtraining_fraction > 0.0 && subtraining_fraction < 1.0)) {
    throw std::invalid_argument("subtraining fraction must lie in (0, 1)");
  }
  ValidationSplit out;
  SeededRng rng(seed);
  for (auto scans : place_db_scans) {
    const std::size_t k = scans.size();
    if (k < 2) {
      out.subtraining.insert(out.subtraining.end(), scans.begin(), scans.end());
      continue;
    }
    rng.partial_shuffle(scans, k);
    const auto wanted = static_cast<std::size_t>(std::llround(subtraining_fraction * static_cast<double>(k)));
    const std::size_t n_sub = std::clamp<std::size_t>(wanted, 1, k - 1);
    out.subtraining.insert(out.subtraining.end(), scans.begin(), scans.begin() + static_cast<std::ptrdiff_t>(n_sub));
    out.validation.insert(out.validation.end(), scans.begin() + static_cast<std::ptrdiff_t>(n_sub), scans.end());
  }
  return out;
}

QuerySet QuerySet::from_records(std::span<const std::size_t> records, const Dataset& dataset,
                                const BinningConfig& config) {
  QuerySet q;
  q.active.reserve(records.size());
  q.truths.reserve(records.size());
  for (const auto r : records) {
    const Record& rec = dataset.records.at(r);
    q.active.push_back(active_features(rec.scan, dataset.registry, config));
    q.truths.push_back(rec.truth);
  }
  return q;
}

namespace {

constexpr std::size_t kGridBlock = 64;

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Scores validation queries against a place database for many detector
// settings at once.
//
// For a fixed query, feature q contributes correction c_q to every entry that
// observed it, and c_q is zero unless q is touched by the query. An entry's
// observed features form runs of consecutive indices (one per network for
// featurized scans), so its score is offset_e plus, per run, a difference of
// prefix sums of c over the touched features. Runs are listed per network and
// only networks holding touched features are visited.
class BlockScorer {
 public:
  BlockScorer(const PlaceDatabase& db, const QuerySet& queries)
      : db_(db), queries_(queries), bins_(static_cast<FeatureIndex>(db.config().bins_per_network())) {
    if (queries.size() == 0) throw std::invalid_argument("validation set is empty");
    if (db.empty()) throw std::invalid_argument("place database is empty");
    runs_.resize(db.registry().size());
    for (std::size_t e = 0; e < db.size(); ++e) {
      const auto& obs = db.entries()[e].observed;
      for (std::size_t i = 0; i < obs.size();) {
        const FeatureIndex network = obs[i] / bins_;
        std::size_t j = i + 1;
        while (j < obs.size() && obs[j] == obs[j - 1] + 1 && obs[j] / bins_ == network) ++j;
        runs_[static_cast<std::size_t>(network)].push_back({e, obs[i], obs[j - 1] + 1});
        i = j;
      }
    }
    const auto& index = *db.index();
    const auto& parent = index.parent();
    std::vector<char> is_active(static_cast<std::size_t>(db.feature_count()), 0);
    prepared_.reserve(queries.size());
    for (const auto& active : queries.active) {
      Prepared p;
      for (const auto q : active) is_active[static_cast<std::size_t>(q)] = 1;
      p.touched = index.touched_features(active);
      for (const auto q : p.touched) {
        const bool z_q = is_active[static_cast<std::size_t>(q)];
        const bool z_p = parent[q] >= 0 && is_active[static_cast<std::size_t>(parent[q])];
        p.slot.push_back(4 * static_cast<Eigen::Index>(q) + (z_p ? 2 : 0) + (z_q ? 1 : 0));
        if (p.networks.empty() || p.networks.back() != q / bins_) p.networks.push_back(q / bins_);
      }
      for (const auto q : active) is_active[static_cast<std::size_t>(q)] = 0;
      prepared_.push_back(std::move(p));
    }
  }

  /// Number of correctly placed queries for each detector setting.
  std::vector<std::size_t> correct_counts(std::span<const DetectorModel> detectors) const {
    const auto g = static_cast<Eigen::Index>(detectors.size());
    const Eigen::Index n = db_.feature_count();
    const auto n_entries = static_cast<Eigen::Index>(db_.size());
    RowMajorMatrix offset(n_entries, g);
    RowMajorMatrix corr(4 * n, g);  // row 4q + 2 z_parent + z_q
    for (Eigen::Index k = 0; k < g; ++k) {
      const PlaceScorer scorer(db_.tree(), detectors[static_cast<std::size_t>(k)], db_.index());
      offset.col(k) = scorer.entry_offset();
      for (Eigen::Index q = 0; q < n; ++q) {
        for (int slot = 0; slot < 4; ++slot) {
          corr(4 * q + slot, k) = scorer.correction(static_cast<FeatureIndex>(q), slot & 1, slot & 2);
        }
      }
    }

    RowMajorMatrix scores(n_entries, g);
    RowMajorMatrix prefix;
    Eigen::VectorXd best_value(g);
    std::vector<Eigen::Index> best_entry(static_cast<std::size_t>(g));
    std::vector<std::size_t> correct(static_cast<std::size_t>(g), 0);
    for (std::size_t i = 0; i < prepared_.size(); ++i) {
      const Prepared& p = prepared_[i];
      const auto t = static_cast<Eigen::Index>(p.touched.size());
      prefix.resize(t + 1, g);
      prefix.row(0).setZero();
      for (Eigen::Index r = 0; r < t; ++r) prefix.row(r + 1) = prefix.row(r) + corr.row(p.slot[static_cast<std::size_t>(r)]);

      scores = offset;
      const auto rank = [&](FeatureIndex q) {
        return static_cast<Eigen::Index>(std::lower_bound(p.touched.begin(), p.touched.end(), q) - p.touched.begin());
      };
      for (const auto network : p.networks) {
        for (const Run& run : runs_[static_cast<std::size_t>(network)]) {
          const Eigen::Index lo = rank(run.begin);
          const Eigen::Index hi = rank(run.end);
          if (lo == hi) continue;
          scores.row(static_cast<Eigen::Index>(run.entry)) += prefix.row(hi) - prefix.row(lo);
        }
      }

      // Column-wise argmax; the lowest entry index wins ties.
      best_value = scores.row(0).transpose();
      std::fill(best_entry.begin(), best_entry.end(), 0);
      for (Eigen::Index e = 1; e < n_entries; ++e) {
        for (Eigen::Index k = 0; k < g; ++k) {
          if (scores(e, k) > best_value[k]) {
            best_value[k] = scores(e, k);
            best_entry[static_cast<std::size_t>(k)] = e;
          }
        }
      }
      for (Eigen::Index k = 0; k < g; ++k) {
        const auto entry = static_cast<std::size_t>(best_entry[static_cast<std::size_t>(k)]);
        if (is_correct(db_.entries()[entry].label, queries_.truths[i])) ++correct[static_cast<std::size_t>(k)];
      }
    }
    return correct;
  }

 private:
  struct Run {
    std::size_t entry;
    FeatureIndex begin;  // first feature
    FeatureIndex end;    // one past the last feature
  };
  struct Prepared {
    std::vector<FeatureIndex> touched;
    std::vector<Eigen::Index> slot;       // row of the correction table per touched feature
    std::vector<FeatureIndex> networks;   // networks holding touched features, ascending
  };

  const PlaceDatabase& db_;
  const QuerySet& queries_;
  FeatureIndex bins_;
  std::vector<std::vector<Run>> runs_;
  std::vector<Prepared> prepared_;
};

}  // namespace

double score_detector(const PlaceDatabase& db, const DetectorModel& detector, const QuerySet& queries) {
  const BlockScorer scorer(db, queries);
  const auto correct = scorer.correct_counts(std::span<const DetectorModel>(&detector, 1));
  return static_cast<double>(correct.front()) / static_cast<double>(queries.size());
}

TuneResult grid_search(std::span<const std::size_t> subtraining, std::span<const std::size_t> validation,
                       const Dataset& dataset, const ChowLiuTree& tree, const BinningConfig& config,
                       const GridSpec& grid, unsigned threads) {
  grid.validate();
  if (validation.empty()) throw std::invalid_argument("grid search needs a non-empty validation set");
  TuneResult result;
  result.pzge_values = grid.pzge_values();
  result.pzgne_values = grid.pzgne_values();
  const auto rows = static_cast<Eigen::Index>(result.pzge_values.size());
  const auto cols = static_cast<Eigen::Index>(result.pzgne_values.size());
  result.surface.resize(rows, cols);

  std::vector<DetectorModel> detectors;
  detectors.reserve(static_cast<std::size_t>(rows * cols));
  for (const double pzge : result.pzge_values)
    for (const double pzgne : result.pzgne_values) detectors.push_back({pzge, pzgne});

  const PlaceDatabase db = build_place_database(subtraining, dataset, tree, detectors.front(), config);
  const QuerySet queries = QuerySet::from_records(validation, dataset, config);
  const BlockScorer scorer(db, queries);

  const std::size_t n_blocks = (detectors.size() + kGridBlock - 1) / kGridBlock;
  parallel_for(n_blocks, threads, [&](std::size_t b) {
    const std::size_t first = b * kGridBlock;
    const std::size_t count = std::min(kGridBlock, detectors.size() - first);
    const auto correct = scorer.correct_counts(std::span<const DetectorModel>(detectors).subspan(first, count));
    for (std::size_t k = 0; k < count; ++k) {
      const auto flat = static_cast<Eigen::Index>(first + k);
      result.surface(flat / cols, flat % cols) =
          static_cast<double>(correct[k]) / static_cast<double>(queries.size());
    }
  });

  // Row-major scan with a strict comparison keeps the larger PzGe, then the
  // larger PzGne, on ties (both axes are descending).
  Eigen::Index bi = 0;
  Eigen::Index bj = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (result.surface(i, j) > result.surface(bi, bj)) {
        bi = i;
        bj = j;
      }
    }
  }
  result.best = {result.pzge_values[static_cast<std::size_t>(bi)], result.pzgne_values[static_cast<std::size_t>(bj)],
                 result.surface(bi, bj)};
  return result;
}

void export_surface_csv(std::ostream& out, const TuneResult& result) {
  out << "pzge,pzgne,score\n";
  for (std::size_t i = 0; i < result.pzge_values.size(); ++i) {
    for (std::size_t j = 0; j < result.pzgne_values.size(); ++j) {
      out << format_number(result.pzge_values[i]) << ',' << format_number(result.pzgne_values[j]) << ','
          << format_number(result.surface(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << '\n';
    }
  }
}

}  // namespace wfm
