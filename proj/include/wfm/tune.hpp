// Grid search over the detector parameters on a subtraining/validation split.
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "wfm/chowliu.hpp"
#include "wfm/dataset.hpp"
#include "wfm/featurize.hpp"
#include "wfm/inference.hpp"

namespace wfm {

/// Natural-log exponents; grid values are exp(exponent). Each axis starts at
/// its start exponent and steps down while the exponent stays >= end - 1e-12.
struct GridSpec {
  double pzge_log_start = -0.01;
  double pzge_log_end = -4.0;
  double pzgne_log_start = -2.0;
  double pzgne_log_end = -8.0;
  double log_step = 0.05;

  void validate() const;
  std::vector<double> pzge_values() const;
  std::vector<double> pzgne_values() const;
};

/// Exponents start, start - step, ... down to end (inclusive within 1e-12).
std::vector<double> grid_exponents(double start, double end, double step);

struct GridPoint {
  double pzge = 0.0;
  double pzgne = 0.0;
  double score = 0.0;
};

struct TuneResult {
  std::vector<double> pzge_values;   // rows of `surface`
  std::vector<double> pzgne_values;  // columns of `surface`
  Eigen::MatrixXd surface;
  GridPoint best;
};

struct ValidationSplit {
  std::vector<std::size_t> subtraining;
  std::vector<std::size_t> validation;
};

inline constexpr double kSubtrainingFraction = 0.7;

/// Per cluster, round(fraction * size) scans (clamped to [1, size - 1]) go to
/// subtraining and the rest to validation. Clusters with fewer than two scans
/// go entirely to subtraining.
ValidationSplit split_for_validation(const std::vector<std::vector<std::size_t>>& place_db_scans, std::uint64_t seed,
                                     double subtraining_fraction = kSubtrainingFraction);

/// Validation queries as set-bit lists plus their ground truth.
struct QuerySet {
  std::vector<std::vector<FeatureIndex>> active;
  std::vector<GroundTruth> truths;

  static QuerySet from_records(std::span<const std::size_t> records, const Dataset& dataset,
                               const BinningConfig& config);
  std::size_t size() const { return truths.size(); }
};

/// Building+floor accuracy of `db`'s entries under one detector setting.
double score_detector(const PlaceDatabase& db, const DetectorModel& detector, const QuerySet& queries);

/// Rebuilds the place beliefs for every grid point from the subtraining scans
/// (the tree is fixed) and scores the validation scans.
TuneResult grid_search(std::span<const std::size_t> subtraining, std::span<const std::size_t> validation,
                       const Dataset& dataset, const ChowLiuTree& tree, const BinningConfig& config,
                       const GridSpec& grid, unsigned threads = 1);

/// CSV `pzge,pzgne,score`, rows in grid order.
void export_surface_csv(std::ostream& out, const TuneResult& result);

}  // namespace wfm
