// End-to-end training, evaluation and tuning on loaded datasets.
#pragma once

#include <cstdint>
#include <vector>

#include "wfm/chowliu.hpp"
#include "wfm/cluster.hpp"
#include "wfm/dataset.hpp"
#include "wfm/eval.hpp"
#include "wfm/featurize.hpp"
#include "wfm/inference.hpp"
#include "wfm/model_io.hpp"
#include "wfm/tune.hpp"

namespace wfm {

struct TrainOptions {
  BinningConfig binning{};
  DetectorModel detector{};
  ClusterParams cluster{};
  double smoothing_alpha = kDefaultSmoothing;
  std::uint64_t seed = 42;
};

struct TrainedModel {
  PlaceDatabase db;
  ModelMetadata meta;
  ClusterAssignment clusters;
  SplitResult split;
};

/// Chow-Liu tree over the given records' feature vectors.
ChowLiuTree train_tree(std::span<const std::size_t> records, const Dataset& dataset, const BinningConfig& config,
                       double smoothing_alpha);

/// Cluster, split, learn the tree from the environment scans and build the
/// place database from the remaining drawn scans.
TrainedModel train_model(const Dataset& dataset, const TrainOptions& options);

/// Rewrites a scan recorded against `from` into `to`'s indices. Networks
/// missing from `to` are dropped and counted in `*unknown`.
WifiScan remap_scan(const WifiScan& scan, const ApRegistry& from, const ApRegistry& to,
                    std::size_t* unknown = nullptr);

/// Best match for every record of `queries`; registries are matched by
/// network identifier.
std::vector<Prediction> predict_all(const PlaceDatabase& db, const Dataset& queries, unsigned threads = 1);

struct TuneRun {
  ClusterAssignment clusters;
  SplitResult split;
  ValidationSplit validation_split;
  TuneResult result;
};

/// Seed for the subtraining/validation draw, derived from the split seed.
std::uint64_t validation_seed(std::uint64_t seed);

TuneRun tune_model(const Dataset& dataset, const BinningConfig& binning, const ClusterParams& cluster,
                   double smoothing_alpha, std::uint64_t seed, const GridSpec& grid, unsigned threads = 1);

}  // namespace wfm
