#include "wfm/pipeline.hpp"

#include <stdexcept>

#include "wfm/parallel.hpp"

namespace wfm {

ChowLiuTree train_tree(std::span<const std::size_t> records, const Dataset& dataset, const BinningConfig& config,
                       double smoothing_alpha) {
  std::vector<std::vector<FeatureIndex>> samples;
  samples.reserve(records.size());
  for (const auto r : records) samples.push_back(active_features(dataset.records.at(r).scan, dataset.registry, config));
  const auto n = static_cast<Eigen::Index>(feature_count(dataset.registry, config));
  return build_tree(estimate_stats(n, samples, smoothing_alpha));
}

TrainedModel train_model(const Dataset& dataset, const TrainOptions& options) {
  if (dataset.records.empty()) throw std::invalid_argument("training dataset has no records");
  options.detector.validate();
  const auto truths = dataset.truths();
  ClusterAssignment clusters = dbscan(truths, options.cluster);
  SplitResult split = split_dataset(clusters, options.seed);
  ChowLiuTree tree = train_tree(split.environment_scans, dataset, options.binning, options.smoothing_alpha);
  PlaceDatabase db = build_place_database(split, dataset, std::move(tree), options.detector, options.binning);
  ModelMetadata meta{options.seed, options.smoothing_alpha, options.cluster};
  return {std::move(db), meta, std::move(clusters), std::move(split)};
}

WifiScan remap_scan(const WifiScan& scan, const ApRegistry& from, const ApRegistry& to, std::size_t* unknown) {
  if (from == to) return scan;
  std::vector<WifiScan::Reading> out;
  for (const auto& r : scan.readings()) {
    if (const auto idx = to.find(from.id(r.network))) {
      out.push_back({*idx, r.rssi});
    } else if (unknown) {
      ++*unknown;
    }
  }
  return WifiScan(std::move(out), to.size());
}

std::vector<Prediction> predict_all(const PlaceDatabase& db, const Dataset& queries, unsigned threads) {
  std::vector<Prediction> out(queries.records.size());
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const WifiScan scan = remap_scan(queries.records[i].scan, queries.registry, db.registry());
    const auto active = active_features(scan, db.registry(), db.config());
    const std::size_t best = best_index(db.scorer().relative_scores(active));
    out[i] = {i, db.entries()[best].label, best};
  });
  return out;
}

std::uint64_t validation_seed(std::uint64_t seed) { return seed ^ 0x9E3779B97F4A7C15ull; }

TuneRun tune_model(const Dataset& dataset, const BinningConfig& binning, const ClusterParams& cluster,
                   double smoothing_alpha, std::uint64_t seed, const GridSpec& grid, unsigned threads) {
  if (dataset.records.empty()) throw std::invalid_argument("training dataset has no records");
  TuneRun run;
  run.clusters = dbscan(dataset.truths(), cluster);
  run.split = split_dataset(run.clusters, seed);
  run.validation_split = split_for_validation(run.split.place_db_scans, validation_seed(seed));
  const ChowLiuTree tree = train_tree(run.split.environment_scans, dataset, binning, smoothing_alpha);
  run.result = grid_search(run.validation_split.subtraining, run.validation_split.validation, dataset, tree, binning,
                           grid, threads);
  return run;
}

}  // namespace wfm
