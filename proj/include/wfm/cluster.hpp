// Same-location clustering of training scans and the environment / place
// database split.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "wfm/dataset.hpp"

namespace wfm {

struct ClusterParams {
  double eps = 1.0;  // meters
  int min_pts = 1;

  void validate() const;
};

struct ClusterAssignment {
  static constexpr int kNoise = -1;

  std::vector<int> cluster;  // per record; kNoise only possible with min_pts > 1
  int count = 0;

  /// Record indices of each cluster, in ascending record order.
  std::vector<std::vector<std::size_t>> members() const;
};

struct SplitResult {
  std::vector<std::size_t> environment_scans;           // one per cluster
  std::vector<std::vector<std::size_t>> place_db_scans;  // per cluster, up to 10
  std::uint64_t rng_seed = 0;

  std::vector<std::size_t> flat_place_db_scans() const;
};

/// Deterministic bounded draws on top of mt19937_64, independent of the
/// standard library's distribution implementations.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform integer in [0, n); n must be positive.
  std::size_t uniform_index(std::size_t n);
  /// Moves `count` uniformly drawn elements (without replacement) to the
  /// front of `items`, in draw order.
  template <typename T>
  void partial_shuffle(std::vector<T>& items, std::size_t count) {
    for (std::size_t i = 0; i < count && i < items.size(); ++i) {
      const std::size_t j = i + uniform_index(items.size() - i);
      std::swap(items[i], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Planar Euclidean distance within the same building and floor, infinity
/// otherwise.
double distance(const GroundTruth& a, const GroundTruth& b);

/// DBSCAN over `distance`; neighborhoods are closed balls (distance <= eps)
/// and include the point itself. Cluster ids follow first-visit record order.
ClusterAssignment dbscan(std::span<const GroundTruth> points, const ClusterParams& params);

inline constexpr std::size_t kPlacesPerCluster = 10;

/// Per cluster: one random environment scan, then up to `places_per_cluster`
/// further random scans for the place database.
SplitResult split_dataset(const ClusterAssignment& assignment, std::uint64_t seed,
                          std::size_t places_per_cluster = kPlacesPerCluster);

/// CSV `record_index,cluster_id,partition` with partition in {env, db}.
void export_split_csv(std::ostream& out, const ClusterAssignment& assignment, const SplitResult& split);

}  // namespace wfm
