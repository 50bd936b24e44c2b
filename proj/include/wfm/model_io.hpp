// Versioned JSON model file.
//
// Layout (all arrays flat):
//   format, version
//   parameters: range_low, range_high, bin_width, pzge, pzgne, seed,
//               smoothing_alpha, cluster_eps, cluster_min_pts
//   registry: [network id, ...]
//   tree: n_features, roots, parent (-1 = root), marginal, cond (4 per
//         feature: p(0|0), p(1|0), p(0|1), p(1|1)), total_weight
//   beliefs: observed[q], unobserved[q]  (p(e_q=1|L) for a place whose
//            defining scan did / did not set bit q)
//   entries: [{record, lon, lat, floor, building, observed: [q, ...]}, ...]
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "wfm/cluster.hpp"
#include "wfm/inference.hpp"

namespace wfm {

inline constexpr int kModelFormatVersion = 1;

struct ModelMetadata {
  std::uint64_t seed = 42;
  double smoothing_alpha = kDefaultSmoothing;
  ClusterParams cluster;
};

struct ModelFile {
  PlaceDatabase db;
  ModelMetadata meta;
};

std::string model_to_json(const PlaceDatabase& db, const ModelMetadata& meta);
ModelFile model_from_json(const std::string& text);

/// Writes to a temporary sibling and renames it into place.
void save_model(const std::filesystem::path& path, const PlaceDatabase& db, const ModelMetadata& meta);
ModelFile load_model(const std::filesystem::path& path);

/// Atomic text file write used for every artifact the CLI produces.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace wfm
