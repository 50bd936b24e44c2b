// Building+floor accuracy, mean distance error over correct matches, and
// match export.
#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>

#include "wfm/dataset.hpp"

namespace wfm {

class PlaceDatabase;

struct Prediction {
  std::size_t query_index = 0;
  GroundTruth predicted;
  std::size_t entry = 0;
};

struct EvalReport {
  double score = 0.0;
  std::optional<double> e_d;  // meters; absent when no query was correct
  std::size_t n_total = 0;
  std::size_t n_correct = 0;
};

/// Same building and same floor.
inline bool is_correct(const GroundTruth& predicted, const GroundTruth& truth) {
  return predicted.building_id == truth.building_id && predicted.floor == truth.floor;
}

double score(std::span<const Prediction> predictions, std::span<const GroundTruth> truths);

/// Mean planar distance between query and matched position over correctly
/// classified queries; nullopt when there are none.
std::optional<double> mean_distance_error(std::span<const Prediction> predictions,
                                          std::span<const GroundTruth> truths);

EvalReport evaluate(std::span<const Prediction> predictions, std::span<const GroundTruth> truths);

/// Indented JSON object with keys score, e_d_m (null when undefined),
/// n_total, n_correct; ends with a newline.
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

/// One row per query: truth and matched position, correctness flag.
void export_matches(std::ostream& out, std::span<const Prediction> predictions, std::span<const GroundTruth> truths);

}  // namespace wfm
