#include "wfm/eval.hpp"

#include <json.hpp>

#include <ostream>
#include <stdexcept>

#include "wfm/math.hpp"

namespace wfm {

namespace {

void check_aligned(std::span<const Prediction> predictions, std::span<const GroundTruth> truths) {
  if (predictions.size() != truths.size()) throw std::invalid_argument("predictions and truths are not aligned");
  if (predictions.empty()) throw std::invalid_argument("cannot score an empty prediction list");
}

}  // namespace

double score(std::span<const Prediction> predictions, std::span<const GroundTruth> truths) {
  return evaluate(predictions, truths).score;
}

std::optional<double> mean_distance_error(std::span<const Prediction> predictions,
                                          std::span<const GroundTruth> truths) {
  return evaluate(predictions, truths).e_d;
}

EvalReport evaluate(std::span<const Prediction> predictions, std::span<const GroundTruth> truths) {
  check_aligned(predictions, truths);
  EvalReport report;
  report.n_total = predictions.size();
  double distance_sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i].predicted;
    const auto& t = truths[i];
    if (!is_correct(p, t)) continue;
    ++report.n_correct;
    distance_sum += planar_distance(t.longitude, t.latitude, p.longitude, p.latitude);
  }
  report.score = static_cast<double>(report.n_correct) / static_cast<double>(report.n_total);
  if (report.n_correct > 0) report.e_d = distance_sum / static_cast<double>(report.n_correct);
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["score"] = report.score;
  j["e_d_m"] = report.e_d ? nlohmann::ordered_json(*report.e_d) : nlohmann::ordered_json(nullptr);
  j["n_total"] = report.n_total;
  j["n_correct"] = report.n_correct;
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  EvalReport r;
  r.score = j.at("score").get<double>();
  if (!j.at("e_d_m").is_null()) r.e_d = j.at("e_d_m").get<double>();
  r.n_total = j.at("n_total").get<std::size_t>();
  r.n_correct = j.at("n_correct").get<std::size_t>();
  return r;
}

void export_matches(std::ostream& out, std::span<const Prediction> predictions, std::span<const GroundTruth> truths) {
  if (predictions.size() != truths.size()) throw std::invalid_argument("predictions and truths are not aligned");
  out << "query_index,truth_lon,truth_lat,truth_floor,truth_building,"
         "match_entry,match_lon,match_lat,match_floor,match_building,correct\n";
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    const auto& t = truths[i];
    out << p.query_index << ',' << format_number(t.longitude) << ',' << format_number(t.latitude) << ',' << t.floor
        << ',' << t.building_id << ',' << p.entry << ',' << format_number(p.predicted.longitude) << ','
        << format_number(p.predicted.latitude) << ',' << p.predicted.floor << ',' << p.predicted.building_id << ','
        << (is_correct(p.predicted, t) ? 1 : 0) << '\n';
  }
}

}  // namespace wfm
