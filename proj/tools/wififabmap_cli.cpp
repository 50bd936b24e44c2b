// wififabmap: train, tune, evaluate and query WiFi place-recognition models.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "wfm/dataset.hpp"
#include "wfm/eval.hpp"
#include "wfm/inference.hpp"
#include "wfm/model_io.hpp"
#include "wfm/pipeline.hpp"
#include "wfm/tune.hpp"

namespace {

using namespace wfm;

struct Common {
  double bin_width = 10.0;
  std::uint64_t seed = 42;
  unsigned threads = 0;
  std::optional<double> pzge;
  std::optional<double> pzgne;
  double alpha = kDefaultSmoothing;
};

void add_binning(CLI::App* cmd, Common& c) {
  cmd->add_option("--bin-width", c.bin_width, "RSSI bin width in dB")->check(CLI::IsMember({5.0, 10.0}));
}

void add_detector(CLI::App* cmd, Common& c) {
  cmd->add_option("--pzge", c.pzge, "p(z=1 | e=0), false-positive rate")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--pzgne", c.pzgne, "p(z=0 | e=1), false-negative rate")->check(CLI::Range(0.0, 1.0));
}

void add_seed(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "seed for every random draw");
}

void add_threads(CLI::App* cmd, Common& c) {
  cmd->add_option("--threads", c.threads, "worker threads, 0 = all cores");
}

DetectorModel detector_from(const Common& c, DetectorModel base = {}) {
  if (c.pzge) base.pzge = *c.pzge;
  if (c.pzgne) base.pzgne = *c.pzgne;
  base.validate();
  return base;
}

TrainOptions train_options(const Common& c) {
  TrainOptions o;
  o.binning = BinningConfig(-110.0, -10.0, c.bin_width);
  o.detector = detector_from(c);
  o.smoothing_alpha = c.alpha;
  o.seed = c.seed;
  return o;
}

Dataset load(const std::string& path, const char* what) {
  const Dataset d = load_ujiindoorloc(path);
  std::cerr << what << ": " << d.size() << " records, " << registry_size(d) << " networks\n";
  return d;
}

int cmd_train(const std::string& train_csv, const std::string& out, const std::string& split_csv, const Common& c) {
  const Dataset data = load(train_csv, "training data");
  const TrainedModel model = train_model(data, train_options(c));
  save_model(out, model.db, model.meta);
  if (!split_csv.empty()) {
    std::ostringstream s;
    export_split_csv(s, model.clusters, model.split);
    write_file_atomic(split_csv, s.str());
  }
  const ChowLiuTree& tree = model.db.tree();
  std::size_t edges = 0;
  for (Eigen::Index q = 0; q < tree.size(); ++q) edges += tree.parent[q] >= 0;
  std::cout << "clusters: " << model.clusters.count << '\n'
            << "environment scans: " << model.split.environment_scans.size() << '\n'
            << "place entries: " << model.db.size() << '\n'
            << "features: " << tree.size() << '\n'
            << "tree edges: " << edges << '\n'
            << "tree roots: " << tree.roots.size() << '\n'
            << "tree weight: " << format_number(tree.total_weight) << '\n'
            << "model: " << out << '\n';
  return 0;
}

int cmd_tune(const std::string& train_csv, const std::string& out, const GridSpec& grid, const Common& c) {
  const Dataset data = load(train_csv, "training data");
  const BinningConfig binning(-110.0, -10.0, c.bin_width);
  const TuneRun run = tune_model(data, binning, ClusterParams{}, c.alpha, c.seed, grid, c.threads);
  if (!out.empty()) {
    std::ostringstream s;
    export_surface_csv(s, run.result);
    write_file_atomic(out, s.str());
  }
  std::cout << "subtraining scans: " << run.validation_split.subtraining.size() << '\n'
            << "validation scans: " << run.validation_split.validation.size() << '\n'
            << "grid: " << run.result.pzge_values.size() << " x " << run.result.pzgne_values.size() << '\n'
            << "best pzge: " << format_number(run.result.best.pzge) << '\n'
            << "best pzgne: " << format_number(run.result.best.pzgne) << '\n'
            << "best score: " << format_number(run.result.best.score) << '\n';
  return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& train_csv, const std::string& test_csv,
                 const std::string& out, const std::string& matches_csv, const Common& c) {
  std::optional<PlaceDatabase> db;
  if (!model_path.empty()) {
    db.emplace(load_model(model_path).db);
    if (c.pzge || c.pzgne) db->set_detector(detector_from(c, db->detector()));
  } else {
    db.emplace(train_model(load(train_csv, "training data"), train_options(c)).db);
  }
  const Dataset test = load(test_csv, "test data");
  std::size_t unknown = 0;
  for (const auto& r : test.records) remap_scan(r.scan, test.registry, db->registry(), &unknown);
  if (unknown > 0) std::cerr << "warning: " << unknown << " readings from networks not in the model were ignored\n";

  const auto predictions = predict_all(*db, test, c.threads);
  const auto truths = test.truths();
  const EvalReport report = evaluate(predictions, truths);
  const std::string json = report_to_json(report);
  if (!out.empty()) write_file_atomic(out, json);
  if (!matches_csv.empty()) {
    std::ostringstream s;
    export_matches(s, predictions, truths);
    write_file_atomic(matches_csv, s.str());
  }
  std::cout << json;
  return 0;
}

// "WAP001=-70;WAP002=-85" against the model's registry.
WifiScan parse_inline_scan(const std::string& text, const ApRegistry& registry, std::size_t* unknown) {
  std::vector<WifiScan::Reading> readings;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("scan item '" + item + "' is not id=rssi");
    const std::string id = item.substr(0, eq);
    double rssi = 0.0;
    try {
      std::size_t used = 0;
      rssi = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw std::invalid_argument("scan item '" + item + "' has an invalid RSSI");
    }
    if (const auto idx = registry.find(id)) {
      readings.push_back({*idx, rssi});
    } else {
      ++*unknown;
    }
  }
  return WifiScan(std::move(readings), registry.size());
}

int cmd_predict(const std::string& model_path, const std::string& scan_text, const std::string& test_csv,
                std::size_t top_k, const std::string& out, const Common& c) {
  PlaceDatabase db = load_model(model_path).db;
  if (c.pzge || c.pzgne) db.set_detector(detector_from(c, db.detector()));

  std::vector<WifiScan> scans;
  std::size_t unknown = 0;
  if (!test_csv.empty()) {
    const Dataset q = load(test_csv, "query scans");
    for (const auto& r : q.records) scans.push_back(remap_scan(r.scan, q.registry, db.registry(), &unknown));
  } else {
    scans.push_back(parse_inline_scan(scan_text, db.registry(), &unknown));
  }
  if (unknown > 0) std::cerr << "warning: " << unknown << " readings from networks not in the model were ignored\n";

  std::ostringstream s;
  write_match_result_header(s);
  for (std::size_t i = 0; i < scans.size(); ++i) write_match_result(s, i, match(scans[i], db), db, top_k);
  if (out.empty()) {
    std::cout << s.str();
  } else {
    write_file_atomic(out, s.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WiFi fingerprint place recognition"};
  app.require_subcommand(1);
  Common c;
  std::string train_csv, test_csv, model, out, split_csv, matches_csv, scan_text;
  std::size_t top_k = 5;
  GridSpec grid;

  auto* train = app.add_subcommand("train", "learn the tree and place database, write a model file");
  train->add_option("--train-csv", train_csv, "UJIIndoorLoc training CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out, "model JSON path")->required();
  train->add_option("--split-csv", split_csv, "optional record split CSV");
  add_binning(train, c);
  add_detector(train, c);
  add_seed(train, c);
  train->add_option("--alpha", c.alpha, "pseudo-count smoothing")->check(CLI::NonNegativeNumber);

  auto* tune = app.add_subcommand("tune", "grid search over the detector parameters");
  tune->add_option("--train-csv", train_csv, "UJIIndoorLoc training CSV")->required()->check(CLI::ExistingFile);
  tune->add_option("--out", out, "surface CSV path");
  tune->add_option("--pzge-log-start", grid.pzge_log_start, "first ln(PzGe)");
  tune->add_option("--pzge-log-end", grid.pzge_log_end, "last ln(PzGe)");
  tune->add_option("--pzgne-log-start", grid.pzgne_log_start, "first ln(PzGne)");
  tune->add_option("--pzgne-log-end", grid.pzgne_log_end, "last ln(PzGne)");
  tune->add_option("--log-step", grid.log_step, "step in ln units");
  add_binning(tune, c);
  add_seed(tune, c);
  add_threads(tune, c);
  tune->add_option("--alpha", c.alpha, "pseudo-count smoothing")->check(CLI::NonNegativeNumber);

  auto* evaluate = app.add_subcommand("evaluate", "score a model on a test CSV");
  auto* model_opt = evaluate->add_option("--model", model, "model JSON")->check(CLI::ExistingFile);
  auto* train_opt =
      evaluate->add_option("--train-csv", train_csv, "train in memory instead of loading a model")->check(CLI::ExistingFile);
  model_opt->excludes(train_opt);
  evaluate->add_option("--test-csv", test_csv, "UJIIndoorLoc test CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out", out, "report JSON path");
  evaluate->add_option("--matches", matches_csv, "match CSV path");
  add_binning(evaluate, c);
  add_detector(evaluate, c);
  add_seed(evaluate, c);
  add_threads(evaluate, c);

  auto* predict = app.add_subcommand("predict", "rank database places for a scan");
  predict->add_option("--model", model, "model JSON")->required()->check(CLI::ExistingFile);
  auto* scan_opt = predict->add_option("--scan", scan_text, "inline scan, id=rssi;id=rssi");
  auto* csv_opt = predict->add_option("--test-csv", test_csv, "CSV of scans in UJIIndoorLoc layout")
                      ->check(CLI::ExistingFile);
  scan_opt->excludes(csv_opt);
  predict->add_option("--top-k", top_k, "matches reported per scan")->check(CLI::PositiveNumber);
  predict->add_option("--out", out, "match CSV path (default stdout)");
  add_detector(predict, c);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(train_csv, out, split_csv, c);
    if (*tune) return cmd_tune(train_csv, out, grid, c);
    if (*evaluate) {
      if (model.empty() && train_csv.empty()) throw std::invalid_argument("evaluate needs --model or --train-csv");
      return cmd_evaluate(model, train_csv, test_csv, out, matches_csv, c);
    }
    if (*predict) {
      if (scan_opt->count() == 0 && test_csv.empty()) throw std::invalid_argument("predict needs --scan or --test-csv");
      return cmd_predict(model, scan_text, test_csv, top_k, out, c);
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
