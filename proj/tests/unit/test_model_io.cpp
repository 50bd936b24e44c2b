#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "support/synthetic_uji.hpp"
#include "wfm/model_io.hpp"
#include "wfm/pipeline.hpp"

using namespace wfm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("wfm_model_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Dataset synthetic(std::uint64_t scan_seed) {
  testing::SyntheticSpec spec;
  spec.scans_per_point = 4;
  std::istringstream in(testing::synthetic_uji_csv(spec, scan_seed));
  return parse_ujiindoorloc(in);
}

}  // namespace

TEST_CASE("save and load reproduce matches bit for bit") {
  const Dataset train = synthetic(1);
  const Dataset queries = synthetic(2);
  TrainOptions opts;
  opts.detector = {0.3135, 0.0429};
  const TrainedModel model = train_model(train, opts);

  TempDir dir;
  const fs::path file = dir.path / "model.json";
  save_model(file, model.db, model.meta);
  CHECK(fs::exists(file));
  CHECK_FALSE(fs::exists(dir.path / "model.json.tmp"));

  const ModelFile loaded = load_model(file);
  CHECK(loaded.meta.seed == 42);
  CHECK(loaded.meta.smoothing_alpha == opts.smoothing_alpha);
  CHECK(loaded.db.detector() == opts.detector);
  CHECK(loaded.db.config() == opts.binning);
  CHECK(loaded.db.registry() == model.db.registry());
  CHECK(loaded.db.tree().parent == model.db.tree().parent);
  CHECK(loaded.db.tree().cond == model.db.tree().cond);
  CHECK(loaded.db.size() == model.db.size());

  for (const auto& r : queries.records) {
    const MatchResult a = match(r.scan, model.db);
    const MatchResult b = match(r.scan, loaded.db);
    REQUIRE(a.ranked == b.ranked);
  }

  // Serialization is a fixed point.
  CHECK(model_to_json(loaded.db, loaded.meta) == model_to_json(model.db, model.meta));
}

TEST_CASE("tampered model files are rejected") {
  const TrainedModel model = train_model(synthetic(3), TrainOptions{});
  const std::string text = model_to_json(model.db, model.meta);
  CHECK_NOTHROW(model_from_json(text));

  auto j = nlohmann::json::parse(text);
  auto bad_version = j;
  bad_version["version"] = kModelFormatVersion + 1;
  CHECK_THROWS(model_from_json(bad_version.dump()));

  auto bad_format = j;
  bad_format["format"] = "something-else";
  CHECK_THROWS(model_from_json(bad_format.dump()));

  auto bad_belief = j;
  bad_belief["beliefs"]["observed"][0] = 0.123;
  CHECK_THROWS(model_from_json(bad_belief.dump()));

  auto bad_parent = j;
  bad_parent["tree"]["parent"][0] = 0;  // self-loop
  CHECK_THROWS(model_from_json(bad_parent.dump()));

  CHECK_THROWS(model_from_json("{not json"));
  CHECK_THROWS(load_model("/nonexistent/model.json"));
}

TEST_CASE("atomic write replaces the target and leaves no temporary") {
  TempDir dir;
  const fs::path file = dir.path / "out.txt";
  write_file_atomic(file, "first");
  write_file_atomic(file, "second");
  std::ifstream in(file);
  std::string s;
  std::getline(in, s);
  CHECK(s == "second");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path)) ++entries;
  CHECK(entries == 1);
  CHECK_THROWS(write_file_atomic(dir.path / "missing" / "x.txt", "x"));
}
