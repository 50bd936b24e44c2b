#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "support/synthetic_uji.hpp"
#include "wfm/chowliu.hpp"
#include "wfm/cluster.hpp"
#include "wfm/eval.hpp"
#include "wfm/pipeline.hpp"
#include "wfm/tune.hpp"

using namespace wfm;

namespace {

struct Fixture {
  Dataset data;
  BinningConfig config;
  SplitResult split;
  ValidationSplit vsplit;
  ChowLiuTree tree;
};

Fixture make_fixture() {
  testing::SyntheticSpec spec;
  spec.buildings = 2;
  spec.floors = 2;
  spec.width = 12;
  spec.depth = 8;
  spec.scans_per_point = 6;
  spec.noise_sigma = 5.0;
  std::istringstream in(testing::synthetic_uji_csv(spec, 21));
  Fixture f{parse_ujiindoorloc(in), BinningConfig{}, {}, {}, {}};
  std::vector<GroundTruth> truths;
  for (const auto& r : f.data.records) truths.push_back(r.truth);
  f.split = split_dataset(dbscan(truths, ClusterParams{}), 42);
  f.vsplit = split_for_validation(f.split.place_db_scans, 43);
  f.tree = train_tree(f.split.environment_scans, f.data, f.config, 0.5);
  return f;
}

// Brute-force building+floor accuracy with the direct likelihood.
double oracle_score(const Fixture& f, const DetectorModel& det) {
  const PlaceDatabase db = build_place_database(f.vsplit.subtraining, f.data, f.tree, det, f.config);
  std::size_t correct = 0;
  for (const auto r : f.vsplit.validation) {
    const FeatureVector z = featurize_scan(f.data.records[r].scan, f.data.registry, f.config);
    std::size_t best = 0;
    double best_ll = -INFINITY;
    for (std::size_t e = 0; e < db.size(); ++e) {
      const double ll = observation_likelihood(db, e, z);
      if (ll > best_ll + 1e-9) {
        best_ll = ll;
        best = e;
      }
    }
    correct += is_correct(db.entries()[best].label, f.data.records[r].truth);
  }
  return static_cast<double>(correct) / static_cast<double>(f.vsplit.validation.size());
}

}  // namespace

TEST_CASE("default grid is 80 x 121 exponential") {
  const GridSpec g;
  const auto ge = g.pzge_values();
  const auto gne = g.pzgne_values();
  CHECK(ge.size() == 80);
  CHECK(gne.size() == 121);
  CHECK(ge.front() == doctest::Approx(std::exp(-0.01)));
  CHECK(ge.back() == doctest::Approx(std::exp(-3.96)));
  CHECK(gne.front() == doctest::Approx(std::exp(-2.0)));
  CHECK(gne.back() == doctest::Approx(std::exp(-8.0)));
  for (std::size_t i = 1; i < ge.size(); ++i) REQUIRE(std::log(ge[i - 1] / ge[i]) == doctest::Approx(0.05));
}

TEST_CASE("grid spec validation and degenerate axes") {
  CHECK(grid_exponents(-1.0, -1.0, 0.05) == std::vector<double>{-1.0});
  CHECK(grid_exponents(-1.0, -1.1, 0.05).size() == 3);
  CHECK_NOTHROW((GridSpec{-1.0, -1.0, -3.0, -3.0, 0.05}).validate());
  CHECK_THROWS((GridSpec{-1.0, -0.5, -2.0, -3.0, 0.05}).validate());
  CHECK_THROWS((GridSpec{-0.1, -1.0, -2.0, -3.0, 0.0}).validate());
  CHECK_THROWS((GridSpec{0.1, -1.0, -2.0, -3.0, 0.05}).validate());
}

TEST_CASE("validation split") {
  std::vector<std::vector<std::size_t>> db{{0}, {1, 2}, {3, 4, 5, 6, 7, 8, 9, 10, 11, 12}, {}};
  const ValidationSplit v = split_for_validation(db, 5);
  // Sizes: {1,0}, {1,1}, {7,3}, {0,0}.
  CHECK(v.subtraining.size() == 9);
  CHECK(v.validation.size() == 4);
  std::set<std::size_t> all(v.subtraining.begin(), v.subtraining.end());
  for (const auto r : v.validation) CHECK(all.insert(r).second);
  CHECK(all.size() == 13);
  CHECK(std::count(v.subtraining.begin(), v.subtraining.end(), 0u) == 1);

  const ValidationSplit again = split_for_validation(db, 5);
  CHECK(again.subtraining == v.subtraining);
  CHECK(again.validation == v.validation);
  CHECK_THROWS(split_for_validation(db, 5, 1.0));
}

TEST_CASE("grid search on synthetic data") {
  const Fixture f = make_fixture();
  REQUIRE_FALSE(f.vsplit.validation.empty());
  GridSpec grid{-0.2, -2.0, -1.0, -6.0, 0.2};  // 10 x 26, several blocks
  const TuneResult serial = grid_search(f.vsplit.subtraining, f.vsplit.validation, f.data, f.tree, f.config, grid, 1);
  CHECK(serial.surface.rows() == static_cast<Eigen::Index>(grid.pzge_values().size()));
  CHECK(serial.surface.cols() == static_cast<Eigen::Index>(grid.pzgne_values().size()));
  CHECK(serial.surface.minCoeff() >= 0.0);
  CHECK(serial.surface.maxCoeff() <= 1.0);
  CHECK(serial.best.score == serial.surface.maxCoeff());

  const TuneResult parallel = grid_search(f.vsplit.subtraining, f.vsplit.validation, f.data, f.tree, f.config, grid, 4);
  CHECK(parallel.surface == serial.surface);
  CHECK(parallel.best.pzge == serial.best.pzge);
  CHECK(parallel.best.pzgne == serial.best.pzgne);

  // Every cell equals single-setting scoring exactly.
  const PlaceDatabase db = build_place_database(f.vsplit.subtraining, f.data, f.tree, DetectorModel{}, f.config);
  const QuerySet queries = QuerySet::from_records(f.vsplit.validation, f.data, f.config);
  for (Eigen::Index i = 0; i < serial.surface.rows(); ++i)
    for (Eigen::Index j = 0; j < serial.surface.cols(); ++j)
      REQUIRE(serial.surface(i, j) ==
              score_detector(db, DetectorModel{serial.pzge_values[i], serial.pzgne_values[j]}, queries));

  // Spot-check grid points against brute-force scoring.
  for (const auto [i, j] : {std::pair{0, 0}, std::pair{2, 5}, std::pair{4, 11}}) {
    const DetectorModel det{serial.pzge_values[i], serial.pzgne_values[j]};
    CHECK(serial.surface(i, j) == doctest::Approx(oracle_score(f, det)));
  }

  const GridSpec single{-0.5, -0.5, -3.0, -3.0, 0.05};
  const TuneResult one = grid_search(f.vsplit.subtraining, f.vsplit.validation, f.data, f.tree, f.config, single, 2);
  CHECK(one.surface.size() == 1);
  CHECK(one.best.pzge == std::exp(-0.5));
  CHECK(one.best.score == doctest::Approx(oracle_score(f, DetectorModel{std::exp(-0.5), std::exp(-3.0)})));

  std::ostringstream csv;
  export_surface_csv(csv, serial);
  std::size_t lines = 0;
  for (const char c : csv.str()) lines += c == '\n';
  CHECK(lines == 1 + static_cast<std::size_t>(serial.surface.size()));
  CHECK(csv.str().rfind("pzge,pzgne,score\n", 0) == 0);

  CHECK_THROWS(grid_search(f.vsplit.subtraining, std::vector<std::size_t>{}, f.data, f.tree, f.config, grid, 1));
}
