#include "wfm/model_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wfm {

namespace {

using Json = nlohmann::ordered_json;
constexpr const char* kFormatName = "wififabmap-model";

template <typename Vec>
Json to_array(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd read_vector(const Json& j, Eigen::Index expected, const char* name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != expected) {
    throw std::runtime_error(std::string("model field '") + name + "' has the wrong length");
  }
  Eigen::VectorXd v(expected);
  for (Eigen::Index i = 0; i < expected; ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

std::string model_to_json(const PlaceDatabase& db, const ModelMetadata& meta) {
  Json j;
  j["format"] = kFormatName;
  j["version"] = kModelFormatVersion;

  Json params;
  params["range_low"] = db.config().range_low();
  params["range_high"] = db.config().range_high();
  params["bin_width"] = db.config().bin_width();
  params["pzge"] = db.detector().pzge;
  params["pzgne"] = db.detector().pzgne;
  params["seed"] = meta.seed;
  params["smoothing_alpha"] = meta.smoothing_alpha;
  params["cluster_eps"] = meta.cluster.eps;
  params["cluster_min_pts"] = meta.cluster.min_pts;
  j["parameters"] = params;

  j["registry"] = db.registry().ids();

  const ChowLiuTree& tree = db.tree();
  Json t;
  t["n_features"] = tree.size();
  t["roots"] = tree.roots;
  t["parent"] = to_array(tree.parent);
  t["marginal"] = to_array(tree.marginal);
  Json cond = Json::array();
  for (Eigen::Index q = 0; q < tree.size(); ++q)
    for (int k = 0; k < 4; ++k) cond.push_back(tree.cond(q, k));
  t["cond"] = std::move(cond);
  t["total_weight"] = tree.total_weight;
  j["tree"] = std::move(t);

  Json beliefs;
  beliefs["observed"] = to_array(db.scorer().belief_observed());
  beliefs["unobserved"] = to_array(db.scorer().belief_unobserved());
  j["beliefs"] = std::move(beliefs);

  Json entries = Json::array();
  for (const auto& e : db.entries()) {
    Json je;
    je["record"] = e.source_record;
    je["lon"] = e.label.longitude;
    je["lat"] = e.label.latitude;
    je["floor"] = e.label.floor;
    je["building"] = e.label.building_id;
    je["observed"] = e.observed;
    entries.push_back(std::move(je));
  }
  j["entries"] = std::move(entries);
  return j.dump() + "\n";
}

ModelFile model_from_json(const std::string& text) {
  const Json j = Json::parse(text);
  if (j.value("format", std::string{}) != kFormatName) throw std::runtime_error("not a model file");
  if (j.at("version").get<int>() != kModelFormatVersion) {
    throw std::runtime_error("unsupported model format version " + std::to_string(j.at("version").get<int>()));
  }
  const Json& p = j.at("parameters");
  BinningConfig config(p.at("range_low").get<double>(), p.at("range_high").get<double>(),
                       p.at("bin_width").get<double>());
  const DetectorModel detector{p.at("pzge").get<double>(), p.at("pzgne").get<double>()};
  ModelMetadata meta;
  meta.seed = p.at("seed").get<std::uint64_t>();
  meta.smoothing_alpha = p.at("smoothing_alpha").get<double>();
  meta.cluster.eps = p.at("cluster_eps").get<double>();
  meta.cluster.min_pts = p.at("cluster_min_pts").get<int>();

  ApRegistry registry(j.at("registry").get<std::vector<std::string>>());

  const Json& t = j.at("tree");
  const auto n = t.at("n_features").get<Eigen::Index>();
  ChowLiuTree tree;
  tree.roots = t.at("roots").get<std::vector<FeatureIndex>>();
  tree.parent = read_vector(t.at("parent"), n, "parent").cast<int>();
  tree.marginal = read_vector(t.at("marginal"), n, "marginal");
  const Eigen::VectorXd cond = read_vector(t.at("cond"), 4 * n, "cond");
  tree.cond.resize(n, 4);
  for (Eigen::Index q = 0; q < n; ++q)
    for (int k = 0; k < 4; ++k) tree.cond(q, k) = cond[4 * q + k];
  tree.total_weight = t.at("total_weight").get<double>();
  tree.validate();

  std::vector<PlaceEntry> entries;
  for (const auto& je : j.at("entries")) {
    PlaceEntry e;
    e.source_record = je.at("record").get<std::size_t>();
    e.label.longitude = je.at("lon").get<double>();
    e.label.latitude = je.at("lat").get<double>();
    e.label.floor = je.at("floor").get<int>();
    e.label.building_id = je.at("building").get<int>();
    e.observed = je.at("observed").get<std::vector<FeatureIndex>>();
    entries.push_back(std::move(e));
  }

  ModelFile model{PlaceDatabase(std::move(registry), config, std::move(tree), detector, std::move(entries)), meta};

  // Beliefs are derived from the tree and the detector; a mismatch means the
  // file was edited inconsistently.
  const Json& b = j.at("beliefs");
  if (read_vector(b.at("observed"), n, "beliefs.observed") != model.db.scorer().belief_observed() ||
      read_vector(b.at("unobserved"), n, "beliefs.unobserved") != model.db.scorer().belief_unobserved()) {
    throw std::runtime_error("stored beliefs disagree with the tree and detector parameters");
  }
  return model;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

void save_model(const std::filesystem::path& path, const PlaceDatabase& db, const ModelMetadata& meta) {
  write_file_atomic(path, model_to_json(db, meta));
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace wfm
