#include "wfm/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

namespace wfm {

void ClusterParams::validate() const {
  if (!(eps > 0.0)) throw std::invalid_argument("cluster eps must be positive");
  if (min_pts < 1) throw std::invalid_argument("cluster min_pts must be at least 1");
}

std::vector<std::vector<std::size_t>> ClusterAssignment::members() const {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < cluster.size(); ++i) {
    if (cluster[i] != kNoise) out[static_cast<std::size_t>(cluster[i])].push_back(i);
  }
  return out;
}

std::vector<std::size_t> SplitResult::flat_place_db_scans() const {
  std::vector<std::size_t> out;
  for (const auto& c : place_db_scans) out.insert(out.end(), c.begin(), c.end());
  return out;
}

std::size_t SeededRng::uniform_index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index requires n > 0");
  const std::uint64_t bound = n;
  const std::uint64_t threshold = (std::uint64_t{0} - bound) % bound;
  std::uint64_t r = 0;
  do {
    r = engine_();
  } while (r < threshold);
  return static_cast<std::size_t>(r % bound);
}

double distance(const GroundTruth& a, const GroundTruth& b) {
  if (a.building_id != b.building_id || a.floor != b.floor) return std::numeric_limits<double>::infinity();
  return std::hypot(a.longitude - b.longitude, a.latitude - b.latitude);
}

namespace {

struct CellKey {
  int building;
  int floor;
  std::int64_t x;
  std::int64_t y;
  friend bool operator==(const CellKey&, const CellKey&) = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const {
    std::size_t h = std::hash<std::int64_t>{}(k.x);
    h = h * 1000003u ^ std::hash<std::int64_t>{}(k.y);
    h = h * 1000003u ^ std::hash<int>{}(k.building);
    h = h * 1000003u ^ std::hash<int>{}(k.floor);
    return h;
  }
};

// Uniform grid with cell size eps per (building, floor), so every
// eps-neighbor lies in the 3x3 block around a point's cell.
class NeighborIndex {
 public:
  NeighborIndex(std::span<const GroundTruth> points, double eps) : points_(points), eps_(eps) {
    for (std::size_t i = 0; i < points.size(); ++i) cells_[key(points[i], 0, 0)].push_back(i);
  }

  std::vector<std::size_t> neighbors(std::size_t i) const {
    std::vector<std::size_t> out;
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        const auto it = cells_.find(key(points_[i], dx, dy));
        if (it == cells_.end()) continue;
        for (const auto j : it->second) {
          if (distance(points_[i], points_[j]) <= eps_) out.push_back(j);
        }
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  CellKey key(const GroundTruth& p, int dx, int dy) const {
    return {p.building_id, p.floor, static_cast<std::int64_t>(std::floor(p.longitude / eps_)) + dx,
            static_cast<std::int64_t>(std::floor(p.latitude / eps_)) + dy};
  }

  std::span<const GroundTruth> points_;
  double eps_;
  std::unordered_map<CellKey, std::vector<std::size_t>, CellKeyHash> cells_;
};

}  // namespace

ClusterAssignment dbscan(std::span<const GroundTruth> points, const ClusterParams& params) {
  params.validate();
  constexpr int kUnvisited = -2;
  ClusterAssignment result;
  result.cluster.assign(points.size(), kUnvisited);
  if (points.empty()) return result;

  const NeighborIndex index(points, params.eps);
  const auto min_pts = static_cast<std::size_t>(params.min_pts);

  for (std::size_t p = 0; p < points.size(); ++p) {
    if (result.cluster[p] != kUnvisited) continue;
    const auto seeds0 = index.neighbors(p);
    if (seeds0.size() < min_pts) {
      result.cluster[p] = ClusterAssignment::kNoise;
      continue;
    }
    const int id = result.count++;
    result.cluster[p] = id;
    std::deque<std::size_t> seeds(seeds0.begin(), seeds0.end());
    while (!seeds.empty()) {
      const std::size_t q = seeds.front();
      seeds.pop_front();
      if (result.cluster[q] == ClusterAssignment::kNoise) result.cluster[q] = id;  // border point
      if (result.cluster[q] != kUnvisited) continue;
      result.cluster[q] = id;
      const auto nq = index.neighbors(q);
      if (nq.size() >= min_pts) seeds.insert(seeds.end(), nq.begin(), nq.end());
    }
  }
  return result;
}

SplitResult split_dataset(const ClusterAssignment& assignment, std::uint64_t seed,
                          std::size_t places_per_cluster) {
  SplitResult split;
  split.rng_seed = seed;
  SeededRng rng(seed);
  for (auto members : assignment.members()) {
    if (members.empty()) continue;
    rng.partial_shuffle(members, std::min(members.size(), places_per_cluster + 1));
    split.environment_scans.push_back(members.front());
    const std::size_t n_db = std::min(places_per_cluster, members.size() - 1);
    split.place_db_scans.emplace_back(members.begin() + 1, members.begin() + 1 + static_cast<std::ptrdiff_t>(n_db));
  }
  return split;
}

void export_split_csv(std::ostream& out, const ClusterAssignment& assignment, const SplitResult& split) {
  struct Row {
    std::size_t record;
    bool env;
  };
  std::vector<Row> rows;
  for (const auto r : split.environment_scans) rows.push_back({r, true});
  for (const auto& c : split.place_db_scans)
    for (const auto r : c) rows.push_back({r, false});
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.record < b.record; });
  out << "record_index,cluster_id,partition\n";
  for (const auto& row : rows) {
    out << row.record << ',' << assignment.cluster.at(row.record) << ',' << (row.env ? "env" : "db") << '\n';
  }
}

}  // namespace wfm
