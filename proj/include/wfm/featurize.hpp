// RSSI thresholding into the extended binary feature vector.
//
// Each network owns `bins_per_network()` consecutive bits (network-major
// layout). Bit j of a network's sub-vector is set iff its RSSI strictly
// exceeds threshold j, so every sub-vector is a run of ones followed by zeros.
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "wfm/dataset.hpp"

namespace wfm {

using FeatureIndex = std::int32_t;

class BinningConfig {
 public:
  /// Throws std::invalid_argument unless range_low < range_high, bin_width > 0
  /// and bin_width divides the range.
  BinningConfig(double range_low = -110.0, double range_high = -10.0, double bin_width = 10.0);

  double range_low() const { return range_low_; }
  double range_high() const { return range_high_; }
  double bin_width() const { return bin_width_; }
  const std::vector<double>& thresholds() const { return thresholds_; }
  std::size_t bins_per_network() const { return thresholds_.size(); }

  friend bool operator==(const BinningConfig& a, const BinningConfig& b) {
    return a.range_low_ == b.range_low_ && a.range_high_ == b.range_high_ && a.bin_width_ == b.bin_width_;
  }

 private:
  double range_low_;
  double range_high_;
  double bin_width_;
  std::vector<double> thresholds_;
};

/// Dense binary vector; one byte per feature holding 0 or 1.
struct FeatureVector {
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1> bits;

  FeatureVector() = default;
  explicit FeatureVector(Eigen::Index n) : bits(Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>::Zero(n)) {}

  Eigen::Index size() const { return bits.size(); }
  bool operator[](Eigen::Index i) const { return bits[i] != 0; }
  void set(Eigen::Index i, bool value) { bits[i] = value ? 1 : 0; }

  /// Sorted indices of the set bits.
  std::vector<FeatureIndex> active() const;
  static FeatureVector from_active(Eigen::Index n, const std::vector<FeatureIndex>& active);

  /// '0'/'1' characters, network-major.
  std::string to_string() const;
  static FeatureVector from_string(std::string_view bits);

  friend bool operator==(const FeatureVector& a, const FeatureVector& b) {
    return a.bits.size() == b.bits.size() && a.bits == b.bits;
  }
};

/// t_j = range_low + j * bin_width, both endpoints included.
std::vector<double> make_thresholds(const BinningConfig& config);

/// Sub-vector for one detected reading. Values above range_high saturate to
/// all ones; values at or below range_low give all zeros.
Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1> binarize_reading(double rssi, const BinningConfig& config);

/// Network-major concatenation of every network's sub-vector; absent
/// networks contribute zeros.
FeatureVector featurize_scan(const WifiScan& scan, const ApRegistry& registry, const BinningConfig& config);

/// Same as featurize_scan but returns only the set-bit indices.
std::vector<FeatureIndex> active_features(const WifiScan& scan, const ApRegistry& registry,
                                          const BinningConfig& config);

inline std::size_t feature_count(const ApRegistry& registry, const BinningConfig& config) {
  return registry.size() * config.bins_per_network();
}

}  // namespace wfm
