#include "wfm/featurize.hpp"

#include <cmath>
#include <stdexcept>

namespace wfm {

namespace {

std::size_t interval_count(double low, double high, double width) {
  if (!(low < high)) throw std::invalid_argument("binning range_low must be below range_high");
  if (!(width > 0.0)) throw std::invalid_argument("binning bin_width must be positive");
  const double steps = (high - low) / width;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9) {
    throw std::invalid_argument("bin width " + format_number(width) + " does not divide the range [" +
                                format_number(low) + ", " + format_number(high) + "]");
  }
  return static_cast<std::size_t>(rounded);
}

}  // namespace

BinningConfig::BinningConfig(double range_low, double range_high, double bin_width)
    : range_low_(range_low), range_high_(range_high), bin_width_(bin_width) {
  const std::size_t steps = interval_count(range_low, range_high, bin_width);
  thresholds_.reserve(steps + 1);
  for (std::size_t j = 0; j <= steps; ++j) thresholds_.push_back(range_low + static_cast<double>(j) * bin_width);
}

std::vector<double> make_thresholds(const BinningConfig& config) { return config.thresholds(); }

std::vector<FeatureIndex> FeatureVector::active() const {
  std::vector<FeatureIndex> out;
  for (Eigen::Index i = 0; i < bits.size(); ++i) {
    if (bits[i]) out.push_back(static_cast<FeatureIndex>(i));
  }
  return out;
}

FeatureVector FeatureVector::from_active(Eigen::Index n, const std::vector<FeatureIndex>& active) {
  FeatureVector v(n);
  for (const auto q : active) {
    if (q < 0 || q >= n) throw std::out_of_range("feature index out of range");
    v.bits[q] = 1;
  }
  return v;
}

std::string FeatureVector::to_string() const {
  std::string s(static_cast<std::size_t>(bits.size()), '0');
  for (Eigen::Index i = 0; i < bits.size(); ++i) {
    if (bits[i]) s[static_cast<std::size_t>(i)] = '1';
  }
  return s;
}

FeatureVector FeatureVector::from_string(std::string_view s) {
  FeatureVector v(static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '1') {
      v.bits[static_cast<Eigen::Index>(i)] = 1;
    } else if (s[i] != '0') {
      throw std::invalid_argument("feature string may only contain '0' and '1'");
    }
  }
  return v;
}

Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1> binarize_reading(double rssi, const BinningConfig& config) {
  const auto& t = config.thresholds();
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1> b(static_cast<Eigen::Index>(t.size()));
  for (std::size_t j = 0; j < t.size(); ++j) b[static_cast<Eigen::Index>(j)] = rssi > t[j] ? 1 : 0;
  return b;
}

std::vector<FeatureIndex> active_features(const WifiScan& scan, const ApRegistry& registry,
                                          const BinningConfig& config) {
  const auto& t = config.thresholds();
  const auto k = t.size();
  std::vector<FeatureIndex> out;
  for (const auto& r : scan.readings()) {
    if (r.network >= registry.size()) {
      throw std::out_of_range("scan references network " + std::to_string(r.network) +
                              " outside registry of size " + std::to_string(registry.size()));
    }
    for (std::size_t j = 0; j < k && r.rssi > t[j]; ++j) {
      out.push_back(static_cast<FeatureIndex>(r.network * k + j));
    }
  }
  return out;
}

FeatureVector featurize_scan(const WifiScan& scan, const ApRegistry& registry, const BinningConfig& config) {
  return FeatureVector::from_active(static_cast<Eigen::Index>(feature_count(registry, config)),
                                    active_features(scan, registry, config));
}

}  // namespace wfm
