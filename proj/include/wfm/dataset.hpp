// UJIIndoorLoc ingestion and the access-point registry.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace wfm {

/// Thrown for malformed input files. `row()` is the 0-based data row (header
/// excluded) when the problem is tied to a row.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::optional<std::size_t> row = std::nullopt)
      : std::runtime_error(what), row_(row) {}
  std::optional<std::size_t> row() const { return row_; }

 private:
  std::optional<std::size_t> row_;
};

/// Ordered, duplicate-free list of network identifiers. The order defines the
/// feature-vector layout and never changes after construction.
class ApRegistry {
 public:
  ApRegistry() = default;
  explicit ApRegistry(std::vector<std::string> ids);

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  const std::string& id(std::size_t index) const { return ids_.at(index); }
  const std::vector<std::string>& ids() const { return ids_; }
  std::optional<std::size_t> find(std::string_view id) const;

  friend bool operator==(const ApRegistry& a, const ApRegistry& b) { return a.ids_ == b.ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// One measurement event: detected networks only, sorted by registry index.
/// Absence is represented by omission.
class WifiScan {
 public:
  struct Reading {
    std::size_t network;
    double rssi;
    friend bool operator==(const Reading&, const Reading&) = default;
  };

  WifiScan() = default;
  /// Rejects duplicate indices and indices >= `registry_size`.
  WifiScan(std::vector<Reading> readings, std::size_t registry_size);

  const std::vector<Reading>& readings() const { return readings_; }
  std::size_t size() const { return readings_.size(); }
  bool empty() const { return readings_.empty(); }
  std::optional<double> rssi(std::size_t network) const;

  friend bool operator==(const WifiScan&, const WifiScan&) = default;

 private:
  std::vector<Reading> readings_;
};

struct GroundTruth {
  double longitude = 0.0;  // meters
  double latitude = 0.0;   // meters
  int floor = 0;
  int building_id = 0;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct Record {
  WifiScan scan;
  GroundTruth truth;
  int user_id = 0;
  int phone_id = 0;
  std::int64_t timestamp = 0;
};

struct Dataset {
  std::vector<Record> records;
  ApRegistry registry;

  std::size_t size() const { return records.size(); }
  std::vector<GroundTruth> truths() const;
};

/// The dataset's "not detected" cell value.
inline constexpr double kUjiNotDetected = 100.0;

/// Parses a CSV in UJIIndoorLoc layout: a header whose leading columns are
/// the WAP identifiers, followed by LONGITUDE, LATITUDE, FLOOR, BUILDINGID,
/// SPACEID, RELATIVEPOSITION, USERID, PHONEID, TIMESTAMP.
Dataset load_ujiindoorloc(const std::filesystem::path& path);
Dataset parse_ujiindoorloc(std::istream& in);

std::size_t registry_size(const Dataset& dataset);

/// Debug export, one record per line:
/// `index,bssid=rssi;bssid=rssi;...,lon,lat,floor,building`.
/// Numbers use the shortest decimal form that round-trips.
std::string export_record(std::size_t index, const Record& record, const ApRegistry& registry);
void export_records(std::ostream& out, const Dataset& dataset);

/// Inverse of `export_record`: returns the index, the scan and the location.
std::pair<std::size_t, Record> parse_exported_record(std::string_view line, const ApRegistry& registry);

/// Shortest round-trip decimal representation.
std::string format_number(double value);

}  // namespace wfm
