#include "wfm/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace wfm {

namespace {

constexpr std::array<std::string_view, 9> kTrailingColumns = {
    "LONGITUDE", "LATITUDE", "FLOOR", "BUILDINGID", "SPACEID",
    "RELATIVEPOSITION", "USERID", "PHONEID", "TIMESTAMP"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

template <typename T>
std::optional<T> parse_as(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  T value{};
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty()) return std::nullopt;
  return value;
}

template <typename T>
T parse_cell(std::string_view text, std::size_t row, std::size_t column) {
  auto v = parse_as<T>(text);
  if (!v) {
    throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(column) +
                         ": cannot parse '" + std::string(trim(text)) + "'",
                     row);
  }
  return *v;
}

// Integer columns are sometimes written as "2.0" by spreadsheet tools.
int parse_int_cell(std::string_view text, std::size_t row, std::size_t column) {
  if (auto v = parse_as<int>(text)) return *v;
  const double d = parse_cell<double>(text, row, column);
  if (d != static_cast<double>(static_cast<int>(d))) {
    throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(column) +
                         ": expected an integer",
                     row);
  }
  return static_cast<int>(d);
}

}  // namespace

ApRegistry::ApRegistry(std::vector<std::string> ids) : ids_(std::move(ids)) {
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw std::invalid_argument("duplicate network identifier '" + ids_[i] + "'");
    }
  }
}

std::optional<std::size_t> ApRegistry::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

WifiScan::WifiScan(std::vector<Reading> readings, std::size_t registry_size)
    : readings_(std::move(readings)) {
  std::sort(readings_.begin(), readings_.end(),
            [](const Reading& a, const Reading& b) { return a.network < b.network; });
  for (std::size_t i = 0; i < readings_.size(); ++i) {
    if (readings_[i].network >= registry_size) {
      throw std::out_of_range("network index " + std::to_string(readings_[i].network) +
                              " outside registry of size " + std::to_string(registry_size));
    }
    if (i > 0 && readings_[i].network == readings_[i - 1].network) {
      throw std::invalid_argument("duplicate network index " + std::to_string(readings_[i].network) +
                                  " in scan");
    }
  }
}

std::optional<double> WifiScan::rssi(std::size_t network) const {
  const auto it = std::lower_bound(readings_.begin(), readings_.end(), network,
                                   [](const Reading& r, std::size_t n) { return r.network < n; });
  if (it == readings_.end() || it->network != network) return std::nullopt;
  return it->rssi;
}

std::vector<GroundTruth> Dataset::truths() const {
  std::vector<GroundTruth> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.truth);
  return out;
}

Dataset load_ujiindoorloc(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return parse_ujiindoorloc(in);
}

Dataset parse_ujiindoorloc(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw ParseError("empty file: missing header row");
  // UTF-8 byte order mark
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  const auto header = split(line, ',');
  if (header.size() < kTrailingColumns.size()) {
    throw ParseError("header has " + std::to_string(header.size()) + " columns, expected at least " +
                     std::to_string(kTrailingColumns.size()));
  }
  const std::size_t n_wap = header.size() - kTrailingColumns.size();
  for (std::size_t i = 0; i < kTrailingColumns.size(); ++i) {
    if (trim(header[n_wap + i]) != kTrailingColumns[i]) {
      throw ParseError("header column " + std::to_string(n_wap + i) + " is '" +
                       std::string(trim(header[n_wap + i])) + "', expected '" +
                       std::string(kTrailingColumns[i]) + "'");
    }
  }
  std::vector<std::string> ids;
  ids.reserve(n_wap);
  for (std::size_t i = 0; i < n_wap; ++i) ids.emplace_back(trim(header[i]));

  Dataset dataset;
  dataset.registry = ApRegistry(std::move(ids));

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw ParseError("row " + std::to_string(row) + ": " + std::to_string(cells.size()) +
                           " columns, expected " + std::to_string(header.size()),
                       row);
    }
    std::vector<WifiScan::Reading> readings;
    for (std::size_t i = 0; i < n_wap; ++i) {
      const double v = parse_cell<double>(cells[i], row, i);
      if (v != kUjiNotDetected) readings.push_back({i, v});
    }
    Record rec;
    rec.scan = WifiScan(std::move(readings), n_wap);
    rec.truth.longitude = parse_cell<double>(cells[n_wap + 0], row, n_wap + 0);
    rec.truth.latitude = parse_cell<double>(cells[n_wap + 1], row, n_wap + 1);
    rec.truth.floor = parse_int_cell(cells[n_wap + 2], row, n_wap + 2);
    rec.truth.building_id = parse_int_cell(cells[n_wap + 3], row, n_wap + 3);
    // SPACEID and RELATIVEPOSITION are validated but not kept.
    parse_int_cell(cells[n_wap + 4], row, n_wap + 4);
    parse_int_cell(cells[n_wap + 5], row, n_wap + 5);
    rec.user_id = parse_int_cell(cells[n_wap + 6], row, n_wap + 6);
    rec.phone_id = parse_int_cell(cells[n_wap + 7], row, n_wap + 7);
    rec.timestamp = parse_cell<std::int64_t>(cells[n_wap + 8], row, n_wap + 8);
    dataset.records.push_back(std::move(rec));
    ++row;
  }
  return dataset;
}

std::size_t registry_size(const Dataset& dataset) { return dataset.registry.size(); }

std::string format_number(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf.data(), ptr);
}

std::string export_record(std::size_t index, const Record& record, const ApRegistry& registry) {
  std::string out = std::to_string(index);
  out += ',';
  bool first = true;
  for (const auto& r : record.scan.readings()) {
    if (!first) out += ';';
    first = false;
    out += registry.id(r.network);
    out += '=';
    out += format_number(r.rssi);
  }
  out += ',';
  out += format_number(record.truth.longitude);
  out += ',';
  out += format_number(record.truth.latitude);
  out += ',';
  out += std::to_string(record.truth.floor);
  out += ',';
  out += std::to_string(record.truth.building_id);
  return out;
}

void export_records(std::ostream& out, const Dataset& dataset) {
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    out << export_record(i, dataset.records[i], dataset.registry) << '\n';
  }
}

std::pair<std::size_t, Record> parse_exported_record(std::string_view line, const ApRegistry& registry) {
  const auto fields = split(trim(line), ',');
  if (fields.size() != 6) throw ParseError("exported record must have 6 fields");
  const auto index = parse_cell<std::size_t>(fields[0], 0, 0);
  std::vector<WifiScan::Reading> readings;
  if (!trim(fields[1]).empty()) {
    for (auto item : split(fields[1], ';')) {
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) throw ParseError("reading without '='", index);
      const auto net = registry.find(trim(item.substr(0, eq)));
      if (!net) throw ParseError("unknown network '" + std::string(item.substr(0, eq)) + "'", index);
      readings.push_back({*net, parse_cell<double>(item.substr(eq + 1), index, 1)});
    }
  }
  Record rec;
  rec.scan = WifiScan(std::move(readings), registry.size());
  rec.truth.longitude = parse_cell<double>(fields[2], index, 2);
  rec.truth.latitude = parse_cell<double>(fields[3], index, 3);
  rec.truth.floor = parse_int_cell(fields[4], index, 4);
  rec.truth.building_id = parse_int_cell(fields[5], index, 5);
  return {index, std::move(rec)};
}

}  // namespace wfm
