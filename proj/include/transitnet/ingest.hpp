#pragma once

#include "transitnet/timeutil.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace transitnet {

struct Stop {
  std::string stop_id;
  double lat = 0;
  double lon = 0;
  bool is_terminal = false;

  friend bool operator==(const Stop&, const Stop&) = default;
};

enum class Direction { outbound, inbound };
const char* to_string(Direction d);

struct RouteDef {
  std::string route_id;
  Direction direction = Direction::outbound;
  std::vector<std::string> itinerary;  // >= 2 stops, no immediate repeats

  friend bool operator==(const RouteDef&, const RouteDef&) = default;
};

struct Terminal {
  std::string terminal_id;
  std::string stop_id;

  friend bool operator==(const Terminal&, const Terminal&) = default;
};

struct GpsPing {
  std::string vehicle_id;
  std::string route_id;
  Timestamp timestamp;
  double lat = 0;
  double lon = 0;

  friend bool operator==(const GpsPing&, const GpsPing&) = default;
};

// Exactly one of vehicle_id / terminal_id is set.
struct Validation {
  std::string user_id;
  Timestamp timestamp;
  std::optional<std::string> route_id;
  std::optional<std::string> vehicle_id;
  std::optional<std::string> terminal_id;

  friend bool operator==(const Validation&, const Validation&) = default;
};

struct BoundingBox {
  double min_lat = -90, max_lat = 90, min_lon = -180, max_lon = 180;
  bool contains(double lat, double lon) const {
    return lat >= min_lat && lat <= max_lat && lon >= min_lon && lon <= max_lon;
  }
};

struct Reject {
  std::size_t line = 0;
  std::string reason;
  std::string raw;
};

template <typename T>
struct Loaded {
  std::vector<T> records;
  std::vector<Reject> rejects;
};

struct LoadOptions {
  // Loading aborts with a data error when rejects / rows exceeds this.
  double max_reject_rate = 0.01;
  BoundingBox bbox;
};

enum class DatasetKind { stops, routes, terminals, pings, validations };
const char* to_string(DatasetKind k);
std::optional<DatasetKind> parse_dataset_kind(std::string_view s);
const std::vector<std::string>& csv_header(DatasetKind k);

Loaded<Stop> load_stops(const std::string& path, const LoadOptions& opts = {});
// Itinerary stop ids are checked against `known_stops` when it is non-null.
Loaded<RouteDef> load_routes(const std::string& path, const LoadOptions& opts = {},
                             const std::vector<Stop>* known_stops = nullptr);
Loaded<Terminal> load_terminals(const std::string& path, const LoadOptions& opts = {});
Loaded<GpsPing> load_pings(const std::string& path, const LoadOptions& opts = {});
Loaded<Validation> load_validations(const std::string& path, const LoadOptions& opts = {});

void write_stops(const std::string& path, const std::vector<Stop>& stops);
void write_routes(const std::string& path, const std::vector<RouteDef>& routes);
void write_terminals(const std::string& path, const std::vector<Terminal>& terminals);
void write_pings(const std::string& path, const std::vector<GpsPing>& pings);
void write_validations(const std::string& path, const std::vector<Validation>& validations);
void write_rejects(const std::string& path, const std::vector<std::pair<DatasetKind, Reject>>& rejects);

// The five raw datasets of one city.
struct Dataset {
  std::vector<Stop> stops;
  std::vector<RouteDef> routes;
  std::vector<Terminal> terminals;
  std::vector<GpsPing> pings;
  std::vector<Validation> validations;
  std::vector<std::pair<DatasetKind, Reject>> rejects;
};

inline constexpr const char* kStopsFile = "stops.csv";
inline constexpr const char* kRoutesFile = "routes.csv";
inline constexpr const char* kTerminalsFile = "terminals.csv";
inline constexpr const char* kPingsFile = "pings.csv";
inline constexpr const char* kValidationsFile = "validations.csv";

// Loads the five files from `dir`. The independent loaders run concurrently.
Dataset load_dataset_dir(const std::string& dir, const LoadOptions& opts = {});
void write_dataset_dir(const std::string& dir, const Dataset& ds);

struct DayFilterReport {
  Day day;
  DayClass day_class = DayClass::weekday;
  std::size_t validation_count = 0;
  double class_median = 0;
  bool kept = true;
  std::string reason;
};

// Decision per day from per-day counts: dropped when below low_factor or above
// high_factor times the median of its day class.
std::vector<DayFilterReport> classify_days(const std::map<Day, std::size_t>& counts,
                                           double low_factor, double high_factor,
                                           const Calendar& calendar = {});

struct DayFilterResult {
  std::vector<Validation> kept;
  std::vector<DayFilterReport> report;
};

DayFilterResult filter_anomalous_days(const std::vector<Validation>& validations,
                                      double low_factor = 0.5, double high_factor = 2.0,
                                      const Calendar& calendar = {});

void write_day_filter_report(const std::string& path, const std::vector<DayFilterReport>& report);

// Lookup helpers shared by the analysis modules. Both keep pointers into the
// vector they were built from, which must outlive the index.
class RouteIndex {
 public:
  explicit RouteIndex(const std::vector<RouteDef>& routes);
  explicit RouteIndex(std::vector<RouteDef>&&) = delete;
  // All directions recorded under `route_id`, in input order. Empty if unknown.
  const std::vector<const RouteDef*>& directions(std::string_view route_id) const;

 private:
  std::unordered_map<std::string, std::vector<const RouteDef*>> by_id_;
};

class StopIndex {
 public:
  explicit StopIndex(const std::vector<Stop>& stops);
  explicit StopIndex(std::vector<Stop>&&) = delete;
  const Stop* find(std::string_view stop_id) const;

 private:
  std::unordered_map<std::string, const Stop*> by_id_;
};

}  // namespace transitnet
