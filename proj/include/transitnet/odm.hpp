#pragma once

#include "transitnet/ingest.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace transitnet {

struct Coordinate {
  double lat = 0;
  double lon = 0;
};

enum class BoardingSource { gps_match, terminal };

struct Boarding {
  std::string user_id;
  Timestamp timestamp;
  std::string route_id;  // empty when a terminal validation carries no route
  std::string stop_id;
  BoardingSource source = BoardingSource::gps_match;
};

struct OdPair {
  std::string user_id;
  Day day;
  int leg_index = 1;
  std::string origin_stop_id;
  std::string destination_stop_id;
  Timestamp origin_time;

  friend bool operator==(const OdPair&, const OdPair&) = default;
};

enum class ChainOutcome {
  chained = 0,
  dropped_single_boarding,
  dropped_unreachable,
  corrected_intermediate,
  corrected_origin_snap,
};
inline constexpr std::size_t kChainOutcomeCount = 5;
const char* to_string(ChainOutcome o);

struct UserDayOutcome {
  std::string user_id;
  Day day;
  std::size_t boardings = 0;
  std::size_t pairs = 0;
  ChainOutcome outcome = ChainOutcome::chained;
};

struct ChainDiagnostics {
  std::array<std::size_t, kChainOutcomeCount> outcome_counts{};
  std::size_t unlocatable = 0;     // no ping of the vehicle within max_gap
  std::size_t unsnappable = 0;     // nearest itinerary stop beyond the snap radius
  std::size_t unresolved = 0;      // unknown route, terminal or stop
  std::size_t degenerate_pairs = 0;
  std::vector<UserDayOutcome> user_days;

  std::size_t count(ChainOutcome o) const { return outcome_counts[static_cast<std::size_t>(o)]; }
  void record(UserDayOutcome u);
  void merge(const ChainDiagnostics& other);
};

struct OdmConfig {
  std::int64_t max_gap_s = 120;
  double snap_radius_m = 300;
  double recurrence_fraction = 0.5;  // of the user's active days in the day class
  std::size_t min_recurrence = 2;
  bool correct = true;
};

// Pings grouped by vehicle and sorted by time.
class PingIndex {
 public:
  struct Fix {
    std::int64_t epoch;
    double lat, lon;
    const std::string* route_id;
  };

  explicit PingIndex(const std::vector<GpsPing>& pings);
  // Ping nearest in time to `t` within max_gap; ties go to the earlier ping.
  std::optional<Fix> nearest(const std::string& vehicle_id, std::int64_t t, std::int64_t max_gap) const;

 private:
  std::unordered_map<std::string, std::vector<Fix>> by_vehicle_;
};

// Position of the validating vehicle, or nullopt when unlocatable.
std::optional<Coordinate> locate_validation(const Validation& v, const PingIndex& pings,
                                            std::int64_t max_gap_s = 120);

// Nearest itinerary stop within max_radius. Ties go to the earlier position.
std::optional<std::string> snap_to_stop(const Coordinate& c, const RouteDef& route, const StopIndex& stops,
                                        double max_radius_m = 300);
// Same over every direction of a route id, scanning directions in order.
std::optional<std::string> snap_to_stop(const Coordinate& c, const std::vector<const RouteDef*>& route,
                                        const StopIndex& stops, double max_radius_m = 300);

// True when some direction of the route visits `to` after `from`.
bool route_reaches(const std::vector<const RouteDef*>& route, const std::string& from, const std::string& to);

// n >= 2 boardings give n legs closing back at the first stop; fewer give none.
std::vector<OdPair> chain_daily_trips(const std::vector<Boarding>& boardings);

struct UserDay {
  Day day;
  std::vector<Boarding> boardings;  // time-ordered
};

struct CorrectionResult {
  std::vector<UserDay> days;               // corrected boardings, dropped days removed
  std::vector<UserDayOutcome> outcomes;    // one per input day
};

// Origin snap then missing-intermediate repair over one user's history.
CorrectionResult correct_user_history(const std::string& user_id, std::vector<UserDay> history,
                                      const RouteIndex& routes, const OdmConfig& cfg,
                                      const Calendar& calendar = {});

struct CorrectedPairs {
  std::vector<OdPair> pairs;
  ChainDiagnostics diagnostics;
};

CorrectedPairs recurring_pattern_correction(const std::string& user_id, std::vector<UserDay> history,
                                            const RouteIndex& routes, const OdmConfig& cfg = {},
                                            const Calendar& calendar = {});

struct StopEmbarkings {
  std::size_t total = 0;  // resolved boardings at the stop
  std::size_t used = 0;   // boardings that became the origin of an emitted pair
};

struct OdmResult {
  std::vector<OdPair> pairs;
  ChainDiagnostics diagnostics;
  std::map<std::string, StopEmbarkings> embarkings;
};

OdmResult build_odm(const std::vector<Validation>& validations, const std::vector<GpsPing>& pings,
                    const std::vector<RouteDef>& routes, const std::vector<Stop>& stops,
                    const std::vector<Terminal>& terminals, const OdmConfig& cfg = {},
                    const Calendar& calendar = {});

void write_odpairs(const std::string& path, const std::vector<OdPair>& pairs);
std::vector<OdPair> load_odpairs(const std::string& path);
void write_diagnostics(const std::string& path, const ChainDiagnostics& d);
void write_diagnostics_summary(const std::string& path, const ChainDiagnostics& d);
void write_embarkings(const std::string& path, const std::map<std::string, StopEmbarkings>& e);
std::map<std::string, StopEmbarkings> load_embarkings(const std::string& path);

}  // namespace transitnet
