#pragma once

#include "transitnet/ingest.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace transitnet {

// Synthetic city parameters. Every field maps to a key of the same name in
// the key = value config file (see README for the table of keys).
struct SynthConfig {
  // network
  std::size_t stops = 400;
  std::size_t communities = 4;
  std::size_t routes_per_community = 10;  // RouteDef records per cluster
  std::size_t trunk_routes = 6;           // inter-cluster RouteDef records
  std::size_t terminals = 2;
  std::size_t route_min_stops = 12;
  std::size_t route_max_stops = 24;
  std::size_t trunk_stops_per_side = 6;
  double stop_spacing_m = 150;
  double hop_radius_fraction = 0.6;
  double city_radius_km = 12;
  double center_lat = -3.7319;
  double center_lon = -38.5267;

  // fleet
  std::size_t vehicles_per_line = 2;
  double pings_per_minute = 2.0;
  double bus_speed_mps = 5.0;
  double layover_minutes = 4;
  int service_start_hour = 5;
  int service_end_hour = 23;
  double gps_noise_m = 4.0;

  // demand
  std::size_t users = 500;
  std::size_t days = 7;
  std::string start_date = "2015-03-11";
  int utc_offset_minutes = -180;
  double three_trip_fraction = 0.3;
  double single_trip_fraction = 0.03;
  double inter_commute_fraction = 0.3;
  double weekday_travel_prob = 0.9;
  double saturday_travel_prob = 0.6;
  double sunday_travel_prob = 0.4;
  double modal_gap_fraction = 0.0;
  double late_validation_fraction = 0.0;
  double terminal_validation_prob = 1.0;

  std::size_t total_routes() const { return communities * routes_per_community + trunk_routes; }
};

SynthConfig load_synth_config(const std::string& path);
void save_synth_config(const std::string& path, const SynthConfig& cfg);
// Applies one "key = value" assignment; throws a config error on unknown keys.
void set_synth_option(SynthConfig& cfg, const std::string& key, const std::string& value);

// Reference configurations.
SynthConfig fortaleza_scale_config();

// One leg the synthetic rider actually travelled.
struct GroundTruthOd {
  std::string user_id;
  Day day;
  int leg_index = 1;
  std::string origin_stop_id;
  std::string destination_stop_id;
  bool full_on_bus = true;  // false for riders with injected modal gaps
};

struct SynthBundle {
  Dataset dataset;
  std::vector<GroundTruthOd> truth;
  std::vector<std::pair<std::string, int>> planted;  // stop_id -> cluster
};

// Deterministic for a fixed (config, seed). Throws a config error when the
// configuration cannot be realised.
SynthBundle generate_synthetic_city(const SynthConfig& cfg, std::uint64_t seed);

inline constexpr const char* kGroundTruthFile = "ground_truth.csv";
inline constexpr const char* kPlantedFile = "planted_communities.csv";

void write_synth_bundle(const std::string& dir, const SynthBundle& bundle);
std::vector<GroundTruthOd> load_ground_truth(const std::string& path);
std::vector<std::pair<std::string, int>> load_planted(const std::string& path);

}  // namespace transitnet
