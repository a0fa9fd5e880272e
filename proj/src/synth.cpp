#include "transitnet/synth.hpp"

#include "transitnet/common.hpp"
#include "transitnet/csv.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <variant>

namespace transitnet {

// ---------------------------------------------------------------------------
// Config file

namespace {

using Field = std::variant<std::size_t SynthConfig::*, double SynthConfig::*, int SynthConfig::*,
                           std::string SynthConfig::*>;

const std::vector<std::pair<std::string, Field>>& config_fields() {
  static const std::vector<std::pair<std::string, Field>> fields{
      {"stops", &SynthConfig::stops},
      {"communities", &SynthConfig::communities},
      {"routes_per_community", &SynthConfig::routes_per_community},
      {"trunk_routes", &SynthConfig::trunk_routes},
      {"terminals", &SynthConfig::terminals},
      {"route_min_stops", &SynthConfig::route_min_stops},
      {"route_max_stops", &SynthConfig::route_max_stops},
      {"trunk_stops_per_side", &SynthConfig::trunk_stops_per_side},
      {"stop_spacing_m", &SynthConfig::stop_spacing_m},
      {"hop_radius_fraction", &SynthConfig::hop_radius_fraction},
      {"city_radius_km", &SynthConfig::city_radius_km},
      {"center_lat", &SynthConfig::center_lat},
      {"center_lon", &SynthConfig::center_lon},
      {"vehicles_per_line", &SynthConfig::vehicles_per_line},
      {"pings_per_minute", &SynthConfig::pings_per_minute},
      {"bus_speed_mps", &SynthConfig::bus_speed_mps},
      {"layover_minutes", &SynthConfig::layover_minutes},
      {"service_start_hour", &SynthConfig::service_start_hour},
      {"service_end_hour", &SynthConfig::service_end_hour},
      {"gps_noise_m", &SynthConfig::gps_noise_m},
      {"users", &SynthConfig::users},
      {"days", &SynthConfig::days},
      {"start_date", &SynthConfig::start_date},
      {"utc_offset_minutes", &SynthConfig::utc_offset_minutes},
      {"three_trip_fraction", &SynthConfig::three_trip_fraction},
      {"single_trip_fraction", &SynthConfig::single_trip_fraction},
      {"inter_commute_fraction", &SynthConfig::inter_commute_fraction},
      {"weekday_travel_prob", &SynthConfig::weekday_travel_prob},
      {"saturday_travel_prob", &SynthConfig::saturday_travel_prob},
      {"sunday_travel_prob", &SynthConfig::sunday_travel_prob},
      {"modal_gap_fraction", &SynthConfig::modal_gap_fraction},
      {"late_validation_fraction", &SynthConfig::late_validation_fraction},
      {"terminal_validation_prob", &SynthConfig::terminal_validation_prob},
  };
  return fields;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

void set_synth_option(SynthConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& [name, field] : config_fields()) {
    if (name != key) continue;
    std::visit(
        [&](auto member) {
          using T = std::remove_reference_t<decltype(cfg.*member)>;
          if constexpr (std::is_same_v<T, std::string>) {
            cfg.*member = value;
          } else if constexpr (std::is_same_v<T, double>) {
            auto v = csv::to_double(value);
            if (!v) throw_config(fmt::format("synth config: {} expects a number, got '{}'", key, value));
            cfg.*member = *v;
          } else {
            auto v = csv::to_int(value);
            if (!v || (std::is_unsigned_v<T> && *v < 0)) {
              throw_config(fmt::format("synth config: {} expects an integer, got '{}'", key, value));
            }
            cfg.*member = static_cast<T>(*v);
          }
        },
        field);
    return;
  }
  throw_config("synth config: unknown key '" + key + "'");
}

SynthConfig load_synth_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_config("cannot open synth config " + path);
  SynthConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw_config(fmt::format("{}:{}: expected key = value", path, lineno));
    }
    set_synth_option(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void save_synth_config(const std::string& path, const SynthConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw_artifact("cannot write " + path);
  for (const auto& [name, field] : config_fields()) {
    std::visit([&](auto member) { out << name << " = " << fmt::format("{}", cfg.*member) << '\n'; },
               field);
  }
}

SynthConfig fortaleza_scale_config() {
  SynthConfig cfg;
  cfg.stops = 4783;
  cfg.communities = 10;
  cfg.routes_per_community = 34;
  cfg.trunk_routes = 19;  // 10 * 34 + 19 = 359 route records
  cfg.terminals = 7;
  cfg.route_min_stops = 20;
  cfg.route_max_stops = 40;
  cfg.trunk_stops_per_side = 10;
  cfg.vehicles_per_line = 3;
  cfg.pings_per_minute = 1.0;
  cfg.users = 95000;
  cfg.days = 7;
  cfg.start_date = "2015-03-11";
  return cfg;
}

// ---------------------------------------------------------------------------
// Generator

namespace {

constexpr double kMetersPerDegree = 111320.0;

struct Point {
  double x = 0;  // meters east of the city center
  double y = 0;  // meters north
};

double dist(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(eng_);
  }
  long long range(long long lo, long long hi) {
    return std::uniform_int_distribution<long long>(lo, hi)(eng_);
  }
  bool bernoulli(double p) { return p > 0 && uniform() < p; }
  double normal(double sd) { return sd > 0 ? std::normal_distribution<double>(0.0, sd)(eng_) : 0.0; }

 private:
  std::mt19937_64 eng_;
};

enum class LineKind { intra, trunk };

struct Line {
  LineKind kind;
  int cluster_a = 0;
  int cluster_b = -1;
  std::size_t a_len = 0;           // trunk: stops of the outbound itinerary inside cluster_a
  bool paired = true;              // outbound + inbound, otherwise a single loop record
  std::vector<std::size_t> stops;  // outbound itinerary (stop indices)
  std::vector<std::size_t> records;
};

struct Record {
  std::size_t line;
  std::vector<std::size_t> stops;
  std::vector<std::int64_t> offset;  // seconds from trip start to arrival at each position
  std::int64_t duration() const { return offset.back(); }
};

struct Trip {
  std::int64_t start;
  std::size_t vehicle;
  std::size_t record;
};

void check_config(const SynthConfig& c) {
  auto fail = [](const std::string& m) { throw_config("infeasible synth config: " + m); };
  if (c.communities == 0) fail("communities must be >= 1");
  if (c.stops < c.communities * 2) fail("need at least 2 stops per community");
  const std::size_t min_cluster = c.stops / c.communities;
  if (c.route_min_stops < 2) fail("route_min_stops must be >= 2");
  if (c.route_min_stops > c.route_max_stops) fail("route_min_stops > route_max_stops");
  if (c.route_max_stops > min_cluster) {
    fail(fmt::format("route itinerary of {} stops exceeds cluster stop count {}", c.route_max_stops,
                     min_cluster));
  }
  if (c.trunk_routes > 0 && c.communities < 2) fail("trunk routes need >= 2 communities");
  if (c.trunk_routes > 0 && (c.trunk_stops_per_side < 1 || c.trunk_stops_per_side > min_cluster)) {
    fail("trunk_stops_per_side must be in [1, cluster stop count]");
  }
  if (c.routes_per_community < 2) fail("routes_per_community must be >= 2 (one paired line)");
  if (c.inter_commute_fraction > 0 && c.trunk_routes < 2) {
    fail("inter_commute_fraction > 0 requires at least one paired trunk line (trunk_routes >= 2)");
  }
  if (!(c.pings_per_minute > 0)) fail("pings_per_minute must be positive");
  const double interval = 60.0 / c.pings_per_minute;
  if (std::abs(interval - std::round(interval)) > 1e-9 || interval < 1) {
    fail("60 / pings_per_minute must be a whole number of seconds");
  }
  if (c.service_start_hour < 0 || c.service_end_hour > 24 ||
      c.service_end_hour - c.service_start_hour < 12) {
    fail("service window must span at least 12 hours within the day");
  }
  if (c.vehicles_per_line == 0) fail("vehicles_per_line must be >= 1");
  if (c.days == 0) fail("days must be >= 1");
  if (!parse_date(c.start_date)) fail("start_date must be YYYY-MM-DD");
  if (!(c.bus_speed_mps > 0) || !(c.stop_spacing_m > 0)) fail("speed and spacing must be positive");
  if (c.terminals > c.stops) fail("more terminals than stops");
}

class Generator {
 public:
  Generator(const SynthConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), rng_(seed), interval_(static_cast<std::int64_t>(std::lround(60.0 / cfg.pings_per_minute))) {}

  SynthBundle run() {
    place_stops();
    build_lines();
    build_records();
    choose_terminals();
    SynthBundle out;
    emit_network(out);
    schedule_and_ping(out);
    simulate_riders(out);
    return out;
  }

 private:
  // --- geometry -----------------------------------------------------------
  void place_stops() {
    const std::size_t k = cfg_.communities;
    cluster_of_.reserve(cfg_.stops);
    members_.assign(k, {});
    radius_.assign(k, 0);
    double max_r = 0;
    std::vector<std::size_t> sizes(k);
    for (std::size_t c = 0; c < k; ++c) {
      sizes[c] = cfg_.stops / k + (c < cfg_.stops % k ? 1 : 0);
      radius_[c] = cfg_.stop_spacing_m * std::sqrt(static_cast<double>(sizes[c]) / std::numbers::pi);
      max_r = std::max(max_r, radius_[c]);
    }
    double ring = cfg_.city_radius_km * 1000.0;
    if (k > 1) ring = std::max(ring, 1.6 * max_r / std::sin(std::numbers::pi / static_cast<double>(k)));
    const double min_sep = 0.35 * cfg_.stop_spacing_m;

    for (std::size_t c = 0; c < k; ++c) {
      const double ang = 2 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(k);
      const Point center = k == 1 ? Point{} : Point{ring * std::cos(ang), ring * std::sin(ang)};
      centers_.push_back(center);
      for (std::size_t i = 0; i < sizes[c]; ++i) {
        Point p;
        for (int attempt = 0; attempt < 200; ++attempt) {
          const double r = radius_[c] * std::sqrt(rng_.uniform());
          const double t = rng_.uniform(0, 2 * std::numbers::pi);
          p = {center.x + r * std::cos(t), center.y + r * std::sin(t)};
          bool ok = true;
          for (std::size_t other : members_[c]) {
            if (dist(pos_[other], p) < min_sep) {
              ok = false;
              break;
            }
          }
          if (ok) break;
        }
        members_[c].push_back(pos_.size());
        cluster_of_.push_back(static_cast<int>(c));
        pos_.push_back(p);
      }
    }
    covered_.assign(pos_.size(), false);
  }

  // Random walk of `len` distinct stops inside cluster c. Hops stay within the
  // hop radius and prefer stops no route has visited yet.
  std::vector<std::size_t> walk(int c, std::size_t len, std::optional<std::size_t> start = {}) {
    const auto& mem = members_[static_cast<std::size_t>(c)];
    const double hop = cfg_.hop_radius_fraction * radius_[static_cast<std::size_t>(c)];
    std::vector<std::size_t> out;
    std::vector<char> used(pos_.size(), 0);
    std::size_t cur;
    if (start) {
      cur = *start;
    } else {
      std::vector<std::size_t> fresh;
      for (auto s : mem) {
        if (!covered_[s]) fresh.push_back(s);
      }
      cur = (!fresh.empty() && rng_.bernoulli(0.8)) ? fresh[rng_.index(fresh.size())]
                                                     : mem[rng_.index(mem.size())];
    }
    out.push_back(cur);
    used[cur] = 1;
    covered_[cur] = true;
    std::vector<std::size_t> cand, fresh;
    while (out.size() < len) {
      cand.clear();
      fresh.clear();
      for (auto s : mem) {
        if (used[s] || dist(pos_[s], pos_[cur]) > hop) continue;
        cand.push_back(s);
        if (!covered_[s]) fresh.push_back(s);
      }
      std::size_t next;
      if (!fresh.empty() && rng_.bernoulli(0.7)) {
        next = fresh[rng_.index(fresh.size())];
      } else if (!cand.empty()) {
        next = cand[rng_.index(cand.size())];
      } else {
        double best = std::numeric_limits<double>::infinity();
        next = cur;
        for (auto s : mem) {
          if (!used[s] && dist(pos_[s], pos_[cur]) < best) {
            best = dist(pos_[s], pos_[cur]);
            next = s;
          }
        }
        if (next == cur) break;
      }
      out.push_back(next);
      used[next] = 1;
      covered_[next] = true;
      cur = next;
    }
    return out;
  }

  std::size_t route_len() {
    return static_cast<std::size_t>(rng_.range(static_cast<long long>(cfg_.route_min_stops),
                                               static_cast<long long>(cfg_.route_max_stops)));
  }

  void build_lines() {
    const std::size_t k = cfg_.communities;
    for (std::size_t c = 0; c < k; ++c) {
      const std::size_t first_line = lines_.size();
      const std::size_t pairs = cfg_.routes_per_community / 2;
      const bool loop = cfg_.routes_per_community % 2 == 1;
      for (std::size_t i = 0; i < pairs + (loop ? 1 : 0); ++i) {
        Line line{LineKind::intra, static_cast<int>(c), -1, 0, i < pairs, {}, {}};
        line.stops = walk(static_cast<int>(c), route_len());
        lines_.push_back(std::move(line));
      }
      // Stops no walk reached are appended to the paired line ending nearest to them.
      std::vector<std::size_t> left;
      for (auto s : members_[c]) {
        if (!covered_[s]) left.push_back(s);
      }
      for (std::size_t i = left.size(); i > 1; --i) std::swap(left[i - 1], left[rng_.index(i)]);
      for (auto s : left) {
        std::size_t best = first_line;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t li = first_line; li < lines_.size(); ++li) {
          if (!lines_[li].paired) continue;
          const double d = dist(pos_[lines_[li].stops.back()], pos_[s]);
          if (d < best_d) {
            best_d = d;
            best = li;
          }
        }
        lines_[best].stops.push_back(s);
        covered_[s] = true;
      }
    }

    const std::size_t trunk_pairs = cfg_.trunk_routes / 2;
    const bool trunk_loop = cfg_.trunk_routes % 2 == 1;
    const std::size_t n_trunks = trunk_pairs + (trunk_loop ? 1 : 0);
    for (std::size_t j = 0; j < n_trunks; ++j) {
      int a, b;
      if (j + 1 < k) {
        a = static_cast<int>(j);
        b = static_cast<int>(j + 1);
      } else {
        a = static_cast<int>(rng_.index(k));
        do b = static_cast<int>(rng_.index(k)); while (b == a);
      }
      Line line{LineKind::trunk, a, b, 0, j < trunk_pairs, {}, {}};
      line.stops = walk(a, cfg_.trunk_stops_per_side);
      line.a_len = line.stops.size();
      // Enter cluster b at its stop nearest to cluster a.
      std::size_t gate = members_[static_cast<std::size_t>(b)].front();
      for (auto s : members_[static_cast<std::size_t>(b)]) {
        if (dist(pos_[s], centers_[static_cast<std::size_t>(a)]) <
            dist(pos_[gate], centers_[static_cast<std::size_t>(a)])) {
          gate = s;
        }
      }
      auto side_b = walk(b, cfg_.trunk_stops_per_side, gate);
      line.stops.insert(line.stops.end(), side_b.begin(), side_b.end());
      lines_.push_back(std::move(line));
    }
  }

  Record make_record(std::size_t line, std::vector<std::size_t> stops) {
    Record r{line, std::move(stops), {}};
    r.offset.push_back(0);
    const double per_interval = cfg_.bus_speed_mps * static_cast<double>(interval_);
    for (std::size_t p = 0; p + 1 < r.stops.size(); ++p) {
      const double d = dist(pos_[r.stops[p]], pos_[r.stops[p + 1]]);
      const auto n = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(d / per_interval)));
      r.offset.push_back(r.offset.back() + n * interval_);
    }
    return r;
  }

  void build_records() {
    for (std::size_t li = 0; li < lines_.size(); ++li) {
      auto& line = lines_[li];
      if (line.paired) {
        line.records.push_back(records_.size());
        records_.push_back(make_record(li, line.stops));
        std::vector<std::size_t> back(line.stops.rbegin(), line.stops.rend());
        line.records.push_back(records_.size());
        records_.push_back(make_record(li, back));
      } else {
        auto loop = line.stops;
        loop.push_back(loop.front());
        line.records.push_back(records_.size());
        records_.push_back(make_record(li, loop));
      }
    }
  }

  void choose_terminals() {
    // First stops of intra lines, spread round-robin over clusters.
    std::vector<std::vector<std::size_t>> firsts(cfg_.communities);
    for (const auto& line : lines_) {
      if (line.kind == LineKind::intra) firsts[static_cast<std::size_t>(line.cluster_a)].push_back(line.stops.front());
    }
    std::vector<char> is_term(pos_.size(), 0);
    for (std::size_t round = 0; terminal_stops_.size() < cfg_.terminals; ++round) {
      bool any = false;
      for (std::size_t c = 0; c < cfg_.communities && terminal_stops_.size() < cfg_.terminals; ++c) {
        if (round < firsts[c].size()) {
          any = true;
          const auto s = firsts[c][round];
          if (!is_term[s]) {
            is_term[s] = 1;
            terminal_stops_.push_back(s);
          }
        }
      }
      if (!any) break;
    }
    terminal_of_stop_.assign(pos_.size(), -1);
    for (std::size_t t = 0; t < terminal_stops_.size(); ++t) {
      terminal_of_stop_[terminal_stops_[t]] = static_cast<int>(t);
    }
  }

  std::pair<double, double> to_latlon(const Point& p) const {
    const double lat = cfg_.center_lat + p.y / kMetersPerDegree;
    const double lon = cfg_.center_lon +
                       p.x / (kMetersPerDegree * std::cos(cfg_.center_lat * std::numbers::pi / 180));
    return {lat, lon};
  }

  static double round6(double v) { return std::round(v * 1e6) / 1e6; }

  std::string stop_id(std::size_t s) const { return fmt::format("S{:05}", s + 1); }
  std::string line_id(std::size_t l) const { return fmt::format("L{:04}", l + 1); }
  std::string vehicle_id(std::size_t v) const { return fmt::format("V{:05}", v + 1); }

  void emit_network(SynthBundle& out) {
    auto& ds = out.dataset;
    for (std::size_t s = 0; s < pos_.size(); ++s) {
      auto [lat, lon] = to_latlon(pos_[s]);
      ds.stops.push_back({stop_id(s), round6(lat), round6(lon), terminal_of_stop_[s] >= 0});
      out.planted.emplace_back(stop_id(s), cluster_of_[s]);
    }
    for (std::size_t li = 0; li < lines_.size(); ++li) {
      const auto& line = lines_[li];
      for (std::size_t k = 0; k < line.records.size(); ++k) {
        RouteDef def{line_id(li), k == 0 ? Direction::outbound : Direction::inbound, {}};
        for (auto s : records_[line.records[k]].stops) def.itinerary.push_back(stop_id(s));
        ds.routes.push_back(std::move(def));
      }
    }
    for (std::size_t t = 0; t < terminal_stops_.size(); ++t) {
      ds.terminals.push_back({fmt::format("T{:02}", t + 1), stop_id(terminal_stops_[t])});
    }
  }

  // --- fleet ------------------------------------------------------------
  std::int64_t day_start(std::size_t d) const {
    const auto start = *parse_date(cfg_.start_date);
    return (static_cast<std::int64_t>(start.time_since_epoch().count()) + static_cast<std::int64_t>(d)) *
               86400 -
           static_cast<std::int64_t>(cfg_.utc_offset_minutes) * 60;
  }

  Timestamp ts(std::int64_t epoch) const { return Timestamp{epoch, cfg_.utc_offset_minutes}; }

  void schedule_and_ping(SynthBundle& out) {
    const std::int64_t layover =
        std::max<std::int64_t>(1, std::llround(cfg_.layover_minutes * 60.0 / static_cast<double>(interval_))) *
        interval_;
    trips_.assign(cfg_.days, std::vector<std::vector<Trip>>(records_.size()));

    std::size_t vehicle = 0;
    std::vector<std::vector<std::size_t>> vehicles_of_line(lines_.size());
    for (std::size_t li = 0; li < lines_.size(); ++li) {
      for (std::size_t v = 0; v < cfg_.vehicles_per_line; ++v) vehicles_of_line[li].push_back(vehicle++);
    }

    auto& pings = out.dataset.pings;
    for (std::size_t d = 0; d < cfg_.days; ++d) {
      const std::int64_t svc_start = day_start(d) + cfg_.service_start_hour * 3600;
      const std::int64_t svc_end = day_start(d) + cfg_.service_end_hour * 3600;
      for (std::size_t li = 0; li < lines_.size(); ++li) {
        const auto& line = lines_[li];
        std::int64_t cycle = 0;
        for (auto r : line.records) cycle += records_[r].duration() + layover;
        const auto nv = vehicles_of_line[li].size();
        for (std::size_t vi = 0; vi < nv; ++vi) {
          const std::size_t veh = vehicles_of_line[li][vi];
          const std::int64_t stagger =
              (cycle * static_cast<std::int64_t>(vi) / static_cast<std::int64_t>(nv)) / interval_ * interval_;
          std::vector<Trip> mine;
          std::int64_t t = svc_start + stagger;
          for (std::size_t n = 0;; ++n) {
            const std::size_t rec = line.records[n % line.records.size()];
            if (t + records_[rec].duration() > svc_end) break;
            mine.push_back({t, veh, rec});
            t += records_[rec].duration() + layover;
          }
          for (const auto& trip : mine) trips_[d][trip.record].push_back(trip);
          emit_vehicle_pings(pings, mine, line_id(li));
        }
      }
    }
    for (auto& per_day : trips_) {
      for (auto& list : per_day) {
        std::sort(list.begin(), list.end(), [](const Trip& a, const Trip& b) {
          return a.start != b.start ? a.start < b.start : a.vehicle < b.vehicle;
        });
      }
    }
  }

  void push_ping(std::vector<GpsPing>& pings, std::size_t veh, const std::string& route,
                 std::int64_t t, const Point& p) {
    const Point noisy{p.x + rng_.normal(cfg_.gps_noise_m), p.y + rng_.normal(cfg_.gps_noise_m)};
    auto [lat, lon] = to_latlon(noisy);
    pings.push_back({vehicle_id(veh), route, ts(t), round6(lat), round6(lon)});
  }

  void emit_vehicle_pings(std::vector<GpsPing>& pings, const std::vector<Trip>& mine,
                          const std::string& route) {
    for (std::size_t i = 0; i < mine.size(); ++i) {
      const auto& trip = mine[i];
      const auto& rec = records_[trip.record];
      for (std::size_t p = 0; p + 1 < rec.stops.size(); ++p) {
        const std::int64_t steps = (rec.offset[p + 1] - rec.offset[p]) / interval_;
        const Point& a = pos_[rec.stops[p]];
        const Point& b = pos_[rec.stops[p + 1]];
        for (std::int64_t s = 0; s < steps; ++s) {
          const double f = static_cast<double>(s) / static_cast<double>(steps);
          push_ping(pings, trip.vehicle, route, trip.start + rec.offset[p] + s * interval_,
                    {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)});
        }
      }
      const std::int64_t arrive = trip.start + rec.duration();
      push_ping(pings, trip.vehicle, route, arrive, pos_[rec.stops.back()]);
      if (i + 1 < mine.size()) {
        for (std::int64_t t = arrive + interval_; t < mine[i + 1].start; t += interval_) {
          push_ping(pings, trip.vehicle, route, t, pos_[rec.stops.back()]);
        }
      }
    }
  }

  // --- riders -----------------------------------------------------------
  struct Rider {
    std::size_t line;
    std::size_t home, work, other;  // positions on the outbound itinerary
    int trips;
    bool gap_prone;
    std::int64_t depart_s;  // seconds after local midnight
    std::int64_t work_s;
  };

  const Trip* board(std::size_t d, std::size_t rec, std::size_t pos, std::int64_t earliest) const {
    const auto& list = trips_[d][rec];
    const std::int64_t off = records_[rec].offset[pos];
    auto it = std::lower_bound(list.begin(), list.end(), earliest - off,
                               [](const Trip& t, std::int64_t v) { return t.start < v; });
    return it == list.end() ? nullptr : &*it;
  }

  void simulate_riders(SynthBundle& out) {
    std::vector<std::size_t> intra_lines, trunk_lines;
    for (std::size_t li = 0; li < lines_.size(); ++li) {
      if (!lines_[li].paired) continue;
      (lines_[li].kind == LineKind::intra ? intra_lines : trunk_lines).push_back(li);
    }
    std::vector<std::vector<std::size_t>> intra_by_cluster(cfg_.communities);
    for (auto li : intra_lines) intra_by_cluster[static_cast<std::size_t>(lines_[li].cluster_a)].push_back(li);

    const Calendar calendar;
    const auto first_day = *parse_date(cfg_.start_date);
    const std::int64_t jitter_max = std::min<std::int64_t>(10, interval_ / 3);
    auto& validations = out.dataset.validations;

    for (std::size_t u = 0; u < cfg_.users; ++u) {
      const std::string uid = fmt::format("U{:06}", u + 1);
      Rider rd{};
      const bool inter = !trunk_lines.empty() && rng_.bernoulli(cfg_.inter_commute_fraction);
      if (inter) {
        rd.line = trunk_lines[rng_.index(trunk_lines.size())];
        const auto& line = lines_[rd.line];
        rd.home = rng_.index(line.a_len);
        rd.work = line.a_len + rng_.index(line.stops.size() - line.a_len);
        rd.trips = 2;
      } else {
        const auto c = static_cast<std::size_t>(cluster_of_[rng_.index(pos_.size())]);
        const auto& pool = intra_by_cluster[c];
        rd.line = pool[rng_.index(pool.size())];
        const std::size_t n = lines_[rd.line].stops.size();
        const bool three = n >= 3 && rng_.bernoulli(cfg_.three_trip_fraction);
        if (three) {
          rd.home = rng_.index(n - 2);
          rd.work = rd.home + 1 + rng_.index(n - 2 - rd.home);
          rd.other = rd.work + 1 + rng_.index(n - 1 - rd.work);
          rd.trips = 3;
        } else {
          rd.home = rng_.index(n - 1);
          rd.work = rd.home + 1 + rng_.index(n - 1 - rd.home);
          rd.trips = 2;
        }
      }
      rd.gap_prone = rd.trips == 3 && rng_.bernoulli(cfg_.modal_gap_fraction);
      rd.depart_s = rng_.range(6 * 3600, 9 * 3600);
      rd.work_s = rng_.range(7 * 3600, 9 * 3600);

      const auto& line = lines_[rd.line];
      const std::size_t out_rec = line.records[0];
      const std::size_t in_rec = line.records[1];
      const std::size_t n = line.stops.size();

      for (std::size_t d = 0; d < cfg_.days; ++d) {
        const Day day = first_day + std::chrono::days{static_cast<long>(d)};
        const DayClass cls = calendar.classify(day);
        const double p = cls == DayClass::weekday    ? cfg_.weekday_travel_prob
                         : cls == DayClass::saturday ? cfg_.saturday_travel_prob
                                                     : cfg_.sunday_travel_prob;
        if (!rng_.bernoulli(p)) continue;
        const bool single = rng_.bernoulli(cfg_.single_trip_fraction);
        const bool gap = rd.gap_prone && rng_.bernoulli(0.4);

        struct Leg {
          std::size_t rec, from, to;  // positions on rec
          bool by_bus;
        };
        std::vector<Leg> legs;
        legs.push_back({out_rec, rd.home, rd.work, true});
        if (rd.trips == 2) {
          legs.push_back({in_rec, n - 1 - rd.work, n - 1 - rd.home, true});
        } else {
          legs.push_back({out_rec, rd.work, rd.other, !gap});
          legs.push_back({in_rec, n - 1 - rd.other, n - 1 - rd.home, true});
        }
        if (single) legs.resize(1);

        // Board every leg first; a day that cannot be served is not travelled.
        std::vector<const Trip*> rides;
        std::int64_t t = day_start(d) + rd.depart_s + rng_.range(-900, 900);
        bool ok = true;
        for (std::size_t i = 0; i < legs.size(); ++i) {
          if (i == 1) t += rd.trips == 2 ? rd.work_s : rng_.range(3 * 3600, 5 * 3600);
          if (i == 2) t += rng_.range(3600, 2 * 3600);
          const Trip* trip = board(d, legs[i].rec, legs[i].from, t);
          if (!trip) {
            ok = false;
            break;
          }
          rides.push_back(trip);
          t = trip->start + records_[legs[i].rec].offset[legs[i].to];
        }
        if (!ok) continue;

        for (std::size_t i = 0; i < legs.size(); ++i) {
          const auto& leg = legs[i];
          const auto& rec = records_[leg.rec];
          out.truth.push_back({uid, day, static_cast<int>(i + 1), stop_id(rec.stops[leg.from]),
                               stop_id(rec.stops[leg.to]), !rd.gap_prone});
          if (!leg.by_bus) continue;
          std::size_t vpos = leg.from;
          if (leg.to - leg.from >= 2 && rng_.bernoulli(cfg_.late_validation_fraction)) {
            vpos += 1 + rng_.index(std::min<std::size_t>(2, leg.to - leg.from - 1));
          }
          Validation v;
          v.user_id = uid;
          v.timestamp = ts(rides[i]->start + rec.offset[vpos] + rng_.range(0, jitter_max));
          v.route_id = line_id(rd.line);
          const int term = terminal_of_stop_[rec.stops[vpos]];
          if (term >= 0 && rng_.bernoulli(cfg_.terminal_validation_prob)) {
            v.terminal_id = fmt::format("T{:02}", term + 1);
          } else {
            v.vehicle_id = vehicle_id(rides[i]->vehicle);
          }
          validations.push_back(std::move(v));
        }
      }
    }
    std::stable_sort(validations.begin(), validations.end(), [](const Validation& a, const Validation& b) {
      return a.timestamp.epoch != b.timestamp.epoch ? a.timestamp.epoch < b.timestamp.epoch
                                                    : a.user_id < b.user_id;
    });
  }

  const SynthConfig& cfg_;
  Rng rng_;
  std::int64_t interval_;

  std::vector<Point> pos_;
  std::vector<int> cluster_of_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<double> radius_;
  std::vector<Point> centers_;
  std::vector<bool> covered_;
  std::vector<Line> lines_;
  std::vector<Record> records_;
  std::vector<std::size_t> terminal_stops_;
  std::vector<int> terminal_of_stop_;
  std::vector<std::vector<std::vector<Trip>>> trips_;  // [day][record] sorted by start
};

}  // namespace

SynthBundle generate_synthetic_city(const SynthConfig& cfg, std::uint64_t seed) {
  check_config(cfg);
  return Generator(cfg, seed).run();
}

void write_synth_bundle(const std::string& dir, const SynthBundle& bundle) {
  write_dataset_dir(dir, bundle.dataset);
  const std::filesystem::path base(dir);
  {
    csv::Writer w((base / kGroundTruthFile).string(),
                  {"user_id", "day", "leg_index", "origin_stop_id", "destination_stop_id", "full_on_bus"});
    for (const auto& g : bundle.truth) {
      w.row("{},{},{},{},{},{}", g.user_id, format_date(g.day), g.leg_index, g.origin_stop_id,
            g.destination_stop_id, g.full_on_bus ? 1 : 0);
    }
  }
  csv::Writer w((base / kPlantedFile).string(), {"stop_id", "community_id"});
  for (const auto& [stop, c] : bundle.planted) w.row("{},{}", stop, c);
}

std::vector<GroundTruthOd> load_ground_truth(const std::string& path) {
  csv::Reader r(path);
  r.require_header({"user_id", "day", "leg_index", "origin_stop_id", "destination_stop_id", "full_on_bus"});
  std::vector<GroundTruthOd> out;
  while (r.next()) {
    const auto& f = r.fields();
    auto day = f.size() == 6 ? parse_date(f[1]) : std::nullopt;
    auto leg = f.size() == 6 ? csv::to_int(f[2]) : std::nullopt;
    if (!day || !leg) throw_data(fmt::format("{}:{}: malformed ground truth row", path, r.line_number()));
    out.push_back({std::string(f[0]), *day, static_cast<int>(*leg), std::string(f[3]), std::string(f[4]),
                   f[5] == "1"});
  }
  return out;
}

std::vector<std::pair<std::string, int>> load_planted(const std::string& path) {
  csv::Reader r(path);
  r.require_header({"stop_id", "community_id"});
  std::vector<std::pair<std::string, int>> out;
  while (r.next()) {
    const auto& f = r.fields();
    auto c = f.size() == 2 ? csv::to_int(f[1]) : std::nullopt;
    if (!c) throw_data(fmt::format("{}:{}: malformed planted label row", path, r.line_number()));
    out.emplace_back(std::string(f[0]), static_cast<int>(*c));
  }
  return out;
}

}  // namespace transitnet
