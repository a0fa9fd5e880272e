#include "transitnet/ingest.hpp"

#include "transitnet/common.hpp"
#include "transitnet/csv.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <future>
#include <unordered_set>

namespace transitnet {

const char* to_string(Direction d) { return d == Direction::outbound ? "outbound" : "inbound"; }

const char* to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::stops: return "stops";
    case DatasetKind::routes: return "routes";
    case DatasetKind::terminals: return "terminals";
    case DatasetKind::pings: return "pings";
    case DatasetKind::validations: return "validations";
  }
  return "?";
}

std::optional<DatasetKind> parse_dataset_kind(std::string_view s) {
  for (auto k : {DatasetKind::stops, DatasetKind::routes, DatasetKind::terminals,
                 DatasetKind::pings, DatasetKind::validations}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

const std::vector<std::string>& csv_header(DatasetKind k) {
  static const std::vector<std::string> stops{"stop_id", "lat", "lon", "is_terminal"};
  static const std::vector<std::string> routes{"route_id", "direction", "seq", "stop_id"};
  static const std::vector<std::string> terminals{"terminal_id", "stop_id"};
  static const std::vector<std::string> pings{"vehicle_id", "route_id", "timestamp_iso8601", "lat",
                                              "lon"};
  static const std::vector<std::string> validations{"user_id", "timestamp_iso8601", "route_id",
                                                    "vehicle_id", "terminal_id"};
  switch (k) {
    case DatasetKind::stops: return stops;
    case DatasetKind::routes: return routes;
    case DatasetKind::terminals: return terminals;
    case DatasetKind::pings: return pings;
    case DatasetKind::validations: return validations;
  }
  return stops;
}

namespace {

template <typename T>
void enforce_reject_rate(const std::string& path, std::size_t rows, const Loaded<T>& loaded,
                         const LoadOptions& opts) {
  if (rows == 0) return;
  const double rate = static_cast<double>(loaded.rejects.size()) / static_cast<double>(rows);
  if (rate > opts.max_reject_rate) {
    const auto& first = loaded.rejects.front();
    throw_data(fmt::format("{}: schema error: {} of {} rows rejected ({:.2f}% > {:.2f}%); first: "
                           "line {}: {}",
                           path, loaded.rejects.size(), rows, rate * 100, opts.max_reject_rate * 100,
                           first.line, first.reason));
  }
}

std::optional<bool> parse_bool(std::string_view s) {
  if (s == "1" || s == "true" || s == "TRUE" || s == "True") return true;
  if (s == "0" || s == "false" || s == "FALSE" || s == "False") return false;
  return std::nullopt;
}

std::optional<std::string> opt_field(std::string_view s) {
  if (s.empty()) return std::nullopt;
  return std::string(s);
}

}  // namespace

Loaded<Stop> load_stops(const std::string& path, const LoadOptions& opts) {
  csv::Reader r(path);
  r.require_header(csv_header(DatasetKind::stops));
  Loaded<Stop> out;
  std::unordered_set<std::string> seen;
  std::size_t rows = 0;
  while (r.next()) {
    ++rows;
    const auto& f = r.fields();
    auto reject = [&](std::string reason) {
      out.rejects.push_back({r.line_number(), std::move(reason), std::string(r.raw_line())});
    };
    if (f.size() != 4) { reject("wrong field count"); continue; }
    if (f[0].empty()) { reject("empty stop_id"); continue; }
    auto lat = csv::to_double(f[1]);
    auto lon = csv::to_double(f[2]);
    auto term = parse_bool(f[3]);
    if (!lat) { reject("lat not a number"); continue; }
    if (!lon) { reject("lon not a number"); continue; }
    if (!term) { reject("is_terminal not a boolean"); continue; }
    if (*lat < -90 || *lat > 90) { reject("lat out of range"); continue; }
    if (*lon < -180 || *lon > 180) { reject("lon out of range"); continue; }
    if (!seen.emplace(f[0]).second) { reject("duplicate stop_id"); continue; }
    out.records.push_back({std::string(f[0]), *lat, *lon, *term});
  }
  enforce_reject_rate(path, rows, out, opts);
  return out;
}

Loaded<RouteDef> load_routes(const std::string& path, const LoadOptions& opts,
                             const std::vector<Stop>* known_stops) {
  csv::Reader r(path);
  r.require_header(csv_header(DatasetKind::routes));

  std::unordered_set<std::string_view> known;
  if (known_stops) {
    for (const auto& s : *known_stops) known.insert(s.stop_id);
  }

  struct Row {
    long long seq;
    std::string stop_id;
    std::size_t line;
    std::string raw;
  };
  struct Group {
    std::string route_id;
    Direction direction;
    std::vector<Row> rows;
  };
  std::vector<Group> groups;
  std::map<std::pair<std::string, int>, std::size_t> group_of;

  Loaded<RouteDef> out;
  std::size_t rows = 0;
  while (r.next()) {
    ++rows;
    const auto& f = r.fields();
    auto reject = [&](std::string reason) {
      out.rejects.push_back({r.line_number(), std::move(reason), std::string(r.raw_line())});
    };
    if (f.size() != 4) { reject("wrong field count"); continue; }
    if (f[0].empty()) { reject("empty route_id"); continue; }
    Direction dir;
    if (f[1] == "outbound") dir = Direction::outbound;
    else if (f[1] == "inbound") dir = Direction::inbound;
    else { reject("direction must be outbound or inbound"); continue; }
    auto seq = csv::to_int(f[2]);
    if (!seq || *seq < 0) { reject("seq not a non-negative integer"); continue; }
    if (f[3].empty()) { reject("empty stop_id"); continue; }
    if (known_stops && !known.contains(f[3])) { reject("unknown stop_id"); continue; }
    auto key = std::make_pair(std::string(f[0]), static_cast<int>(dir));
    auto [it, inserted] = group_of.emplace(key, groups.size());
    if (inserted) groups.push_back({key.first, dir, {}});
    groups[it->second].rows.push_back(
        {*seq, std::string(f[3]), r.line_number(), std::string(r.raw_line())});
  }

  for (auto& g : groups) {
    std::stable_sort(g.rows.begin(), g.rows.end(),
                     [](const Row& a, const Row& b) { return a.seq < b.seq; });
    std::string problem;
    for (std::size_t i = 0; i < g.rows.size() && problem.empty(); ++i) {
      if (g.rows[i].seq != static_cast<long long>(i)) problem = "itinerary seq not contiguous from 0";
      else if (i > 0 && g.rows[i].stop_id == g.rows[i - 1].stop_id)
        problem = "itinerary has immediate repeat";
    }
    if (problem.empty() && g.rows.size() < 2) problem = "itinerary shorter than 2 stops";
    if (!problem.empty()) {
      for (const auto& row : g.rows) out.rejects.push_back({row.line, problem, row.raw});
      continue;
    }
    RouteDef def{g.route_id, g.direction, {}};
    def.itinerary.reserve(g.rows.size());
    for (auto& row : g.rows) def.itinerary.push_back(std::move(row.stop_id));
    out.records.push_back(std::move(def));
  }
  enforce_reject_rate(path, rows, out, opts);
  return out;
}

Loaded<Terminal> load_terminals(const std::string& path, const LoadOptions& opts) {
  csv::Reader r(path);
  r.require_header(csv_header(DatasetKind::terminals));
  Loaded<Terminal> out;
  std::unordered_set<std::string> seen;
  std::size_t rows = 0;
  while (r.next()) {
    ++rows;
    const auto& f = r.fields();
    auto reject = [&](std::string reason) {
      out.rejects.push_back({r.line_number(), std::move(reason), std::string(r.raw_line())});
    };
    if (f.size() != 2) { reject("wrong field count"); continue; }
    if (f[0].empty() || f[1].empty()) { reject("empty identifier"); continue; }
    if (!seen.emplace(f[0]).second) { reject("duplicate terminal_id"); continue; }
    out.records.push_back({std::string(f[0]), std::string(f[1])});
  }
  enforce_reject_rate(path, rows, out, opts);
  return out;
}

Loaded<GpsPing> load_pings(const std::string& path, const LoadOptions& opts) {
  csv::Reader r(path);
  r.require_header(csv_header(DatasetKind::pings));
  Loaded<GpsPing> out;
  std::size_t rows = 0;
  while (r.next()) {
    ++rows;
    const auto& f = r.fields();
    auto reject = [&](std::string reason) {
      out.rejects.push_back({r.line_number(), std::move(reason), std::string(r.raw_line())});
    };
    if (f.size() != 5) { reject("wrong field count"); continue; }
    if (f[0].empty()) { reject("empty vehicle_id"); continue; }
    if (f[1].empty()) { reject("empty route_id"); continue; }
    auto ts = parse_iso8601(f[2]);
    if (!ts) { reject("bad timestamp"); continue; }
    if (ts->epoch <= 0) { reject("timestamp not positive"); continue; }
    auto lat = csv::to_double(f[3]);
    auto lon = csv::to_double(f[4]);
    if (!lat || !lon) { reject("coordinate not a number"); continue; }
    if (!opts.bbox.contains(*lat, *lon)) { reject("coordinate outside bounding box"); continue; }
    out.records.push_back({std::string(f[0]), std::string(f[1]), *ts, *lat, *lon});
  }
  enforce_reject_rate(path, rows, out, opts);
  return out;
}

Loaded<Validation> load_validations(const std::string& path, const LoadOptions& opts) {
  csv::Reader r(path);
  r.require_header(csv_header(DatasetKind::validations));
  Loaded<Validation> out;
  std::size_t rows = 0;
  while (r.next()) {
    ++rows;
    const auto& f = r.fields();
    auto reject = [&](std::string reason) {
      out.rejects.push_back({r.line_number(), std::move(reason), std::string(r.raw_line())});
    };
    if (f.size() != 5) { reject("wrong field count"); continue; }
    if (f[0].empty()) { reject("empty user_id"); continue; }
    auto ts = parse_iso8601(f[1]);
    if (!ts) { reject("bad timestamp"); continue; }
    const bool on_bus = !f[3].empty();
    const bool at_terminal = !f[4].empty();
    if (on_bus == at_terminal) {
      reject("exactly one of vehicle_id, terminal_id required");
      continue;
    }
    out.records.push_back(
        {std::string(f[0]), *ts, opt_field(f[2]), opt_field(f[3]), opt_field(f[4])});
  }
  enforce_reject_rate(path, rows, out, opts);
  return out;
}

void write_stops(const std::string& path, const std::vector<Stop>& stops) {
  csv::Writer w(path, csv_header(DatasetKind::stops));
  for (const auto& s : stops) w.row("{},{},{},{}", s.stop_id, s.lat, s.lon, s.is_terminal ? 1 : 0);
}

void write_routes(const std::string& path, const std::vector<RouteDef>& routes) {
  csv::Writer w(path, csv_header(DatasetKind::routes));
  for (const auto& r : routes) {
    for (std::size_t i = 0; i < r.itinerary.size(); ++i) {
      w.row("{},{},{},{}", r.route_id, to_string(r.direction), i, r.itinerary[i]);
    }
  }
}

void write_terminals(const std::string& path, const std::vector<Terminal>& terminals) {
  csv::Writer w(path, csv_header(DatasetKind::terminals));
  for (const auto& t : terminals) w.row("{},{}", t.terminal_id, t.stop_id);
}

void write_pings(const std::string& path, const std::vector<GpsPing>& pings) {
  csv::Writer w(path, csv_header(DatasetKind::pings));
  for (const auto& p : pings) {
    w.row("{},{},{},{},{}", p.vehicle_id, p.route_id, format_iso8601(p.timestamp), p.lat, p.lon);
  }
}

void write_validations(const std::string& path, const std::vector<Validation>& validations) {
  csv::Writer w(path, csv_header(DatasetKind::validations));
  static const std::string empty;
  for (const auto& v : validations) {
    w.row("{},{},{},{},{}", v.user_id, format_iso8601(v.timestamp), v.route_id.value_or(empty),
          v.vehicle_id.value_or(empty), v.terminal_id.value_or(empty));
  }
}

void write_rejects(const std::string& path,
                   const std::vector<std::pair<DatasetKind, Reject>>& rejects) {
  csv::Writer w(path, {"dataset", "line", "reason"});
  for (const auto& [kind, rej] : rejects) w.row("{},{},{}", to_string(kind), rej.line, rej.reason);
}

Dataset load_dataset_dir(const std::string& dir, const LoadOptions& opts) {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  for (const char* f : {kStopsFile, kRoutesFile, kTerminalsFile, kPingsFile, kValidationsFile}) {
    if (!fs::exists(base / f)) throw_artifact("missing dataset file: " + (base / f).string());
  }
  auto stops_f = std::async(std::launch::async, load_stops, (base / kStopsFile).string(), opts);
  auto terms_f =
      std::async(std::launch::async, load_terminals, (base / kTerminalsFile).string(), opts);
  auto pings_f = std::async(std::launch::async, load_pings, (base / kPingsFile).string(), opts);
  auto vals_f =
      std::async(std::launch::async, load_validations, (base / kValidationsFile).string(), opts);

  Dataset ds;
  auto stops = stops_f.get();
  // Itinerary resolution needs the stop table.
  auto routes = load_routes((base / kRoutesFile).string(), opts, &stops.records);
  auto terminals = terms_f.get();
  auto pings = pings_f.get();
  auto validations = vals_f.get();

  auto collect = [&ds](DatasetKind kind, auto& loaded) {
    for (auto& r : loaded.rejects) ds.rejects.emplace_back(kind, std::move(r));
  };
  collect(DatasetKind::stops, stops);
  collect(DatasetKind::routes, routes);
  collect(DatasetKind::terminals, terminals);
  collect(DatasetKind::pings, pings);
  collect(DatasetKind::validations, validations);
  ds.stops = std::move(stops.records);
  ds.routes = std::move(routes.records);
  ds.terminals = std::move(terminals.records);
  ds.pings = std::move(pings.records);
  ds.validations = std::move(validations.records);
  return ds;
}

void write_dataset_dir(const std::string& dir, const Dataset& ds) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path base(dir);
  write_stops((base / kStopsFile).string(), ds.stops);
  write_routes((base / kRoutesFile).string(), ds.routes);
  write_terminals((base / kTerminalsFile).string(), ds.terminals);
  write_pings((base / kPingsFile).string(), ds.pings);
  write_validations((base / kValidationsFile).string(), ds.validations);
}

std::vector<DayFilterReport> classify_days(const std::map<Day, std::size_t>& counts,
                                           double low_factor, double high_factor,
                                           const Calendar& calendar) {
  if (!(low_factor > 0 && low_factor < 1 && high_factor > 1)) {
    throw_config(fmt::format("day filter factors must satisfy 0 < low < 1 < high (got {}, {})",
                             low_factor, high_factor));
  }
  if (counts.empty()) throw_data("day filter: no validations");
  if (counts.size() < 3) throw_data("day filter: validations span fewer than 3 calendar days");

  std::map<DayClass, std::vector<double>> by_class;
  for (const auto& [day, n] : counts) by_class[calendar.classify(day)].push_back(double(n));
  std::map<DayClass, double> median;
  for (auto& [cls, v] : by_class) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    median[cls] = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  }

  std::vector<DayFilterReport> report;
  std::size_t kept = 0;
  for (const auto& [day, n] : counts) {
    DayFilterReport rep;
    rep.day = day;
    rep.day_class = calendar.classify(day);
    rep.validation_count = n;
    rep.class_median = median[rep.day_class];
    const double x = static_cast<double>(n);
    if (x < low_factor * rep.class_median) {
      rep.kept = false;
      rep.reason = fmt::format("count below {} x {} median", low_factor, to_string(rep.day_class));
    } else if (x > high_factor * rep.class_median) {
      rep.kept = false;
      rep.reason = fmt::format("count above {} x {} median", high_factor, to_string(rep.day_class));
    } else {
      rep.reason = "within class range";
      ++kept;
    }
    report.push_back(std::move(rep));
  }
  if (kept == 0) throw_data("day filter: every day dropped; validation feed looks corrupt");
  return report;
}

DayFilterResult filter_anomalous_days(const std::vector<Validation>& validations,
                                      double low_factor, double high_factor,
                                      const Calendar& calendar) {
  if (validations.empty()) throw_data("day filter: no validations");
  std::map<Day, std::size_t> counts;
  for (const auto& v : validations) ++counts[local_day(v.timestamp)];
  DayFilterResult out;
  out.report = classify_days(counts, low_factor, high_factor, calendar);
  std::set<Day> keep;
  for (const auto& r : out.report) {
    if (r.kept) keep.insert(r.day);
  }
  out.kept.reserve(validations.size());
  for (const auto& v : validations) {
    if (keep.contains(local_day(v.timestamp))) out.kept.push_back(v);
  }
  return out;
}

void write_day_filter_report(const std::string& path, const std::vector<DayFilterReport>& report) {
  csv::Writer w(path, {"day", "day_class", "validation_count", "class_median", "kept", "reason"});
  for (const auto& r : report) {
    w.row("{},{},{},{},{},{}", format_date(r.day), to_string(r.day_class), r.validation_count,
          r.class_median, r.kept ? 1 : 0, r.reason);
  }
}

RouteIndex::RouteIndex(const std::vector<RouteDef>& routes) {
  for (const auto& r : routes) by_id_[r.route_id].push_back(&r);
}

const std::vector<const RouteDef*>& RouteIndex::directions(std::string_view route_id) const {
  static const std::vector<const RouteDef*> none;
  auto it = by_id_.find(std::string(route_id));
  return it == by_id_.end() ? none : it->second;
}

StopIndex::StopIndex(const std::vector<Stop>& stops) {
  by_id_.reserve(stops.size());
  for (const auto& s : stops) by_id_.emplace(s.stop_id, &s);
}

const Stop* StopIndex::find(std::string_view stop_id) const {
  auto it = by_id_.find(std::string(stop_id));
  return it == by_id_.end() ? nullptr : it->second;
}

}  // namespace transitnet
