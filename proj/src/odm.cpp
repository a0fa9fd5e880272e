#include "transitnet/odm.hpp"

#include "transitnet/common.hpp"
#include "transitnet/csv.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace transitnet {

const char* to_string(ChainOutcome o) {
  switch (o) {
    case ChainOutcome::chained: return "chained";
    case ChainOutcome::dropped_single_boarding: return "dropped_single_boarding";
    case ChainOutcome::dropped_unreachable: return "dropped_unreachable";
    case ChainOutcome::corrected_intermediate: return "corrected_intermediate";
    case ChainOutcome::corrected_origin_snap: return "corrected_origin_snap";
  }
  return "?";
}

void ChainDiagnostics::record(UserDayOutcome u) {
  ++outcome_counts[static_cast<std::size_t>(u.outcome)];
  user_days.push_back(std::move(u));
}

void ChainDiagnostics::merge(const ChainDiagnostics& other) {
  for (std::size_t i = 0; i < kChainOutcomeCount; ++i) outcome_counts[i] += other.outcome_counts[i];
  unlocatable += other.unlocatable;
  unsnappable += other.unsnappable;
  unresolved += other.unresolved;
  degenerate_pairs += other.degenerate_pairs;
  user_days.insert(user_days.end(), other.user_days.begin(), other.user_days.end());
}

PingIndex::PingIndex(const std::vector<GpsPing>& pings) {
  for (const auto& p : pings) {
    by_vehicle_[p.vehicle_id].push_back({p.timestamp.epoch, p.lat, p.lon, &p.route_id});
  }
  for (auto& [_, fixes] : by_vehicle_) {
    std::stable_sort(fixes.begin(), fixes.end(), [](const Fix& a, const Fix& b) { return a.epoch < b.epoch; });
  }
}

std::optional<PingIndex::Fix> PingIndex::nearest(const std::string& vehicle_id, std::int64_t t,
                                                 std::int64_t max_gap) const {
  auto it = by_vehicle_.find(vehicle_id);
  if (it == by_vehicle_.end()) return std::nullopt;
  const auto& fixes = it->second;
  auto hi = std::lower_bound(fixes.begin(), fixes.end(), t, [](const Fix& f, std::int64_t v) { return f.epoch < v; });
  const Fix* best = nullptr;
  std::int64_t gap = std::numeric_limits<std::int64_t>::max();
  if (hi != fixes.begin()) {
    // Last ping strictly before t; on equal gaps it wins over the later one.
    auto lo = std::prev(hi);
    auto first = std::lower_bound(fixes.begin(), hi, lo->epoch,
                                  [](const Fix& f, std::int64_t v) { return f.epoch < v; });
    best = &*first;
    gap = t - first->epoch;
  }
  if (hi != fixes.end() && hi->epoch - t < gap) {
    best = &*hi;
    gap = hi->epoch - t;
  }
  if (!best || gap > max_gap) return std::nullopt;
  return *best;
}

std::optional<Coordinate> locate_validation(const Validation& v, const PingIndex& pings, std::int64_t max_gap_s) {
  if (!v.vehicle_id) return std::nullopt;
  auto fix = pings.nearest(*v.vehicle_id, v.timestamp.epoch, max_gap_s);
  if (!fix) return std::nullopt;
  return Coordinate{fix->lat, fix->lon};
}

namespace {

struct SnapBest {
  const std::string* stop = nullptr;
  double dist = std::numeric_limits<double>::infinity();
};

void snap_scan(const Coordinate& c, const RouteDef& route, const StopIndex& stops, SnapBest& best) {
  for (const auto& id : route.itinerary) {
    const Stop* s = stops.find(id);
    if (!s) continue;
    const double d = haversine_m(c.lat, c.lon, s->lat, s->lon);
    if (d < best.dist) {
      best.dist = d;
      best.stop = &id;
    }
  }
}

}  // namespace

std::optional<std::string> snap_to_stop(const Coordinate& c, const RouteDef& route, const StopIndex& stops,
                                        double max_radius_m) {
  SnapBest best;
  snap_scan(c, route, stops, best);
  if (!best.stop || best.dist > max_radius_m) return std::nullopt;
  return *best.stop;
}

std::optional<std::string> snap_to_stop(const Coordinate& c, const std::vector<const RouteDef*>& route,
                                        const StopIndex& stops, double max_radius_m) {
  SnapBest best;
  for (const RouteDef* r : route) snap_scan(c, *r, stops, best);
  if (!best.stop || best.dist > max_radius_m) return std::nullopt;
  return *best.stop;
}

namespace {

std::optional<std::size_t> first_pos(const RouteDef& r, const std::string& stop) {
  auto it = std::find(r.itinerary.begin(), r.itinerary.end(), stop);
  if (it == r.itinerary.end()) return std::nullopt;
  return static_cast<std::size_t>(it - r.itinerary.begin());
}

std::optional<std::size_t> last_pos(const RouteDef& r, const std::string& stop) {
  auto it = std::find(r.itinerary.rbegin(), r.itinerary.rend(), stop);
  if (it == r.itinerary.rend()) return std::nullopt;
  return static_cast<std::size_t>(r.itinerary.rend() - it - 1);
}

bool direction_reaches(const RouteDef& r, const std::string& from, const std::string& to) {
  auto a = first_pos(r, from);
  auto b = last_pos(r, to);
  return a && b && *a < *b;
}

}  // namespace

bool route_reaches(const std::vector<const RouteDef*>& route, const std::string& from, const std::string& to) {
  return std::any_of(route.begin(), route.end(), [&](const RouteDef* r) { return direction_reaches(*r, from, to); });
}

std::vector<OdPair> chain_daily_trips(const std::vector<Boarding>& boardings) {
  std::vector<OdPair> out;
  const std::size_t n = boardings.size();
  if (n < 2) return out;
  out.reserve(n);
  const Day day = local_day(boardings.front().timestamp);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = boardings[i];
    out.push_back({b.user_id, day, static_cast<int>(i + 1), b.stop_id, boardings[(i + 1) % n].stop_id,
                   b.timestamp});
  }
  return out;
}

namespace {

ChainOutcome worse(ChainOutcome a, ChainOutcome b) {
  auto rank = [](ChainOutcome o) {
    switch (o) {
      case ChainOutcome::dropped_single_boarding:
      case ChainOutcome::dropped_unreachable: return 3;
      case ChainOutcome::corrected_intermediate: return 2;
      case ChainOutcome::corrected_origin_snap: return 1;
      case ChainOutcome::chained: return 0;
    }
    return 0;
  };
  return rank(b) > rank(a) ? b : a;
}

using Key = std::vector<std::string>;

Key route_key(const UserDay& d) {
  Key k;
  for (const auto& b : d.boardings) k.push_back(b.route_id);
  return k;
}

Key stop_seq(const UserDay& d) {
  Key k;
  for (const auto& b : d.boardings) k.push_back(b.stop_id);
  return k;
}

// Rewrites every origin at position i of a recurring pattern to the observed
// stop lying earliest on the direction the user rides.
void origin_snap(std::vector<UserDay*>& days, const RouteIndex& routes, std::vector<ChainOutcome*>& outcome) {
  const std::size_t len = days.front()->boardings.size();
  for (std::size_t i = 0; i < len; ++i) {
    const auto& dirs = routes.directions(days.front()->boardings[i].route_id);
    if (dirs.empty()) continue;
    std::size_t best_dir = 0, best_score = 0;
    for (std::size_t d = 0; d < dirs.size(); ++d) {
      std::size_t score = 0;
      for (auto* day : days) {
        score += direction_reaches(*dirs[d], day->boardings[i].stop_id, day->boardings[(i + 1) % len].stop_id);
      }
      if (score > best_score) {
        best_score = score;
        best_dir = d;
      }
    }
    if (best_score == 0) continue;
    const RouteDef& dir = *dirs[best_dir];
    std::optional<std::size_t> earliest;
    std::string chosen;
    for (auto* day : days) {
      auto p = first_pos(dir, day->boardings[i].stop_id);
      if (p && (!earliest || *p < *earliest)) {
        earliest = p;
        chosen = day->boardings[i].stop_id;
      }
    }
    for (std::size_t k = 0; k < days.size(); ++k) {
      auto& b = days[k]->boardings[i];
      if (b.stop_id != chosen && first_pos(dir, b.stop_id)) {
        b.stop_id = chosen;
        *outcome[k] = worse(*outcome[k], ChainOutcome::corrected_origin_snap);
      }
    }
  }
}

struct Modal {
  Key stops;
  const UserDay* day;
};

// Inserts the modal pattern's missing stops into a day that observed only a
// subsequence of it. Returns false when the day has to be dropped.
bool repair_intermediate(UserDay& day, const Modal& modal, const RouteIndex& routes, bool& changed) {
  changed = false;
  const Key seq = stop_seq(day);
  const auto& m = modal.stops;
  if (seq.size() >= m.size()) return true;
  std::vector<std::size_t> idx;
  for (std::size_t j = 0, i = 0; j < seq.size(); ++j) {
    while (i < m.size() && m[i] != seq[j]) ++i;
    if (i == m.size()) return true;  // not a subsequence: nothing to repair
    idx.push_back(i++);
  }

  const auto& mb = modal.day->boardings;
  const std::int64_t shift = (day.day - modal.day->day).count() * 86400;
  auto synthesized = [&](std::size_t mi) {
    Boarding b = mb[mi];
    b.user_id = day.boardings.front().user_id;
    b.timestamp.epoch += shift;
    return b;
  };

  const std::size_t n = seq.size();
  std::vector<Boarding> lead, body;
  for (std::size_t j = 0; j < n; ++j) {
    body.push_back(day.boardings[j]);
    std::vector<std::size_t> gap;
    if (j + 1 < n) {
      for (std::size_t i = idx[j] + 1; i < idx[j + 1]; ++i) gap.push_back(i);
    } else {
      for (std::size_t i = idx[j] + 1; i < m.size(); ++i) gap.push_back(i);
      for (std::size_t i = 0; i < idx[0]; ++i) gap.push_back(i);
    }
    if (gap.empty()) continue;
    const auto& dirs = routes.directions(day.boardings[j].route_id);
    if (route_reaches(dirs, seq[j], seq[(j + 1) % n])) continue;
    if (!route_reaches(dirs, seq[j], m[gap.front()])) return false;
    for (auto i : gap) (i > idx[j] ? body : lead).push_back(synthesized(i));
    changed = true;
  }
  if (changed) {
    lead.insert(lead.end(), body.begin(), body.end());
    day.boardings = std::move(lead);
  }
  return true;
}

}  // namespace

CorrectionResult correct_user_history(const std::string& user_id, std::vector<UserDay> history,
                                      const RouteIndex& routes, const OdmConfig& cfg, const Calendar& calendar) {
  std::sort(history.begin(), history.end(), [](const UserDay& a, const UserDay& b) { return a.day < b.day; });
  const std::size_t n = history.size();
  std::vector<ChainOutcome> outcome(n, ChainOutcome::chained);
  std::vector<char> dropped(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (history[i].boardings.size() < 2) {
      outcome[i] = ChainOutcome::dropped_single_boarding;
      dropped[i] = 1;
    }
  }

  if (cfg.correct) {
    std::map<DayClass, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[calendar.classify(history[i].day)].push_back(i);

    for (const auto& [cls, members] : by_class) {
      const auto threshold = std::max<std::size_t>(
          cfg.min_recurrence,
          static_cast<std::size_t>(std::ceil(cfg.recurrence_fraction * static_cast<double>(members.size()) - 1e-12)));
      std::map<Key, std::vector<std::size_t>> by_key;
      for (auto i : members) {
        if (!dropped[i]) by_key[route_key(history[i])].push_back(i);
      }

      const Key* modal_key = nullptr;
      for (const auto& [key, days] : by_key) {
        if (days.size() < threshold) continue;
        std::vector<UserDay*> ptrs;
        std::vector<ChainOutcome*> outs;
        for (auto i : days) {
          ptrs.push_back(&history[i]);
          outs.push_back(&outcome[i]);
        }
        origin_snap(ptrs, routes, outs);
        if (!modal_key || days.size() > by_key[*modal_key].size() ||
            (days.size() == by_key[*modal_key].size() && key.size() > modal_key->size())) {
          modal_key = &key;
        }
      }
      if (!modal_key || modal_key->size() < 3) continue;

      std::map<Key, std::pair<std::size_t, std::size_t>> seq_count;  // seq -> (count, first day)
      for (auto i : by_key[*modal_key]) {
        auto [it, fresh] = seq_count.try_emplace(stop_seq(history[i]), 0, i);
        ++it->second.first;
      }
      auto best = std::max_element(seq_count.begin(), seq_count.end(), [](const auto& a, const auto& b) {
        return a.second.first != b.second.first ? a.second.first < b.second.first : a.second.second > b.second.second;
      });
      const Modal modal{best->first, &history[best->second.second]};

      for (auto i : members) {
        if (dropped[i] || route_key(history[i]) == *modal_key) continue;
        bool changed = false;
        if (!repair_intermediate(history[i], modal, routes, changed)) {
          outcome[i] = ChainOutcome::dropped_unreachable;
          dropped[i] = 1;
        } else if (changed) {
          outcome[i] = worse(outcome[i], ChainOutcome::corrected_intermediate);
        }
      }
    }
  }

  CorrectionResult out;
  for (std::size_t i = 0; i < n; ++i) {
    out.outcomes.push_back({user_id, history[i].day, history[i].boardings.size(), 0, outcome[i]});
    if (!dropped[i]) out.days.push_back(std::move(history[i]));
  }
  return out;
}

namespace {

// Chains corrected days, drops origin == destination legs and renumbers.
void chain_corrected(const CorrectionResult& corrected, std::vector<OdPair>& pairs, ChainDiagnostics& diag) {
  std::size_t next_day = 0;
  for (auto o : corrected.outcomes) {
    if (next_day < corrected.days.size() && corrected.days[next_day].day == o.day &&
        o.outcome != ChainOutcome::dropped_single_boarding && o.outcome != ChainOutcome::dropped_unreachable) {
      int leg = 0;
      for (auto& p : chain_daily_trips(corrected.days[next_day].boardings)) {
        if (p.origin_stop_id == p.destination_stop_id) {
          ++diag.degenerate_pairs;
          continue;
        }
        p.day = o.day;
        p.leg_index = ++leg;
        pairs.push_back(std::move(p));
        ++o.pairs;
      }
      ++next_day;
    }
    diag.record(std::move(o));
  }
}

}  // namespace

CorrectedPairs recurring_pattern_correction(const std::string& user_id, std::vector<UserDay> history,
                                            const RouteIndex& routes, const OdmConfig& cfg,
                                            const Calendar& calendar) {
  CorrectedPairs out;
  auto corrected = correct_user_history(user_id, std::move(history), routes, cfg, calendar);
  chain_corrected(corrected, out.pairs, out.diagnostics);
  return out;
}

OdmResult build_odm(const std::vector<Validation>& validations, const std::vector<GpsPing>& pings,
                    const std::vector<RouteDef>& routes, const std::vector<Stop>& stops,
                    const std::vector<Terminal>& terminals, const OdmConfig& cfg, const Calendar& calendar) {
  OdmResult out;
  if (validations.empty()) return out;

  const PingIndex ping_index(pings);
  const RouteIndex route_index(routes);
  const StopIndex stop_index(stops);
  std::unordered_map<std::string, std::string> terminal_stop;
  for (const auto& t : terminals) terminal_stop.emplace(t.terminal_id, t.stop_id);

  std::vector<Boarding> boardings;
  boardings.reserve(validations.size());
  for (const auto& v : validations) {
    Boarding b{v.user_id, v.timestamp, v.route_id.value_or(""), {}, BoardingSource::gps_match};
    if (v.terminal_id) {
      auto it = terminal_stop.find(*v.terminal_id);
      if (it == terminal_stop.end() || !stop_index.find(it->second)) {
        ++out.diagnostics.unresolved;
        continue;
      }
      b.stop_id = it->second;
      b.source = BoardingSource::terminal;
    } else {
      auto fix = v.vehicle_id ? ping_index.nearest(*v.vehicle_id, v.timestamp.epoch, cfg.max_gap_s) : std::nullopt;
      if (!fix) {
        ++out.diagnostics.unlocatable;
        continue;
      }
      if (b.route_id.empty()) b.route_id = *fix->route_id;
      const auto& dirs = route_index.directions(b.route_id);
      if (dirs.empty()) {
        ++out.diagnostics.unresolved;
        continue;
      }
      auto stop = snap_to_stop(Coordinate{fix->lat, fix->lon}, dirs, stop_index, cfg.snap_radius_m);
      if (!stop) {
        ++out.diagnostics.unsnappable;
        continue;
      }
      b.stop_id = std::move(*stop);
    }
    ++out.embarkings[b.stop_id].total;
    boardings.push_back(std::move(b));
  }

  std::sort(boardings.begin(), boardings.end(), [](const Boarding& a, const Boarding& b) {
    return a.user_id != b.user_id ? a.user_id < b.user_id : a.timestamp.epoch < b.timestamp.epoch;
  });

  for (std::size_t i = 0; i < boardings.size();) {
    std::size_t j = i;
    std::vector<UserDay> history;
    const std::string user = boardings[i].user_id;
    while (j < boardings.size() && boardings[j].user_id == user) {
      const Day day = local_day(boardings[j].timestamp);
      if (history.empty() || history.back().day != day) history.push_back({day, {}});
      history.back().boardings.push_back(std::move(boardings[j]));
      ++j;
    }
    const std::size_t first_new = out.pairs.size();
    auto corrected = correct_user_history(user, std::move(history), route_index, cfg, calendar);
    chain_corrected(corrected, out.pairs, out.diagnostics);
    for (std::size_t p = first_new; p < out.pairs.size(); ++p) ++out.embarkings[out.pairs[p].origin_stop_id].used;
    i = j;
  }
  return out;
}

void write_odpairs(const std::string& path, const std::vector<OdPair>& pairs) {
  csv::Writer w(path, {"user_id", "day", "leg_index", "origin_stop_id", "destination_stop_id", "origin_time"});
  for (const auto& p : pairs) {
    w.row("{},{},{},{},{},{}", p.user_id, format_date(p.day), p.leg_index, p.origin_stop_id,
          p.destination_stop_id, format_iso8601(p.origin_time));
  }
}

std::vector<OdPair> load_odpairs(const std::string& path) {
  csv::Reader r(path);
  r.require_header({"user_id", "day", "leg_index", "origin_stop_id", "destination_stop_id", "origin_time"});
  std::vector<OdPair> out;
  while (r.next()) {
    const auto& f = r.fields();
    if (f.size() != 6) throw_data(fmt::format("{}:{}: expected 6 fields", path, r.line_number()));
    auto day = parse_date(f[1]);
    auto leg = csv::to_int(f[2]);
    auto t = parse_iso8601(f[5]);
    if (!day || !leg || !t) throw_data(fmt::format("{}:{}: malformed OD pair", path, r.line_number()));
    out.push_back({std::string(f[0]), *day, static_cast<int>(*leg), std::string(f[3]), std::string(f[4]), *t});
  }
  return out;
}

void write_diagnostics(const std::string& path, const ChainDiagnostics& d) {
  csv::Writer w(path, {"user_id", "day", "boardings", "pairs", "outcome"});
  for (const auto& u : d.user_days) {
    w.row("{},{},{},{},{}", u.user_id, format_date(u.day), u.boardings, u.pairs, to_string(u.outcome));
  }
}

void write_diagnostics_summary(const std::string& path, const ChainDiagnostics& d) {
  csv::Writer w(path, {"metric", "count"});
  for (std::size_t i = 0; i < kChainOutcomeCount; ++i) {
    w.row("{},{}", to_string(static_cast<ChainOutcome>(i)), d.outcome_counts[i]);
  }
  w.row("unlocatable,{}", d.unlocatable);
  w.row("unsnappable,{}", d.unsnappable);
  w.row("unresolved,{}", d.unresolved);
  w.row("degenerate_pairs,{}", d.degenerate_pairs);
}

void write_embarkings(const std::string& path, const std::map<std::string, StopEmbarkings>& e) {
  csv::Writer w(path, {"stop_id", "total_boardings", "used_boardings"});
  for (const auto& [stop, c] : e) w.row("{},{},{}", stop, c.total, c.used);
}

std::map<std::string, StopEmbarkings> load_embarkings(const std::string& path) {
  csv::Reader r(path);
  r.require_header({"stop_id", "total_boardings", "used_boardings"});
  std::map<std::string, StopEmbarkings> out;
  while (r.next()) {
    const auto& f = r.fields();
    auto total = f.size() == 3 ? csv::to_int(f[1]) : std::nullopt;
    auto used = f.size() == 3 ? csv::to_int(f[2]) : std::nullopt;
    if (!total || !used) throw_data(fmt::format("{}:{}: malformed embarkings row", path, r.line_number()));
    out[std::string(f[0])] = {static_cast<std::size_t>(*total), static_cast<std::size_t>(*used)};
  }
  return out;
}

}  // namespace transitnet
