#include "transitnet/flows.hpp"

#include "transitnet/common.hpp"
#include "transitnet/csv.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>

namespace transitnet {

FlowClass classify_od(const OdPair& pair, const CommunityLookup& community) {
  auto o = community.find(pair.origin_stop_id);
  auto d = community.find(pair.destination_stop_id);
  if (o == community.end() || d == community.end()) return FlowClass::unassigned;
  return o->second == d->second ? FlowClass::intra : FlowClass::inter;
}

std::vector<RankedPair> top_inter_pairs(const FlowMatrix& m, std::size_t k) {
  std::vector<RankedPair> all;
  std::uint64_t total = 0;
  for (std::size_t a = 0; a < m.size(); ++a) {
    for (std::size_t b = a + 1; b < m.size(); ++b) {
      const auto f = m.counts[a][b] + m.counts[b][a];
      total += f;
      if (f > 0) all.push_back({static_cast<int>(a), static_cast<int>(b), f, 0});
    }
  }
  std::sort(all.begin(), all.end(), [](const RankedPair& x, const RankedPair& y) {
    if (x.flow != y.flow) return x.flow > y.flow;
    return x.a != y.a ? x.a < y.a : x.b < y.b;
  });
  for (auto& p : all) p.share = static_cast<double>(p.flow) / static_cast<double>(total);
  if (all.size() > k) all.resize(k);
  return all;
}

const FlowMatrix* FlowReport::matrix(DayClass c) const {
  for (const auto& m : matrices) {
    if (m.day_class == c) return &m;
  }
  return nullptr;
}

const FlowSummary* FlowReport::summary(DayClass c) const {
  for (const auto& s : summaries) {
    if (s.day_class == c) return &s;
  }
  return nullptr;
}

FlowReport flow_summary(const std::vector<OdPair>& pairs, const CommunityLookup& community,
                        std::size_t community_count, const Calendar& calendar) {
  constexpr DayClass kClasses[] = {DayClass::weekday, DayClass::saturday, DayClass::sunday_holiday};
  std::vector<FlowMatrix> mats;
  std::vector<FlowSummary> sums;
  for (auto c : kClasses) {
    mats.emplace_back(community_count, c);
    sums.push_back({});
    sums.back().day_class = c;
  }
  for (const auto& p : pairs) {
    const auto ci = static_cast<std::size_t>(calendar.classify(p.day));
    auto& s = sums[ci];
    ++s.total;
    switch (classify_od(p, community)) {
      case FlowClass::unassigned: ++s.unassigned; break;
      case FlowClass::intra: ++s.intra; break;
      case FlowClass::inter: ++s.inter; break;
    }
    auto o = community.find(p.origin_stop_id);
    auto d = community.find(p.destination_stop_id);
    if (o != community.end() && d != community.end()) {
      const auto a = static_cast<std::size_t>(o->second), b = static_cast<std::size_t>(d->second);
      if (a >= community_count || b >= community_count) throw_data("community id out of range");
      ++mats[ci].counts[a][b];
    }
  }

  FlowReport r;
  for (std::size_t ci = 0; ci < 3; ++ci) {
    auto& s = sums[ci];
    if (s.total == 0) {
      r.notes.push_back(fmt::format("no OD pairs on {} days; class omitted", to_string(s.day_class)));
      continue;
    }
    const auto assigned = s.intra + s.inter;
    if (assigned > 0) {
      s.pct_intra = 100.0 * static_cast<double>(s.intra) / static_cast<double>(assigned);
      s.pct_inter = 100.0 - s.pct_intra;
    }
    for (std::size_t c = 0; c < community_count; ++c) {
      if (mats[ci].counts[c][c] > 0) {
        s.top_intra_communities.push_back(
            {static_cast<int>(c), static_cast<double>(mats[ci].counts[c][c]) / static_cast<double>(s.intra)});
      }
    }
    std::stable_sort(s.top_intra_communities.begin(), s.top_intra_communities.end(),
                     [](const RankedCommunity& a, const RankedCommunity& b) { return a.share > b.share; });
    s.top_inter_pairs = top_inter_pairs(mats[ci], community_count * community_count);
    r.summaries.push_back(std::move(s));
    r.matrices.push_back(std::move(mats[ci]));
  }
  return r;
}

void write_flow_matrix_csv(const std::string& path, const FlowMatrix& m) {
  csv::Writer w(path, {"origin_community", "destination_community", "count"});
  for (std::size_t a = 0; a < m.size(); ++a) {
    for (std::size_t b = 0; b < m.size(); ++b) w.row("{},{},{}", a, b, m.counts[a][b]);
  }
}

FlowMatrix load_flow_matrix_csv(const std::string& path, DayClass c) {
  csv::Reader r(path);
  r.require_header({"origin_community", "destination_community", "count"});
  std::vector<std::tuple<std::size_t, std::size_t, std::uint64_t>> cells;
  std::size_t k = 0;
  while (r.next()) {
    const auto& f = r.fields();
    auto a = f.size() == 3 ? csv::to_int(f[0]) : std::nullopt;
    auto b = f.size() == 3 ? csv::to_int(f[1]) : std::nullopt;
    auto n = f.size() == 3 ? csv::to_int(f[2]) : std::nullopt;
    if (!a || !b || !n || *a < 0 || *b < 0 || *n < 0) {
      throw_data(fmt::format("{}:{}: malformed flow cell", path, r.line_number()));
    }
    cells.emplace_back(*a, *b, *n);
    k = std::max({k, static_cast<std::size_t>(*a) + 1, static_cast<std::size_t>(*b) + 1});
  }
  FlowMatrix m(k, c);
  for (auto [a, b, n] : cells) m.counts[a][b] = n;
  return m;
}

std::string flow_report_json(const FlowReport& r) {
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (const auto& s : r.summaries) {
    nlohmann::ordered_json intra = nlohmann::ordered_json::array();
    for (const auto& c : s.top_intra_communities) intra.push_back({{"community", c.community}, {"share", c.share}});
    nlohmann::ordered_json inter = nlohmann::ordered_json::array();
    for (const auto& p : s.top_inter_pairs) {
      inter.push_back({{"pair", {p.a, p.b}}, {"flow", p.flow}, {"share", p.share}});
    }
    const FlowMatrix* m = r.matrix(s.day_class);
    classes.push_back({{"day_class", to_string(s.day_class)},
                       {"total", s.total},
                       {"intra", s.intra},
                       {"inter", s.inter},
                       {"unassigned", s.unassigned},
                       {"pct_intra", s.pct_intra},
                       {"pct_inter", s.pct_inter},
                       {"top_intra_communities", std::move(intra)},
                       {"top_inter_pairs", std::move(inter)},
                       {"matrix", m ? nlohmann::ordered_json(m->counts) : nlohmann::ordered_json::array()}});
  }
  return nlohmann::ordered_json{{"unit", "OD pairs (trips)"}, {"day_classes", std::move(classes)}, {"notes", r.notes}}
      .dump(2);
}

}  // namespace transitnet
