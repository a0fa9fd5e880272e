#pragma once

#include "transitnet/odm.hpp"

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace transitnet {

enum class FlowClass { intra, inter, unassigned };

// stop_id -> community for giant-component stops.
using CommunityLookup = std::unordered_map<std::string, int>;

FlowClass classify_od(const OdPair& pair, const CommunityLookup& community);

struct FlowMatrix {
  DayClass day_class = DayClass::weekday;
  std::vector<std::vector<std::uint64_t>> counts;  // origin row, destination column

  explicit FlowMatrix(std::size_t k = 0, DayClass c = DayClass::weekday)
      : day_class(c), counts(k, std::vector<std::uint64_t>(k, 0)) {}
  std::size_t size() const { return counts.size(); }
};

struct RankedCommunity {
  int community;
  double share;
};

struct RankedPair {
  int a;  // a < b
  int b;
  std::uint64_t flow;
  double share;
};

// Unordered pairs by counts[a][b] + counts[b][a], descending; ties by ids.
// Pairs without flow are not ranked.
std::vector<RankedPair> top_inter_pairs(const FlowMatrix& m, std::size_t k);

struct FlowSummary {
  DayClass day_class = DayClass::weekday;
  std::uint64_t total = 0;
  std::uint64_t intra = 0;
  std::uint64_t inter = 0;
  std::uint64_t unassigned = 0;
  double pct_intra = 0;
  double pct_inter = 0;
  std::vector<RankedCommunity> top_intra_communities;
  std::vector<RankedPair> top_inter_pairs;
};

struct FlowReport {
  std::vector<FlowSummary> summaries;  // day classes with at least one pair
  std::vector<FlowMatrix> matrices;
  std::vector<std::string> notes;      // day classes omitted for lack of pairs

  const FlowMatrix* matrix(DayClass c) const;
  const FlowSummary* summary(DayClass c) const;
};

FlowReport flow_summary(const std::vector<OdPair>& pairs, const CommunityLookup& community,
                        std::size_t community_count, const Calendar& calendar = {});

void write_flow_matrix_csv(const std::string& path, const FlowMatrix& m);
FlowMatrix load_flow_matrix_csv(const std::string& path, DayClass c);
std::string flow_report_json(const FlowReport& r);

}  // namespace transitnet
