#pragma once

#include "transitnet/netcore.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace transitnet {

struct Partition {
  std::vector<int> assignment;  // per node, dense ids from 0
  double modularity = 0;
  int levels = 0;
  std::size_t community_count = 0;
  std::vector<double> level_modularity;  // Q after each aggregation pass
};

struct LouvainOptions {
  std::uint64_t seed = 1;
  double resolution = 1.0;
};

// Modularity optimization on the symmetrized weights w_uv + w_vu.
Partition louvain(const SupplyGraph& g, const LouvainOptions& opts = {});

double modularity(const SupplyGraph& g, const std::vector<int>& assignment, double resolution = 1.0);

// Members of each community in node order.
std::vector<std::vector<NodeId>> community_members(const std::vector<int>& assignment);

struct CommunityStats {
  int id = 0;
  std::size_t node_count = 0;
  std::int32_t diameter = 0;
  double normalized_diameter = 0;
  double density = 0;
  bool density_defined = true;
  double avg_clustering = 0;
  double avg_weighted_degree = 0;       // induced subgraph
  double avg_weighted_degree_full = 0;  // all edges touching members
  double cut_weight = 0;                // weight of edges leaving or entering the community
};

std::vector<CommunityStats> community_stats(const SupplyGraph& g, const Partition& p, bool directed = true);

void write_partition_csv(const std::string& path, const SupplyGraph& g, const Partition& p);
// Assignment for the nodes of g, read from communities.csv.
Partition load_partition(const std::string& path, const SupplyGraph& g);
void write_community_stats_csv(const std::string& path, const std::vector<CommunityStats>& stats);

}  // namespace transitnet
