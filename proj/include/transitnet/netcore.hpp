#pragma once

#include "transitnet/ingest.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace transitnet {

using NodeId = std::uint32_t;

struct RouteSupply {
  std::string route_id;
  Direction direction = Direction::outbound;
  std::size_t V = 0;            // distinct vehicles observed
  double C = 0;                 // completions per vehicle per day
  double w = 0;                 // V * C
  std::size_t completions = 0;  // over all observed days
  std::size_t days = 0;
};

// Completions of one direction: a vehicle arms near the first stop, departs
// beyond the radius, and completes when it reaches the last stop. C averages
// over the distinct local days present in `pings`.
RouteSupply compute_route_supply(const RouteDef& route, const std::vector<GpsPing>& pings, const StopIndex& stops,
                                 double radius_m = 300);
// Supplies for every RouteDef, pings matched by route_id.
std::vector<RouteSupply> compute_all_supplies(const std::vector<RouteDef>& routes,
                                              const std::vector<GpsPing>& pings, const StopIndex& stops,
                                              double radius_m = 300);

struct Arc {
  NodeId to;
  double weight;
};

struct Edge {
  NodeId src;
  NodeId dst;
  double weight;
};

// Directed weighted graph with string node ids. No self-loops, weights > 0.
class SupplyGraph {
 public:
  SupplyGraph() = default;
  explicit SupplyGraph(const std::vector<std::string>& node_ids);

  NodeId add_node(const std::string& id);
  std::optional<NodeId> find(const std::string& id) const;
  const std::string& id(NodeId u) const { return ids_[u]; }
  const std::vector<std::string>& ids() const { return ids_; }

  // Adds `w` to the edge weight, creating the edge if needed.
  void add_edge(NodeId u, NodeId v, double w);
  void set_weight(NodeId u, NodeId v, double w);
  bool remove_edge(NodeId u, NodeId v);
  std::optional<double> weight(NodeId u, NodeId v) const;

  std::size_t node_count() const { return ids_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  const std::vector<Arc>& out(NodeId u) const { return out_[u]; }
  const std::vector<Arc>& in(NodeId u) const { return in_[u]; }
  std::vector<Edge> edges() const;  // sorted by (src, dst)
  double total_weight() const;
  double max_weight() const;

  // Subgraph induced by `nodes`, keeping their relative order.
  SupplyGraph induced(const std::vector<NodeId>& nodes) const;

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::vector<Arc>> out_, in_;
  std::size_t edge_count_ = 0;
};

// Sums w_L over consecutive itinerary pairs. Nodes are every stop in
// `all_stops` when given, otherwise the stops the routes visit; either way
// sorted by stop_id.
SupplyGraph build_supply_graph(const std::vector<RouteDef>& routes, const std::vector<RouteSupply>& supplies,
                               const std::vector<Stop>* all_stops = nullptr);

struct ComponentReport {
  SupplyGraph giant;
  std::vector<NodeId> members;  // giant component nodes in the input graph
  std::size_t component_count = 0;
  double coverage = 0;
  std::vector<std::size_t> component_of;  // per input node, 0 = giant
};

// Largest weakly connected component; ties go to the component holding the
// smallest node index.
ComponentReport giant_component(const SupplyGraph& g);

// Hop counts from `source`; -1 for unreachable nodes.
std::vector<std::int32_t> distances_from(const SupplyGraph& g, NodeId source, bool directed = true);
std::vector<std::int32_t> distances_from(const SupplyGraph& g, const std::string& source, bool directed = true);

enum class MetricMode { automatic, exact, sampled };

struct MetricOptions {
  MetricMode mode = MetricMode::automatic;
  std::size_t exact_threshold = 20000;
  std::size_t samples = 1000;
  std::uint64_t seed = 1;
  bool directed = true;
};

struct GraphMetrics {
  double avg_path_length = 0;
  double avg_eccentricity = 0;
  std::int32_t diameter = 0;
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  std::size_t sources = 0;
  std::uint64_t reachable_pairs = 0;
  bool sampled = false;
  bool degenerate = false;
  bool directed = true;
};

GraphMetrics graph_metrics(const SupplyGraph& g, const MetricOptions& opts = {});
std::vector<std::int32_t> eccentricities(const SupplyGraph& g, bool directed = true);

// Unnormalized shortest-path betweenness over ordered pairs.
std::vector<double> betweenness(const SupplyGraph& g, bool directed = true);

struct LocalStats {
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  double density = 0;
  bool density_defined = true;
  double avg_clustering = 0;
  double avg_weighted_degree = 0;
};

LocalStats local_stats(const SupplyGraph& g, const std::vector<NodeId>& nodes);
// Mean of (in + out) weight over `nodes`, counting every edge of g.
double avg_full_weighted_degree(const SupplyGraph& g, const std::vector<NodeId>& nodes);

void write_supplies_csv(const std::string& path, const std::vector<RouteSupply>& supplies);
void write_edges_csv(const std::string& path, const SupplyGraph& g);
void write_nodes_csv(const std::string& path, const SupplyGraph& g, const ComponentReport& comps);
// Reads graph_nodes.csv + graph_edges.csv back; only giant-component nodes when `giant_only`.
SupplyGraph load_graph(const std::string& nodes_path, const std::string& edges_path, bool giant_only);
std::string graph_geojson(const SupplyGraph& g, const StopIndex& stops,
                          const std::unordered_map<std::string, int>* community = nullptr);

}  // namespace transitnet
