#pragma once

#include "transitnet/communities.hpp"
#include "transitnet/flows.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace transitnet {

// Member with the largest betweenness on the whole graph; ties go to the
// smallest node index. `bc` may carry precomputed betweenness.
NodeId community_center(const SupplyGraph& g, const Partition& p, int community,
                        const std::vector<double>* bc = nullptr);
std::vector<NodeId> community_centers(const SupplyGraph& g, const Partition& p);

struct ExpressEdge {
  int community_a;
  int community_b;
  NodeId u;  // center of community_a
  NodeId v;  // center of community_b
};

struct InterventionPlan {
  std::vector<std::pair<int, int>> steps;
  std::vector<NodeId> centers;  // per community
  std::vector<ExpressEdge> edges;
  double weight = 0;
  std::vector<std::string> notes;
};

// Steps follow the weekday inter-community ranking. Zero-flow pairs fill up
// the plan, in id order, when fewer than k pairs carry flow.
InterventionPlan plan_interventions(const FlowMatrix& weekday, const SupplyGraph& g, const Partition& p,
                                    std::size_t k, std::optional<double> weight = std::nullopt);
// Plan for explicit community pairs, e.g. from a preview request.
InterventionPlan plan_from_pairs(const SupplyGraph& g, const Partition& p,
                                 const std::vector<std::pair<int, int>>& pairs,
                                 std::optional<double> weight = std::nullopt,
                                 const std::vector<NodeId>* centers = nullptr);

struct EdgeUndo {
  NodeId u;
  NodeId v;
  std::optional<double> previous;  // nullopt: the edge did not exist
};

struct AppliedStep {
  std::vector<EdgeUndo> undo;
  bool duplicated = false;  // an express edge already existed and was reinforced
};

AppliedStep add_express_edge(SupplyGraph& g, const ExpressEdge& e, double weight);
void revert(SupplyGraph& g, const std::vector<AppliedStep>& steps);

struct TrajectoryStep {
  GraphMetrics metrics;
  double delta_apl = 0;
  double delta_ecc = 0;
  std::int32_t delta_diameter = 0;
  bool duplicated = false;
};

struct MetricsTrajectory {
  std::vector<TrajectoryStep> steps;  // steps[0] is the baseline
  bool first_step_largest_apl_drop = false;
};

// Applies the plan cumulatively to `g` and records metrics after each step.
// The applied steps are returned through `applied` so callers can revert.
MetricsTrajectory apply_interventions(SupplyGraph& g, const InterventionPlan& plan, const MetricOptions& opts = {},
                                      std::vector<AppliedStep>* applied = nullptr);
// Works on a private copy; g is untouched.
MetricsTrajectory preview_interventions(const SupplyGraph& g, const InterventionPlan& plan,
                                        const MetricOptions& opts = {});

void write_trajectory_csv(const std::string& path, const MetricsTrajectory& t);
std::string plan_json(const SupplyGraph& g, const InterventionPlan& plan);
std::string trajectory_json(const MetricsTrajectory& t);

}  // namespace transitnet
