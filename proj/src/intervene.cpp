#include "transitnet/intervene.hpp"

#include "transitnet/common.hpp"
#include "transitnet/csv.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <set>

namespace transitnet {

NodeId community_center(const SupplyGraph& g, const Partition& p, int community, const std::vector<double>* bc) {
  std::vector<double> own;
  if (!bc) {
    own = betweenness(g);
    bc = &own;
  }
  std::optional<NodeId> best;
  for (NodeId u = 0; u < g.node_count(); ++u) {
    if (p.assignment[u] != community) continue;
    if (!best || (*bc)[u] > (*bc)[*best]) best = u;
  }
  if (!best) throw_data(fmt::format("community {} has no members", community));
  return *best;
}

std::vector<NodeId> community_centers(const SupplyGraph& g, const Partition& p) {
  const auto bc = betweenness(g);
  std::vector<NodeId> out;
  for (std::size_t c = 0; c < p.community_count; ++c) out.push_back(community_center(g, p, static_cast<int>(c), &bc));
  return out;
}

InterventionPlan plan_from_pairs(const SupplyGraph& g, const Partition& p, const std::vector<std::pair<int, int>>& pairs,
                                 std::optional<double> weight, const std::vector<NodeId>* centers) {
  const int k = static_cast<int>(p.community_count);
  std::set<std::pair<int, int>> seen;
  for (auto [a, b] : pairs) {
    if (a < 0 || b < 0 || a >= k || b >= k) throw_config(fmt::format("unknown community in pair ({}, {})", a, b));
    if (a == b) throw_config(fmt::format("pair ({}, {}) joins a community to itself", a, b));
    if (!seen.insert(std::minmax(a, b)).second) throw_config(fmt::format("pair ({}, {}) listed twice", a, b));
  }
  InterventionPlan plan;
  plan.steps = pairs;
  if (centers && centers->size() != p.community_count) throw_data("center list and partition disagree");
  plan.centers = centers ? *centers : community_centers(g, p);
  plan.weight = weight.value_or(g.max_weight());
  if (!(plan.weight > 0)) throw_config("express edge weight must be positive");
  for (auto [a, b] : pairs) {
    plan.edges.push_back({a, b, plan.centers[static_cast<std::size_t>(a)], plan.centers[static_cast<std::size_t>(b)]});
  }
  return plan;
}

InterventionPlan plan_interventions(const FlowMatrix& weekday, const SupplyGraph& g, const Partition& p,
                                    std::size_t k, std::optional<double> weight) {
  const std::size_t n = p.community_count;
  const std::size_t available = n * (n - 1) / 2;
  if (k == 0) throw_config("intervention count must be at least 1");
  if (k > available) {
    throw_config(fmt::format("{} interventions requested but only {} community pairs exist", k, available));
  }
  if (weekday.size() != n) throw_data("flow matrix and partition disagree on the community count");
  std::vector<std::pair<int, int>> pairs;
  for (const auto& r : top_inter_pairs(weekday, k)) pairs.emplace_back(r.a, r.b);
  std::vector<std::string> notes;
  if (pairs.size() < k) {
    notes.push_back(fmt::format("only {} community pairs carry weekday flow; remaining steps use zero-flow pairs",
                                pairs.size()));
    std::set<std::pair<int, int>> used(pairs.begin(), pairs.end());
    for (int a = 0; a < static_cast<int>(n) && pairs.size() < k; ++a) {
      for (int b = a + 1; b < static_cast<int>(n) && pairs.size() < k; ++b) {
        if (!used.count({a, b})) pairs.emplace_back(a, b);
      }
    }
  }
  auto plan = plan_from_pairs(g, p, pairs, weight);
  plan.notes = std::move(notes);
  return plan;
}

AppliedStep add_express_edge(SupplyGraph& g, const ExpressEdge& e, double weight) {
  AppliedStep step;
  if (e.u == e.v) return step;
  for (auto [a, b] : {std::pair{e.u, e.v}, std::pair{e.v, e.u}}) {
    const auto prev = g.weight(a, b);
    step.duplicated = step.duplicated || prev.has_value();
    step.undo.push_back({a, b, prev});
    g.add_edge(a, b, weight);
  }
  return step;
}

void revert(SupplyGraph& g, const std::vector<AppliedStep>& steps) {
  for (auto s = steps.rbegin(); s != steps.rend(); ++s) {
    for (auto u = s->undo.rbegin(); u != s->undo.rend(); ++u) {
      if (u->previous) {
        g.set_weight(u->u, u->v, *u->previous);
      } else {
        g.remove_edge(u->u, u->v);
      }
    }
  }
}

MetricsTrajectory apply_interventions(SupplyGraph& g, const InterventionPlan& plan, const MetricOptions& opts,
                                      std::vector<AppliedStep>* applied) {
  for (const auto& e : plan.edges) {
    if (e.u >= g.node_count() || e.v >= g.node_count()) throw_data("plan center is not a graph node");
  }
  MetricsTrajectory t;
  t.steps.push_back({graph_metrics(g, opts), 0, 0, 0, false});
  for (const auto& e : plan.edges) {
    auto step = add_express_edge(g, e, plan.weight);
    TrajectoryStep ts{graph_metrics(g, opts), 0, 0, 0, step.duplicated};
    const auto& prev = t.steps.back().metrics;
    ts.delta_apl = ts.metrics.avg_path_length - prev.avg_path_length;
    ts.delta_ecc = ts.metrics.avg_eccentricity - prev.avg_eccentricity;
    ts.delta_diameter = ts.metrics.diameter - prev.diameter;
    t.steps.push_back(ts);
    if (applied) applied->push_back(std::move(step));
  }
  if (t.steps.size() > 1) {
    t.first_step_largest_apl_drop = std::all_of(t.steps.begin() + 2, t.steps.end(), [&](const TrajectoryStep& s) {
      return t.steps[1].delta_apl <= s.delta_apl;
    });
  }
  return t;
}

MetricsTrajectory preview_interventions(const SupplyGraph& g, const InterventionPlan& plan, const MetricOptions& opts) {
  SupplyGraph snapshot = g;
  return apply_interventions(snapshot, plan, opts);
}

void write_trajectory_csv(const std::string& path, const MetricsTrajectory& t) {
  csv::Writer w(path, {"step", "apl", "avg_ecc", "diameter", "delta_apl", "delta_ecc", "delta_diam"});
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& s = t.steps[i];
    w.row("{},{},{},{},{},{},{}", i, csv::fmt_double(s.metrics.avg_path_length),
          csv::fmt_double(s.metrics.avg_eccentricity), s.metrics.diameter, csv::fmt_double(s.delta_apl),
          csv::fmt_double(s.delta_ecc), s.delta_diameter);
  }
}

std::string plan_json(const SupplyGraph& g, const InterventionPlan& plan) {
  nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
  for (auto [a, b] : plan.steps) pairs.push_back({a, b});
  nlohmann::ordered_json centers = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < plan.centers.size(); ++c) {
    centers.push_back({{"community", c}, {"stop_id", g.id(plan.centers[c])}});
  }
  nlohmann::ordered_json edges = nlohmann::ordered_json::array();
  for (const auto& e : plan.edges) {
    edges.push_back({{"pair", {e.community_a, e.community_b}},
                     {"edges", nlohmann::ordered_json::array({nlohmann::ordered_json::array({g.id(e.u), g.id(e.v)}),
                                                               nlohmann::ordered_json::array({g.id(e.v), g.id(e.u)})})},
                     {"weight", plan.weight}});
  }
  return nlohmann::ordered_json{
      {"pairs", std::move(pairs)}, {"centers", std::move(centers)}, {"edges", std::move(edges)}, {"notes", plan.notes}}
      .dump(2);
}

std::string trajectory_json(const MetricsTrajectory& t) {
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& s = t.steps[i];
    steps.push_back({{"step", i},
                     {"apl", s.metrics.avg_path_length},
                     {"avg_ecc", s.metrics.avg_eccentricity},
                     {"diameter", s.metrics.diameter},
                     {"delta_apl", s.delta_apl},
                     {"delta_ecc", s.delta_ecc},
                     {"delta_diam", s.delta_diameter},
                     {"duplicated_edge", s.duplicated},
                     {"sampled", s.metrics.sampled}});
  }
  return nlohmann::ordered_json{{"steps", std::move(steps)},
                                {"first_step_largest_apl_drop", t.first_step_largest_apl_drop},
                                {"convention", "reachable ordered pairs, hop distances"}}
      .dump(2);
}

}  // namespace transitnet
