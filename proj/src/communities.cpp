#include "transitnet/communities.hpp"

#include "transitnet/common.hpp"
#include "transitnet/csv.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

namespace transitnet {

double modularity(const SupplyGraph& g, const std::vector<int>& assignment, double resolution) {
  if (assignment.size() != g.node_count()) throw_data("assignment does not cover every node");
  double total = 0;
  std::map<int, double> internal, degree;
  for (NodeId u = 0; u < g.node_count(); ++u) {
    for (const auto& a : g.out(u)) {
      total += a.weight;
      degree[assignment[u]] += a.weight;
      degree[assignment[a.to]] += a.weight;
      if (assignment[u] == assignment[a.to]) internal[assignment[u]] += a.weight;
    }
  }
  if (!(total > 0)) throw_data("modularity undefined: total edge weight is zero");
  double q = 0;
  for (const auto& [c, k] : degree) {
    const double frac = k / (2 * total);
    q += internal[c] / total - resolution * frac * frac;
  }
  return q;
}

std::vector<std::vector<NodeId>> community_members(const std::vector<int>& assignment) {
  int count = 0;
  for (int c : assignment) count = std::max(count, c + 1);
  std::vector<std::vector<NodeId>> out(static_cast<std::size_t>(count));
  for (NodeId u = 0; u < assignment.size(); ++u) out[static_cast<std::size_t>(assignment[u])].push_back(u);
  return out;
}

namespace {

// Symmetric weighted graph with self-loops. loop[u] holds A_uu, the summed
// weight of both orientations of every edge folded into u.
struct Level {
  std::vector<std::vector<std::pair<std::size_t, double>>> adj;  // no self entries
  std::vector<double> loop;
  std::vector<double> degree;
  double two_m = 0;

  std::size_t size() const { return adj.size(); }
};

Level from_graph(const SupplyGraph& g) {
  Level L;
  const std::size_t n = g.node_count();
  L.adj.resize(n);
  L.loop.assign(n, 0);
  L.degree.assign(n, 0);
  std::vector<std::map<std::size_t, double>> acc(n);
  for (NodeId u = 0; u < n; ++u) {
    for (const auto& a : g.out(u)) {
      acc[u][a.to] += a.weight;
      acc[a.to][u] += a.weight;
    }
  }
  for (std::size_t u = 0; u < n; ++u) {
    for (const auto& [v, w] : acc[u]) {
      L.adj[u].emplace_back(v, w);
      L.degree[u] += w;
    }
    L.two_m += L.degree[u];
  }
  return L;
}

double level_modularity(const Level& L, double resolution) {
  double q = 0;
  for (std::size_t c = 0; c < L.size(); ++c) {
    const double frac = L.degree[c] / L.two_m;
    q += L.loop[c] / L.two_m - resolution * frac * frac;
  }
  return q;
}

// One local-moving phase. Returns true if any node changed community.
bool local_moves(const Level& L, std::vector<std::size_t>& comm, double resolution, std::mt19937_64& rng) {
  const std::size_t n = L.size();
  std::vector<double> tot(n, 0);
  for (std::size_t u = 0; u < n; ++u) tot[comm[u]] += L.degree[u];
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> link(n, 0);
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> touched;
  bool moved_any = false;
  for (int pass = 0; pass < 1000; ++pass) {
    bool moved = false;
    for (auto u : order) {
      const std::size_t own = comm[u];
      const double ku = L.degree[u];
      touched.clear();
      touched.push_back(own);
      seen[own] = 1;
      for (const auto& [v, w] : L.adj[u]) {
        const auto c = comm[v];
        if (!seen[c]) {
          seen[c] = 1;
          touched.push_back(c);
        }
        link[c] += w;
      }
      tot[own] -= ku;
      const double scale = ku / L.two_m;
      auto gain = [&](std::size_t c) { return link[c] - resolution * tot[c] * scale; };
      std::size_t best = own;
      double best_gain = gain(own);
      for (std::size_t i = 1; i < touched.size(); ++i) {
        const double g = gain(touched[i]);
        if (g > best_gain) {
          best_gain = g;
          best = touched[i];
        }
      }
      // Only strictly positive improvements move a node.
      if (best != own && best_gain - gain(own) <= 1e-12 * (std::abs(best_gain) + ku)) best = own;
      tot[best] += ku;
      for (auto c : touched) {
        link[c] = 0;
        seen[c] = 0;
      }
      if (best != own) {
        comm[u] = best;
        moved = true;
        moved_any = true;
      }
    }
    if (!moved) break;
  }
  return moved_any;
}

// Dense relabelling by smallest member index.
std::size_t relabel(std::vector<std::size_t>& comm) {
  std::vector<std::size_t> map(comm.size(), SIZE_MAX);
  std::size_t next = 0;
  for (auto& c : comm) {
    if (map[c] == SIZE_MAX) map[c] = next++;
    c = map[c];
  }
  return next;
}

Level aggregate(const Level& L, const std::vector<std::size_t>& comm, std::size_t count) {
  Level A;
  A.adj.resize(count);
  A.loop.assign(count, 0);
  A.degree.assign(count, 0);
  A.two_m = L.two_m;
  std::vector<std::map<std::size_t, double>> acc(count);
  for (std::size_t u = 0; u < L.size(); ++u) {
    const auto cu = comm[u];
    A.loop[cu] += L.loop[u];
    A.degree[cu] += L.degree[u];
    for (const auto& [v, w] : L.adj[u]) {
      if (comm[v] == cu) {
        A.loop[cu] += w;
      } else {
        acc[cu][comm[v]] += w;
      }
    }
  }
  for (std::size_t c = 0; c < count; ++c) {
    for (const auto& [d, w] : acc[c]) A.adj[c].emplace_back(d, w);
  }
  return A;
}

}  // namespace

Partition louvain(const SupplyGraph& g, const LouvainOptions& opts) {
  if (g.node_count() == 0) throw_data("louvain on an empty graph");
  Level L = from_graph(g);
  if (!(L.two_m > 0)) throw_data("louvain: total edge weight is zero");
  std::mt19937_64 rng(opts.seed);

  std::vector<std::size_t> node_comm(g.node_count());
  std::iota(node_comm.begin(), node_comm.end(), 0);
  Partition p;
  p.level_modularity.push_back(level_modularity(L, opts.resolution));
  while (true) {
    std::vector<std::size_t> comm(L.size());
    std::iota(comm.begin(), comm.end(), 0);
    if (!local_moves(L, comm, opts.resolution, rng)) break;
    const std::size_t count = relabel(comm);
    for (auto& c : node_comm) c = comm[c];
    L = aggregate(L, comm, count);
    ++p.levels;
    p.level_modularity.push_back(level_modularity(L, opts.resolution));
    if (count == comm.size()) break;
  }
  p.community_count = relabel(node_comm);
  p.assignment.assign(node_comm.begin(), node_comm.end());
  p.modularity = p.level_modularity.back();
  return p;
}

std::vector<CommunityStats> community_stats(const SupplyGraph& g, const Partition& p, bool directed) {
  const auto members = community_members(p.assignment);
  std::vector<CommunityStats> out;
  for (std::size_t c = 0; c < members.size(); ++c) {
    const auto& nodes = members[c];
    CommunityStats s;
    s.id = static_cast<int>(c);
    s.node_count = nodes.size();
    if (nodes.empty()) continue;
    const SupplyGraph sub = g.induced(nodes);
    MetricOptions mo;
    mo.mode = MetricMode::exact;
    mo.directed = directed;
    s.diameter = graph_metrics(sub, mo).diameter;
    s.normalized_diameter = static_cast<double>(s.diameter) / static_cast<double>(s.node_count);
    const LocalStats ls = local_stats(g, nodes);
    s.density = ls.density;
    s.density_defined = ls.density_defined;
    s.avg_clustering = ls.avg_clustering;
    s.avg_weighted_degree = ls.avg_weighted_degree;
    s.avg_weighted_degree_full = avg_full_weighted_degree(g, nodes);
    s.cut_weight = s.avg_weighted_degree_full * static_cast<double>(s.node_count) -
                   s.avg_weighted_degree * static_cast<double>(s.node_count);
    out.push_back(s);
  }
  return out;
}

void write_partition_csv(const std::string& path, const SupplyGraph& g, const Partition& p) {
  csv::Writer w(path, {"node_id", "community_id"});
  for (NodeId u = 0; u < g.node_count(); ++u) w.row("{},{}", g.id(u), p.assignment[u]);
}

Partition load_partition(const std::string& path, const SupplyGraph& g) {
  csv::Reader r(path);
  r.require_header({"node_id", "community_id"});
  Partition p;
  p.assignment.assign(g.node_count(), -1);
  while (r.next()) {
    const auto& f = r.fields();
    auto c = f.size() == 2 ? csv::to_int(f[1]) : std::nullopt;
    if (!c || *c < 0) throw_data(fmt::format("{}:{}: malformed partition row", path, r.line_number()));
    auto u = g.find(std::string(f[0]));
    if (!u) throw_data(fmt::format("{}:{}: node {} is not in the graph", path, r.line_number(), f[0]));
    p.assignment[*u] = static_cast<int>(*c);
  }
  for (int c : p.assignment) {
    if (c < 0) throw_data(path + ": partition does not cover every graph node");
    p.community_count = std::max<std::size_t>(p.community_count, static_cast<std::size_t>(c) + 1);
  }
  p.modularity = modularity(g, p.assignment);
  return p;
}

void write_community_stats_csv(const std::string& path, const std::vector<CommunityStats>& stats) {
  csv::Writer w(path, {"community_id", "node_count", "diameter", "normalized_diameter", "density", "avg_clustering",
                       "avg_weighted_degree", "avg_weighted_degree_full", "cut_weight"});
  for (const auto& s : stats) {
    w.row("{},{},{},{},{},{},{},{},{}", s.id, s.node_count, s.diameter, csv::fmt_double(s.normalized_diameter),
          s.density_defined ? csv::fmt_double(s.density) : std::string(), csv::fmt_double(s.avg_clustering),
          csv::fmt_double(s.avg_weighted_degree), csv::fmt_double(s.avg_weighted_degree_full),
          csv::fmt_double(s.cut_weight));
  }
}

}  // namespace transitnet
