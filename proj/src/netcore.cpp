#include "transitnet/netcore.hpp"

#include "transitnet/common.hpp"
#include "transitnet/csv.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <thread>

namespace transitnet {

// ---------------------------------------------------------------------------
// Route supply

namespace {

using Tracks = std::map<std::string, std::vector<const GpsPing*>>;

Tracks tracks_of(const std::vector<const GpsPing*>& pings) {
  Tracks t;
  for (const auto* p : pings) t[p->vehicle_id].push_back(p);
  for (auto& [_, v] : t) {
    std::stable_sort(v.begin(), v.end(),
                     [](const GpsPing* a, const GpsPing* b) { return a->timestamp.epoch < b->timestamp.epoch; });
  }
  return t;
}

RouteSupply supply_from_tracks(const RouteDef& route, const Tracks& tracks, std::size_t days, const StopIndex& stops,
                               double radius) {
  RouteSupply s{route.route_id, route.direction, 0, 0, 0, 0, days};
  const Stop* first = stops.find(route.itinerary.front());
  const Stop* last = stops.find(route.itinerary.back());
  if (!first || !last) throw_data("route " + route.route_id + " references an unknown stop");
  for (const auto& [_, track] : tracks) {
    if (track.empty()) continue;
    ++s.V;
    bool armed = false, departed = false;
    for (const auto* p : track) {
      const bool near_first = haversine_m(p->lat, p->lon, first->lat, first->lon) <= radius;
      const bool near_last = haversine_m(p->lat, p->lon, last->lat, last->lon) <= radius;
      if (armed && departed && near_last) {
        ++s.completions;
        armed = departed = false;
      }
      if (near_first) {
        armed = true;
        departed = false;
      } else if (armed) {
        departed = true;
      }
    }
  }
  if (s.V > 0 && days > 0) {
    s.C = static_cast<double>(s.completions) / (static_cast<double>(s.V) * static_cast<double>(days));
  }
  s.w = static_cast<double>(s.V) * s.C;
  return s;
}

std::size_t distinct_days(const std::vector<const GpsPing*>& pings) {
  std::set<Day> days;
  for (const auto* p : pings) days.insert(local_day(p->timestamp));
  return days.size();
}

}  // namespace

RouteSupply compute_route_supply(const RouteDef& route, const std::vector<GpsPing>& pings, const StopIndex& stops,
                                 double radius_m) {
  std::vector<const GpsPing*> mine;
  for (const auto& p : pings) {
    if (p.route_id == route.route_id) mine.push_back(&p);
  }
  return supply_from_tracks(route, tracks_of(mine), distinct_days(mine), stops, radius_m);
}

std::vector<RouteSupply> compute_all_supplies(const std::vector<RouteDef>& routes,
                                              const std::vector<GpsPing>& pings, const StopIndex& stops,
                                              double radius_m) {
  std::unordered_map<std::string, std::vector<const GpsPing*>> by_route;
  std::vector<const GpsPing*> all;
  all.reserve(pings.size());
  for (const auto& p : pings) {
    by_route[p.route_id].push_back(&p);
    all.push_back(&p);
  }
  const std::size_t days = distinct_days(all);
  std::unordered_map<std::string, Tracks> tracks;
  std::vector<RouteSupply> out;
  out.reserve(routes.size());
  for (const auto& r : routes) {
    auto it = tracks.find(r.route_id);
    if (it == tracks.end()) it = tracks.emplace(r.route_id, tracks_of(by_route[r.route_id])).first;
    out.push_back(supply_from_tracks(r, it->second, days, stops, radius_m));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Graph

SupplyGraph::SupplyGraph(const std::vector<std::string>& node_ids) {
  for (const auto& id : node_ids) add_node(id);
}

NodeId SupplyGraph::add_node(const std::string& id) {
  auto [it, fresh] = index_.emplace(id, static_cast<NodeId>(ids_.size()));
  if (!fresh) throw_data("duplicate node id " + id);
  ids_.push_back(id);
  out_.emplace_back();
  in_.emplace_back();
  return it->second;
}

std::optional<NodeId> SupplyGraph::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

Arc* find_arc(std::vector<Arc>& arcs, NodeId to) {
  for (auto& a : arcs) {
    if (a.to == to) return &a;
  }
  return nullptr;
}

}  // namespace

void SupplyGraph::add_edge(NodeId u, NodeId v, double w) {
  if (u >= ids_.size() || v >= ids_.size()) throw_data("edge endpoint out of range");
  if (u == v) throw_data("self-loop on " + ids_[u]);
  if (!(w > 0)) throw_data("edge weight must be positive");
  if (Arc* a = find_arc(out_[u], v)) {
    a->weight += w;
    find_arc(in_[v], u)->weight += w;
    return;
  }
  out_[u].push_back({v, w});
  in_[v].push_back({u, w});
  ++edge_count_;
}

void SupplyGraph::set_weight(NodeId u, NodeId v, double w) {
  if (!(w > 0)) throw_data("edge weight must be positive");
  Arc* a = find_arc(out_[u], v);
  if (!a) throw_data("no edge " + ids_[u] + " -> " + ids_[v]);
  a->weight = w;
  find_arc(in_[v], u)->weight = w;
}

bool SupplyGraph::remove_edge(NodeId u, NodeId v) {
  auto erase = [](std::vector<Arc>& arcs, NodeId to) {
    auto it = std::find_if(arcs.begin(), arcs.end(), [&](const Arc& a) { return a.to == to; });
    if (it == arcs.end()) return false;
    arcs.erase(it);
    return true;
  };
  if (u >= ids_.size() || v >= ids_.size() || !erase(out_[u], v)) return false;
  erase(in_[v], u);
  --edge_count_;
  return true;
}

std::optional<double> SupplyGraph::weight(NodeId u, NodeId v) const {
  for (const auto& a : out_[u]) {
    if (a.to == v) return a.weight;
  }
  return std::nullopt;
}

std::vector<Edge> SupplyGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count_);
  for (NodeId u = 0; u < ids_.size(); ++u) {
    for (const auto& a : out_[u]) out.push_back({u, a.to, a.weight});
  }
  std::sort(out.begin(), out.end(),
            [](const Edge& a, const Edge& b) { return a.src != b.src ? a.src < b.src : a.dst < b.dst; });
  return out;
}

double SupplyGraph::total_weight() const {
  double t = 0;
  for (const auto& e : edges()) t += e.weight;
  return t;
}

double SupplyGraph::max_weight() const {
  double m = 0;
  for (const auto& arcs : out_) {
    for (const auto& a : arcs) m = std::max(m, a.weight);
  }
  return m;
}

SupplyGraph SupplyGraph::induced(const std::vector<NodeId>& nodes) const {
  SupplyGraph g;
  std::vector<std::int64_t> local(ids_.size(), -1);
  for (auto u : nodes) local[u] = g.add_node(ids_[u]);
  for (auto u : nodes) {
    for (const auto& a : out_[u]) {
      if (local[a.to] >= 0) g.add_edge(static_cast<NodeId>(local[u]), static_cast<NodeId>(local[a.to]), a.weight);
    }
  }
  return g;
}

SupplyGraph build_supply_graph(const std::vector<RouteDef>& routes, const std::vector<RouteSupply>& supplies,
                               const std::vector<Stop>* all_stops) {
  if (supplies.size() != routes.size()) throw_data("one supply per route definition expected");
  std::vector<std::string> ids;
  if (all_stops) {
    for (const auto& s : *all_stops) ids.push_back(s.stop_id);
  } else {
    for (const auto& r : routes) ids.insert(ids.end(), r.itinerary.begin(), r.itinerary.end());
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  SupplyGraph g(ids);
  for (std::size_t i = 0; i < routes.size(); ++i) {
    const double w = supplies[i].w;
    if (!(w > 0)) continue;
    const auto& it = routes[i].itinerary;
    for (std::size_t p = 0; p + 1 < it.size(); ++p) {
      auto a = g.find(it[p]);
      auto b = g.find(it[p + 1]);
      if (!a || !b) throw_data("route " + routes[i].route_id + " visits unknown stop");
      if (*a != *b) g.add_edge(*a, *b, w);
    }
  }
  return g;
}

ComponentReport giant_component(const SupplyGraph& g) {
  const std::size_t n = g.node_count();
  if (n == 0) throw_data("giant component of an empty graph");
  std::vector<NodeId> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](NodeId u) {
    while (parent[u] != u) u = parent[u] = parent[parent[u]];
    return u;
  };
  for (NodeId u = 0; u < n; ++u) {
    for (const auto& a : g.out(u)) {
      auto ru = root(u), rv = root(a.to);
      if (ru != rv) parent[std::max(ru, rv)] = std::min(ru, rv);
    }
  }
  // Roots are the smallest index of their component.
  std::map<NodeId, std::vector<NodeId>> comps;
  for (NodeId u = 0; u < n; ++u) comps[root(u)].push_back(u);
  std::vector<const std::vector<NodeId>*> order;
  for (const auto& [_, members] : comps) order.push_back(&members);
  std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->size() > b->size(); });

  ComponentReport r;
  r.component_count = order.size();
  r.component_of.assign(n, 0);
  for (std::size_t c = 0; c < order.size(); ++c) {
    for (auto u : *order[c]) r.component_of[u] = c;
  }
  r.members = *order.front();
  r.coverage = static_cast<double>(r.members.size()) / static_cast<double>(n);
  r.giant = g.induced(r.members);
  return r;
}

// ---------------------------------------------------------------------------
// Traversals

namespace {

class Bfs {
 public:
  explicit Bfs(const SupplyGraph& g, bool directed) : g_(g), directed_(directed), dist_(g.node_count(), -1) {
    queue_.reserve(g.node_count());
  }

  // Visits nodes in BFS order from s; `queue()` holds the order afterwards.
  void run(NodeId s) {
    for (auto u : queue_) dist_[u] = -1;
    queue_.clear();
    dist_[s] = 0;
    queue_.push_back(s);
    for (std::size_t head = 0; head < queue_.size(); ++head) {
      const NodeId u = queue_[head];
      auto visit = [&](NodeId v) {
        if (dist_[v] < 0) {
          dist_[v] = dist_[u] + 1;
          queue_.push_back(v);
        }
      };
      for (const auto& a : g_.out(u)) visit(a.to);
      if (!directed_) {
        for (const auto& a : g_.in(u)) visit(a.to);
      }
    }
  }

  const std::vector<std::int32_t>& dist() const { return dist_; }
  const std::vector<NodeId>& queue() const { return queue_; }

 private:
  const SupplyGraph& g_;
  bool directed_;
  std::vector<std::int32_t> dist_;
  std::vector<NodeId> queue_;
};

std::size_t worker_count(std::size_t tasks) {
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min({hw, tasks / 64 + 1, std::size_t{16}}));
}

// Runs fn(worker, begin, end) over contiguous slices of [0, n).
template <typename Fn>
void parallel_slices(std::size_t n, std::size_t workers, Fn fn) {
  if (workers <= 1) {
    fn(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = n * w / workers, e = n * (w + 1) / workers;
    pool.emplace_back([&fn, w, b, e] { fn(w, b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

std::vector<std::int32_t> distances_from(const SupplyGraph& g, NodeId source, bool directed) {
  if (source >= g.node_count()) throw_data("unknown source node");
  Bfs bfs(g, directed);
  bfs.run(source);
  return bfs.dist();
}

std::vector<std::int32_t> distances_from(const SupplyGraph& g, const std::string& source, bool directed) {
  auto s = g.find(source);
  if (!s) throw_data("unknown source node " + source);
  return distances_from(g, *s, directed);
}

std::vector<std::int32_t> eccentricities(const SupplyGraph& g, bool directed) {
  std::vector<std::int32_t> ecc(g.node_count(), 0);
  parallel_slices(g.node_count(), worker_count(g.node_count()), [&](std::size_t, std::size_t b, std::size_t e) {
    Bfs bfs(g, directed);
    for (std::size_t s = b; s < e; ++s) {
      bfs.run(static_cast<NodeId>(s));
      ecc[s] = bfs.dist()[bfs.queue().back()];
    }
  });
  return ecc;
}

GraphMetrics graph_metrics(const SupplyGraph& g, const MetricOptions& opts) {
  GraphMetrics m;
  m.node_count = g.node_count();
  m.edge_count = g.edge_count();
  m.directed = opts.directed;
  if (m.node_count == 0) throw_data("metrics of an empty graph");
  if (m.edge_count == 0) {
    m.degenerate = true;
    return m;
  }
  const std::size_t n = m.node_count;
  std::vector<NodeId> sources(n);
  std::iota(sources.begin(), sources.end(), 0);
  const bool sample = opts.mode == MetricMode::sampled ||
                      (opts.mode == MetricMode::automatic && n > opts.exact_threshold);
  if (sample && opts.samples < n) {
    std::mt19937_64 rng(opts.seed);
    std::shuffle(sources.begin(), sources.end(), rng);
    sources.resize(opts.samples);
    std::sort(sources.begin(), sources.end());
    m.sampled = true;
  }
  m.sources = sources.size();

  struct Acc {
    std::uint64_t dist_sum = 0, pairs = 0, ecc_sum = 0, ecc_nodes = 0;
    std::int32_t diameter = 0;
  };
  const std::size_t workers = worker_count(sources.size());
  std::vector<Acc> acc(workers);
  parallel_slices(sources.size(), workers, [&](std::size_t w, std::size_t b, std::size_t e) {
    Bfs bfs(g, opts.directed);
    Acc& a = acc[w];
    for (std::size_t i = b; i < e; ++i) {
      bfs.run(sources[i]);
      const auto& q = bfs.queue();
      if (q.size() < 2) continue;
      for (std::size_t k = 1; k < q.size(); ++k) a.dist_sum += static_cast<std::uint64_t>(bfs.dist()[q[k]]);
      a.pairs += q.size() - 1;
      const std::int32_t ecc = bfs.dist()[q.back()];
      a.ecc_sum += static_cast<std::uint64_t>(ecc);
      ++a.ecc_nodes;
      a.diameter = std::max(a.diameter, ecc);
    }
  });
  Acc total;
  for (const auto& a : acc) {
    total.dist_sum += a.dist_sum;
    total.pairs += a.pairs;
    total.ecc_sum += a.ecc_sum;
    total.ecc_nodes += a.ecc_nodes;
    total.diameter = std::max(total.diameter, a.diameter);
  }
  m.reachable_pairs = total.pairs;
  if (total.pairs > 0) m.avg_path_length = static_cast<double>(total.dist_sum) / static_cast<double>(total.pairs);
  if (total.ecc_nodes > 0) {
    m.avg_eccentricity = static_cast<double>(total.ecc_sum) / static_cast<double>(total.ecc_nodes);
  }
  m.diameter = total.diameter;
  return m;
}

std::vector<double> betweenness(const SupplyGraph& g, bool directed) {
  const std::size_t n = g.node_count();
  const std::size_t workers = worker_count(n);
  std::vector<std::vector<double>> partial(workers, std::vector<double>(n, 0.0));
  parallel_slices(n, workers, [&](std::size_t w, std::size_t b, std::size_t e) {
    Bfs bfs(g, directed);
    std::vector<double> sigma(n, 0.0), delta(n, 0.0);
    auto& bc = partial[w];
    for (std::size_t s = b; s < e; ++s) {
      bfs.run(static_cast<NodeId>(s));
      const auto& order = bfs.queue();
      const auto& dist = bfs.dist();
      for (auto u : order) {
        sigma[u] = 0;
        delta[u] = 0;
      }
      sigma[s] = 1;
      // Path counts along the BFS DAG, then dependencies in reverse order.
      auto each_succ = [&](NodeId u, auto&& f) {
        for (const auto& a : g.out(u)) {
          if (dist[a.to] == dist[u] + 1) f(a.to);
        }
        if (!directed) {
          for (const auto& a : g.in(u)) {
            if (dist[a.to] == dist[u] + 1) f(a.to);
          }
        }
      };
      for (auto u : order) each_succ(u, [&](NodeId v) { sigma[v] += sigma[u]; });
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const NodeId u = *it;
        each_succ(u, [&](NodeId v) { delta[u] += sigma[u] / sigma[v] * (1.0 + delta[v]); });
        if (u != s) bc[u] += delta[u];
      }
    }
  });
  std::vector<double> out(n, 0.0);
  for (const auto& p : partial) {
    for (std::size_t i = 0; i < n; ++i) out[i] += p[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Local statistics

LocalStats local_stats(const SupplyGraph& g, const std::vector<NodeId>& nodes) {
  LocalStats s;
  s.node_count = nodes.size();
  if (nodes.empty()) {
    s.density_defined = false;
    return s;
  }
  std::vector<std::int64_t> local(g.node_count(), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = static_cast<std::int64_t>(i);
  std::vector<std::vector<std::size_t>> und(nodes.size());
  double weight = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (const auto& a : g.out(nodes[i])) {
      if (local[a.to] < 0) continue;
      const auto j = static_cast<std::size_t>(local[a.to]);
      ++s.edge_count;
      weight += a.weight;
      und[i].push_back(j);
      und[j].push_back(i);
    }
  }
  for (auto& adj : und) {
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
  }
  const double n = static_cast<double>(nodes.size());
  if (nodes.size() >= 2) {
    s.density = static_cast<double>(s.edge_count) / (n * (n - 1));
  } else {
    s.density_defined = false;
  }
  std::vector<char> mark(nodes.size(), 0);
  double cc = 0;
  for (std::size_t v = 0; v < nodes.size(); ++v) {
    const auto k = und[v].size();
    if (k < 2) continue;
    for (auto u : und[v]) mark[u] = 1;
    std::size_t links = 0;
    for (auto u : und[v]) {
      for (auto w : und[u]) {
        if (w > u && mark[w]) ++links;
      }
    }
    for (auto u : und[v]) mark[u] = 0;
    cc += 2.0 * static_cast<double>(links) / (static_cast<double>(k) * static_cast<double>(k - 1));
  }
  s.avg_clustering = cc / n;
  s.avg_weighted_degree = 2.0 * weight / n;
  return s;
}

double avg_full_weighted_degree(const SupplyGraph& g, const std::vector<NodeId>& nodes) {
  if (nodes.empty()) return 0;
  double total = 0;
  for (auto u : nodes) {
    for (const auto& a : g.out(u)) total += a.weight;
    for (const auto& a : g.in(u)) total += a.weight;
  }
  return total / static_cast<double>(nodes.size());
}

// ---------------------------------------------------------------------------
// Files

void write_supplies_csv(const std::string& path, const std::vector<RouteSupply>& supplies) {
  csv::Writer w(path, {"route_id", "direction", "V", "C", "w_L", "completions", "days"});
  for (const auto& s : supplies) {
    w.row("{},{},{},{},{},{},{}", s.route_id, to_string(s.direction), s.V, csv::fmt_double(s.C),
          csv::fmt_double(s.w), s.completions, s.days);
  }
}

void write_edges_csv(const std::string& path, const SupplyGraph& g) {
  csv::Writer w(path, {"src", "dst", "weight"});
  for (const auto& e : g.edges()) w.row("{},{},{}", g.id(e.src), g.id(e.dst), csv::fmt_double(e.weight));
}

void write_nodes_csv(const std::string& path, const SupplyGraph& g, const ComponentReport& comps) {
  csv::Writer w(path, {"node_id", "component", "in_giant"});
  for (NodeId u = 0; u < g.node_count(); ++u) {
    w.row("{},{},{}", g.id(u), comps.component_of[u], comps.component_of[u] == 0 ? 1 : 0);
  }
}

SupplyGraph load_graph(const std::string& nodes_path, const std::string& edges_path, bool giant_only) {
  SupplyGraph g;
  {
    csv::Reader r(nodes_path);
    r.require_header({"node_id", "component", "in_giant"});
    while (r.next()) {
      const auto& f = r.fields();
      if (f.size() != 3) throw_data(fmt::format("{}:{}: expected 3 fields", nodes_path, r.line_number()));
      if (!giant_only || f[2] == "1") g.add_node(std::string(f[0]));
    }
  }
  csv::Reader r(edges_path);
  r.require_header({"src", "dst", "weight"});
  while (r.next()) {
    const auto& f = r.fields();
    auto w = f.size() == 3 ? csv::to_double(f[2]) : std::nullopt;
    if (!w) throw_data(fmt::format("{}:{}: malformed edge", edges_path, r.line_number()));
    auto a = g.find(std::string(f[0]));
    auto b = g.find(std::string(f[1]));
    if (a && b) {
      g.add_edge(*a, *b, *w);
    } else if (!giant_only) {
      throw_data(fmt::format("{}:{}: edge references unknown node", edges_path, r.line_number()));
    }
  }
  return g;
}

std::string graph_geojson(const SupplyGraph& g, const StopIndex& stops,
                          const std::unordered_map<std::string, int>* community) {
  nlohmann::json features = nlohmann::json::array();
  for (NodeId u = 0; u < g.node_count(); ++u) {
    const Stop* s = stops.find(g.id(u));
    if (!s) continue;
    nlohmann::json props{{"kind", "stop"}, {"stop_id", s->stop_id}, {"is_terminal", s->is_terminal}};
    if (community) {
      auto it = community->find(s->stop_id);
      props["community"] = it == community->end() ? nlohmann::json(nullptr) : nlohmann::json(it->second);
    }
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Point"}, {"coordinates", {s->lon, s->lat}}}},
                        {"properties", std::move(props)}});
  }
  for (const auto& e : g.edges()) {
    const Stop* a = stops.find(g.id(e.src));
    const Stop* b = stops.find(g.id(e.dst));
    if (!a || !b) continue;
    features.push_back(
        {{"type", "Feature"},
         {"geometry", {{"type", "LineString"}, {"coordinates", {{a->lon, a->lat}, {b->lon, b->lat}}}}},
         {"properties", {{"kind", "edge"}, {"src", a->stop_id}, {"dst", b->stop_id}, {"weight", e.weight}}}});
  }
  return nlohmann::json{{"type", "FeatureCollection"}, {"features", std::move(features)}}.dump();
}

}  // namespace transitnet
