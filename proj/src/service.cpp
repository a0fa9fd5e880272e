#include "transitnet/service.hpp"

#include "transitnet/common.hpp"
#include "transitnet/workspace.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include <filesystem>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace transitnet {

struct Service::Snapshot {
  std::string digest;
  SupplyGraph graph;
  Partition partition;
  std::vector<NodeId> centers;
  json graph_summary;
  json communities;
  json geojson;
  json flows;
  std::optional<FlowMatrix> weekday;
  std::optional<json> saved_plan;
  std::optional<json> saved_trajectory;
};

namespace {

std::shared_ptr<const Service::Snapshot> load_snapshot(const std::string& dir) {
  Workspace ws(dir, PipelineConfig{});
  for (const char* name : {artifact::graph, artifact::partition, artifact::flows}) {
    try {
      ws.require(name);
    } catch (const Error& e) {
      throw_artifact(std::string("incomplete workspace: ") + e.what());
    }
  }
  auto s = std::make_shared<Service::Snapshot>();
  s->digest = ws.manifest().digest();
  s->graph = load_graph(ws.path(wsfile::graph_nodes), ws.path(wsfile::graph_edges), true);
  s->partition = load_partition(ws.path(wsfile::communities), s->graph);
  s->centers = community_centers(s->graph, s->partition);
  s->graph_summary = read_json_file(ws.path(wsfile::graph_metrics));
  s->communities = read_json_file(ws.path(wsfile::partition_summary));
  s->geojson = read_json_file(ws.path(wsfile::communities_geojson));
  s->flows = read_json_file(ws.path(wsfile::flows_summary));
  const auto weekday_file = ws.path(wsfile::flow_matrix(DayClass::weekday));
  if (fs::exists(weekday_file)) s->weekday = load_flow_matrix_csv(weekday_file, DayClass::weekday);
  if (ws.manifest().find(artifact::intervention)) {
    try {
      ws.require(artifact::intervention);
      s->saved_plan = read_json_file(ws.path(wsfile::plan));
      s->saved_trajectory = read_json_file(ws.path(wsfile::trajectory_json));
    } catch (const Error&) {
      // A stale plan is not served; the default plan is computed instead.
    }
  }
  return s;
}

Response reply(int status, json body) { return {status, body.dump(2), "application/json"}; }

Response error_reply(int status, const std::string& digest, const std::string& message) {
  json j{{"error", message}};
  if (!digest.empty()) j["manifest_digest"] = digest;
  return reply(status, std::move(j));
}

json trajectory_to_json(const MetricsTrajectory& t) {
  json steps = json::array();
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
  return {{"steps", std::move(steps)}, {"first_step_largest_apl_drop", t.first_step_largest_apl_drop}};
}

json plan_to_json(const SupplyGraph& g, const InterventionPlan& plan) {
  return json::parse(plan_json(g, plan));
}

}  // namespace

Service::Service(std::string workspace_dir, MetricOptions metrics, std::size_t default_k)
    : dir_(std::move(workspace_dir)), metrics_(metrics), default_k_(default_k) {
  if (!fs::is_directory(dir_)) throw_artifact("incomplete workspace: " + dir_ + " is not a directory");
  snap_ = load_snapshot(dir_);
}

Service::~Service() = default;

std::string Service::manifest_digest() const { return current()->digest; }

std::shared_ptr<const Service::Snapshot> Service::current() const {
  const auto digest = Manifest::load((fs::path(dir_) / wsfile::manifest).string()).digest();
  std::lock_guard lock(mu_);
  if (snap_->digest != digest) snap_ = load_snapshot(dir_);
  return snap_;
}

Response Service::handle(const std::string& method, const std::string& path,
                         const std::map<std::string, std::string>& query, const std::string& body) const {
  std::shared_ptr<const Snapshot> s;
  try {
    s = current();
  } catch (const Error& e) {
    return error_reply(503, "", e.what());
  }
  const auto& d = s->digest;

  const bool is_get = method == "GET";
  const bool is_post = method == "POST";
  auto wrong_method = [&] { return error_reply(405, d, fmt::format("{} not allowed on {}", method, path)); };

  try {
    if (path == "/api/graph/summary") {
      if (!is_get) return wrong_method();
      json j = s->graph_summary;
      j["manifest_digest"] = d;
      return reply(200, std::move(j));
    }
    if (path == "/api/graph/geojson") {
      if (!is_get) return wrong_method();
      return reply(200, {{"manifest_digest", d}, {"geojson", s->geojson}});
    }
    if (path == "/api/communities") {
      if (!is_get) return wrong_method();
      json centers = json::array();
      for (std::size_t c = 0; c < s->centers.size(); ++c) {
        centers.push_back({{"community", c}, {"stop_id", s->graph.id(s->centers[c])}});
      }
      return reply(200, {{"manifest_digest", d},
                         {"community_count", s->communities["community_count"]},
                         {"modularity", s->communities["modularity"]},
                         {"stats", s->communities["stats"]},
                         {"centers", std::move(centers)},
                         {"geojson", "/api/graph/geojson"}});
    }
    if (path == "/api/flows") {
      if (!is_get) return wrong_method();
      json classes = s->flows["day_classes"];
      auto it = query.find("day_class");
      if (it != query.end()) {
        if (!parse_day_class(it->second)) {
          return error_reply(400, d, "day_class must be weekday, saturday or sunday_holiday");
        }
        json picked = json::array();
        for (const auto& c : classes) {
          if (c["day_class"] == it->second) picked.push_back(c);
        }
        if (picked.empty()) return error_reply(404, d, "no OD pairs on " + it->second + " days");
        classes = std::move(picked);
      }
      return reply(200, {{"manifest_digest", d},
                         {"unit", s->flows["unit"]},
                         {"day_classes", std::move(classes)},
                         {"notes", s->flows["notes"]}});
    }
    if (path == "/api/interventions/plan") {
      if (!is_get) return wrong_method();
      if (s->saved_plan) {
        return reply(200, {{"manifest_digest", d},
                           {"source", "saved"},
                           {"plan", *s->saved_plan},
                           {"trajectory",
                            {{"steps", (*s->saved_trajectory)["steps"]},
                             {"first_step_largest_apl_drop", (*s->saved_trajectory)["first_step_largest_apl_drop"]}}}});
      }
      if (!s->weekday) return error_reply(404, d, "no weekday flows to rank community pairs");
      const std::size_t n = s->partition.community_count;
      const std::size_t k = std::min(default_k_, n * (n - 1) / 2);
      if (k == 0) return error_reply(404, d, "fewer than two communities; no plan possible");
      FlowMatrix m(n, DayClass::weekday);
      for (std::size_t a = 0; a < std::min(n, s->weekday->size()); ++a) {
        for (std::size_t b = 0; b < std::min(n, s->weekday->size()); ++b) m.counts[a][b] = s->weekday->counts[a][b];
      }
      std::vector<std::pair<int, int>> pairs;
      for (const auto& r : top_inter_pairs(m, k)) pairs.emplace_back(r.a, r.b);
      for (int a = 0; a < static_cast<int>(n) && pairs.size() < k; ++a) {
        for (int b = a + 1; b < static_cast<int>(n) && pairs.size() < k; ++b) {
          if (std::find(pairs.begin(), pairs.end(), std::pair{a, b}) == pairs.end()) pairs.emplace_back(a, b);
        }
      }
      const auto plan = plan_from_pairs(s->graph, s->partition, pairs, std::nullopt, &s->centers);
      const auto t = preview_interventions(s->graph, plan, metrics_);
      return reply(200, {{"manifest_digest", d},
                         {"source", "default"},
                         {"plan", plan_to_json(s->graph, plan)},
                         {"trajectory", trajectory_to_json(t)}});
    }
    if (path == "/api/interventions/preview") {
      if (!is_post) return wrong_method();
      json req;
      try {
        req = json::parse(body);
      } catch (const json::exception& e) {
        return error_reply(400, d, std::string("request body is not JSON: ") + e.what());
      }
      if (!req.is_object() || !req.contains("pairs") || !req["pairs"].is_array()) {
        return error_reply(400, d, "request needs a \"pairs\" array");
      }
      std::vector<std::pair<int, int>> pairs;
      for (const auto& p : req["pairs"]) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer()) {
          return error_reply(400, d, "each pair must be [community, community]");
        }
        pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
      }
      if (pairs.empty()) return error_reply(400, d, "at least one pair is required");
      std::optional<double> weight;
      if (req.contains("weight")) {
        if (!req["weight"].is_number()) return error_reply(400, d, "weight must be a number");
        weight = req["weight"].get<double>();
      }
      const auto plan = plan_from_pairs(s->graph, s->partition, pairs, weight, &s->centers);
      const auto t = preview_interventions(s->graph, plan, metrics_);
      json out{{"manifest_digest", d}, {"pairs", req["pairs"]}, {"weight", plan.weight}};
      json traj = trajectory_to_json(t);
      for (auto& [k, v] : traj.items()) out[k] = std::move(v);
      return reply(200, std::move(out));
    }
  } catch (const Error& e) {
    return error_reply(e.kind() == ErrorKind::config ? 400 : 500, d, e.what());
  }
  return error_reply(404, d, "no such endpoint: " + path);
}

void serve(const Service& service, const std::string& host, int port, const std::function<void(int)>& on_ready,
           std::stop_token stop) {
  httplib::Server server;
  auto dispatch = [&service](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query.emplace(k, v);
    const Response r = service.handle(req.method, req.path, query, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  // Without SO_REUSEPORT, so a port already in use fails to bind.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  server.Get(R"(/.*)", dispatch);
  server.Post(R"(/.*)", dispatch);
  int bound = port;
  if (port == 0) {
    bound = server.bind_to_any_port(host);
    if (bound < 0) throw_config(fmt::format("cannot bind {}", host));
  } else if (!server.bind_to_port(host, port)) {
    throw_config(fmt::format("cannot bind {}:{} (port busy?)", host, port));
  }
  if (on_ready) on_ready(bound);
  std::stop_callback on_stop(stop, [&server] { server.stop(); });
  if (stop.stop_requested()) return;
  server.listen_after_bind();
}

}  // namespace transitnet
