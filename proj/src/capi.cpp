#include "transitnet/transitnet.h"

#include "transitnet/common.hpp"
#include "transitnet/service.hpp"
#include "transitnet/workspace.hpp"

#include <cstring>
#include <filesystem>
#include <new>
#include <string>

using namespace transitnet;

struct tn_workspace {
  Workspace ws;
};

struct tn_graph {
  SupplyGraph g;
};

namespace {

thread_local std::string last_error;

template <typename F>
tn_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return TN_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return static_cast<tn_status>(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = e.what();
    return TN_ERR_ARTIFACT;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return TN_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return TN_ERR_INTERNAL;
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void need(const void* p, const char* what) {
  if (!p) throw_config(std::string(what) + " must not be NULL");
}

}  // namespace

extern "C" {

const char* tn_version(void) { return "0.3.0"; }

const char* tn_last_error(void) { return last_error.c_str(); }

void tn_string_free(char* s) { std::free(s); }

tn_status tn_workspace_open(const char* dir, const char* config_path, tn_workspace** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    *out = nullptr;
    PipelineConfig cfg = config_path ? load_pipeline_config(config_path) : PipelineConfig{};
    *out = new tn_workspace{Workspace(dir, std::move(cfg))};
  });
}

void tn_workspace_close(tn_workspace* ws) { delete ws; }

tn_status tn_workspace_set_option(tn_workspace* ws, const char* key, const char* value) {
  return guarded([&] {
    need(ws, "workspace");
    need(key, "key");
    need(value, "value");
    set_pipeline_option(ws->ws.config(), key, value);
  });
}

tn_status tn_workspace_set_force(tn_workspace* ws, int force) {
  return guarded([&] {
    need(ws, "workspace");
    ws->ws.set_force(force != 0);
  });
}

tn_status tn_workspace_run(tn_workspace* ws, tn_step step, char** summary) {
  return guarded([&] {
    need(ws, "workspace");
    if (summary) *summary = nullptr;
    Workspace& w = ws->ws;
    std::string text;
    switch (step) {
      case TN_STEP_SYNTH: text = w.synth(); break;
      case TN_STEP_INGEST: text = w.ingest(); break;
      case TN_STEP_ODM: text = w.odm(); break;
      case TN_STEP_VALIDATE_SAMPLE: text = w.validate_sample(); break;
      case TN_STEP_GRAPH: text = w.graph(); break;
      case TN_STEP_COMMUNITIES: text = w.communities(); break;
      case TN_STEP_FLOWS: text = w.flows(); break;
      case TN_STEP_INTERVENE: text = w.intervene(); break;
      case TN_STEP_REPORT: text = w.report(); break;
      default: throw_config("unknown step");
    }
    if (summary) *summary = dup(text);
  });
}

tn_status tn_workspace_manifest_digest(const tn_workspace* ws, char** digest) {
  return guarded([&] {
    need(ws, "workspace");
    need(digest, "digest");
    *digest = dup(ws->ws.manifest().digest());
  });
}

tn_status tn_serve(tn_workspace* ws, const char* host, int port, void (*on_ready)(int, void*), void* user) {
  return guarded([&] {
    need(ws, "workspace");
    need(host, "host");
    if (port < 0 || port > 65535) throw_config("port out of range");
    const auto& cfg = ws->ws.config();
    Service service(ws->ws.dir(), cfg.metrics, cfg.interventions);
    serve(service, host, port, [&](int bound) {
      if (on_ready) on_ready(bound, user);
    });
  });
}

tn_status tn_graph_create(tn_graph** out) {
  return guarded([&] {
    need(out, "out");
    *out = new tn_graph{};
  });
}

void tn_graph_destroy(tn_graph* g) { delete g; }

tn_status tn_graph_add_edge(tn_graph* g, const char* src, const char* dst, double w) {
  return guarded([&] {
    need(g, "graph");
    need(src, "src");
    need(dst, "dst");
    auto node = [&](const char* id) {
      const auto found = g->g.find(id);
      return found ? *found : g->g.add_node(id);
    };
    const NodeId u = node(src);
    const NodeId v = node(dst);
    g->g.add_edge(u, v, w);
  });
}

tn_status tn_graph_node_count(const tn_graph* g, size_t* out) {
  return guarded([&] {
    need(g, "graph");
    need(out, "out");
    *out = g->g.node_count();
  });
}

tn_status tn_graph_node_id(const tn_graph* g, size_t index, const char** out) {
  return guarded([&] {
    need(g, "graph");
    need(out, "out");
    if (index >= g->g.node_count()) throw_config("node index out of range");
    *out = g->g.id(static_cast<NodeId>(index)).c_str();
  });
}

tn_status tn_graph_metrics(const tn_graph* g, tn_metric_mode mode, size_t samples, uint64_t seed, tn_metrics* out) {
  return guarded([&] {
    need(g, "graph");
    need(out, "out");
    MetricOptions opts;
    switch (mode) {
      case TN_METRICS_AUTO: opts.mode = MetricMode::automatic; break;
      case TN_METRICS_EXACT: opts.mode = MetricMode::exact; break;
      case TN_METRICS_SAMPLED: opts.mode = MetricMode::sampled; break;
      default: throw_config("unknown metric mode");
    }
    if (samples > 0) opts.samples = samples;
    opts.seed = seed;
    const auto m = graph_metrics(g->g, opts);
    *out = {m.avg_path_length, m.avg_eccentricity, m.diameter, m.reachable_pairs, m.sources, m.sampled ? 1 : 0,
            m.degenerate ? 1 : 0};
  });
}

tn_status tn_graph_betweenness(const tn_graph* g, double* out, size_t len) {
  return guarded([&] {
    need(g, "graph");
    need(out, "out");
    if (len < g->g.node_count()) throw_config("betweenness buffer is too small");
    const auto bc = betweenness(g->g);
    std::copy(bc.begin(), bc.end(), out);
  });
}

}  // extern "C"
