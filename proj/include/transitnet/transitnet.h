#ifndef TRANSITNET_H
#define TRANSITNET_H

#include <stddef.h>
#include <stdint.h>

#if defined(TRANSITNET_BUILDING_LIBRARY)
#define TN_API __attribute__((visibility("default")))
#else
#define TN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum tn_status {
  TN_OK = 0,
  TN_ERR_INTERNAL = 1,
  TN_ERR_CONFIG = 2,
  TN_ERR_ARTIFACT = 3, /* missing or stale workspace artifact */
  TN_ERR_DATA = 4
} tn_status;

typedef enum tn_step {
  TN_STEP_SYNTH = 0,
  TN_STEP_INGEST,
  TN_STEP_ODM,
  TN_STEP_VALIDATE_SAMPLE,
  TN_STEP_GRAPH,
  TN_STEP_COMMUNITIES,
  TN_STEP_FLOWS,
  TN_STEP_INTERVENE,
  TN_STEP_REPORT
} tn_step;

typedef enum tn_metric_mode { TN_METRICS_AUTO = 0, TN_METRICS_EXACT, TN_METRICS_SAMPLED } tn_metric_mode;

typedef struct tn_workspace tn_workspace;
typedef struct tn_graph tn_graph;

typedef struct tn_metrics {
  double avg_path_length;
  double avg_eccentricity;
  int32_t diameter;
  uint64_t reachable_pairs;
  size_t sources;
  int sampled;
  int degenerate;
} tn_metrics;

TN_API const char* tn_version(void);
/* Message of the last failed call on this thread; empty after success. */
TN_API const char* tn_last_error(void);
TN_API void tn_string_free(char* s);

/* config_path may be NULL. */
TN_API tn_status tn_workspace_open(const char* dir, const char* config_path, tn_workspace** out);
TN_API void tn_workspace_close(tn_workspace* ws);
TN_API tn_status tn_workspace_set_option(tn_workspace* ws, const char* key, const char* value);
TN_API tn_status tn_workspace_set_force(tn_workspace* ws, int force);
/* summary may be NULL; otherwise release it with tn_string_free. */
TN_API tn_status tn_workspace_run(tn_workspace* ws, tn_step step, char** summary);
TN_API tn_status tn_workspace_manifest_digest(const tn_workspace* ws, char** digest);
/* Blocks while serving. on_ready, when given, receives the bound port. */
TN_API tn_status tn_serve(tn_workspace* ws, const char* host, int port, void (*on_ready)(int port, void* user),
                          void* user);

TN_API tn_status tn_graph_create(tn_graph** out);
TN_API void tn_graph_destroy(tn_graph* g);
/* Adds w to the edge src->dst; nodes are created on first use. */
TN_API tn_status tn_graph_add_edge(tn_graph* g, const char* src, const char* dst, double w);
TN_API tn_status tn_graph_node_count(const tn_graph* g, size_t* out);
TN_API tn_status tn_graph_node_id(const tn_graph* g, size_t index, const char** out);
TN_API tn_status tn_graph_metrics(const tn_graph* g, tn_metric_mode mode, size_t samples, uint64_t seed,
                                  tn_metrics* out);
/* out must hold node_count values, in node order. */
TN_API tn_status tn_graph_betweenness(const tn_graph* g, double* out, size_t len);

#ifdef __cplusplus
}
#endif

#endif
