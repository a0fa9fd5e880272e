#pragma once

#include "transitnet/communities.hpp"
#include "transitnet/ingest.hpp"
#include "transitnet/intervene.hpp"
#include "transitnet/odm.hpp"
#include "transitnet/synth.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace transitnet {

struct PipelineConfig {
  SynthConfig synth;
  std::uint64_t seed = 7;
  std::string import_dir;  // ingest source
  std::string calendar_path;
  LoadOptions load;
  double low_factor = 0.5;
  double high_factor = 2.0;
  OdmConfig odm;
  std::size_t bootstrap_samples = 500;
  std::uint64_t stats_seed = 1;
  std::size_t grid_size = 100;
  LouvainOptions louvain;
  std::size_t interventions = 5;
  std::optional<double> express_weight;
  MetricOptions metrics;

  Calendar calendar() const;
};

// Dotted keys: seed, ingest.source, ingest.max_reject_rate, calendar,
// filter.low_factor, odm.max_gap_s, stats.bootstrap, louvain.seed,
// intervene.k, metrics.mode, synth.<key>, ... (see README).
void set_pipeline_option(PipelineConfig& cfg, const std::string& key, const std::string& value);
PipelineConfig load_pipeline_config(const std::string& path);

// Artifact names as they appear in the manifest and in error messages.
namespace artifact {
inline constexpr const char* dataset = "dataset";
inline constexpr const char* ground_truth = "ground_truth";
inline constexpr const char* odpairs = "odpairs";
inline constexpr const char* sample_validation = "sample_validation";
inline constexpr const char* graph = "graph";
inline constexpr const char* partition = "partition";
inline constexpr const char* flows = "flows";
inline constexpr const char* intervention = "intervention";
inline constexpr const char* report = "report";
}  // namespace artifact

struct ArtifactRecord {
  std::map<std::string, std::string> files;   // relative path -> sha256
  std::map<std::string, std::string> inputs;  // artifact -> digest at build time
  std::string digest;
  std::string created;
};

class Manifest {
 public:
  static Manifest load(const std::string& path);
  void save(const std::string& path) const;

  const ArtifactRecord* find(const std::string& name) const;
  void put(const std::string& name, ArtifactRecord rec) { artifacts_[name] = std::move(rec); }
  const std::map<std::string, ArtifactRecord>& artifacts() const { return artifacts_; }
  // Digest over artifact names and digests; independent of build times.
  std::string digest() const;

 private:
  std::map<std::string, ArtifactRecord> artifacts_;
};

class Workspace {
 public:
  Workspace(std::string dir, PipelineConfig cfg);

  void set_force(bool force) { force_ = force; }
  PipelineConfig& config() { return cfg_; }
  const PipelineConfig& config() const { return cfg_; }
  const std::string& dir() const { return dir_; }
  std::string path(const std::string& rel) const;
  const Manifest& manifest() const { return manifest_; }

  // Each step returns a short human-readable summary.
  std::string synth();
  std::string ingest();
  std::string odm();
  std::string validate_sample();
  std::string graph();
  std::string communities();
  std::string flows();
  std::string intervene();
  std::string report();

  // Throws an artifact error when `name` is missing or stale (unless forced).
  void require(const std::string& name);

 private:
  void record(const std::string& name, const std::vector<std::string>& files,
              const std::vector<std::string>& inputs);
  void save_manifest() const;

  std::string dir_;
  PipelineConfig cfg_;
  Manifest manifest_;
  bool force_ = false;
};

// Workspace-relative file names.
namespace wsfile {
inline constexpr const char* manifest = "manifest.json";
inline constexpr const char* data_dir = "data";
inline constexpr const char* rejects = "data/rejects.csv";
inline constexpr const char* synth_config = "data/synth_config.txt";
inline constexpr const char* odpairs = "odm/odpairs.csv";
inline constexpr const char* diagnostics = "odm/diagnostics.csv";
inline constexpr const char* diagnostics_summary = "odm/diagnostics_summary.csv";
inline constexpr const char* embarkings = "odm/embarkings.csv";
inline constexpr const char* day_filter = "odm/day_filter.csv";
inline constexpr const char* regression = "stats/regression_report.json";
inline constexpr const char* curve = "stats/curve.csv";
inline constexpr const char* graph_nodes = "graph/graph_nodes.csv";
inline constexpr const char* graph_edges = "graph/graph_edges.csv";
inline constexpr const char* route_supply = "graph/route_supply.csv";
inline constexpr const char* graph_metrics = "graph/metrics.json";
inline constexpr const char* graph_geojson = "graph/graph.geojson";
inline constexpr const char* communities = "communities/communities.csv";
inline constexpr const char* community_stats = "communities/community_stats.csv";
inline constexpr const char* partition_summary = "communities/partition.json";
inline constexpr const char* communities_geojson = "communities/communities.geojson";
inline constexpr const char* flows_summary = "flows/summary.json";
inline constexpr const char* plan = "intervene/plan.json";
inline constexpr const char* trajectory = "intervene/trajectory.csv";
inline constexpr const char* trajectory_json = "intervene/trajectory.json";
inline constexpr const char* report = "report.md";
std::string flow_matrix(DayClass c);
}  // namespace wsfile

nlohmann::ordered_json metrics_to_json(const GraphMetrics& m);
nlohmann::ordered_json stats_to_json(const std::vector<CommunityStats>& stats);
nlohmann::ordered_json read_json_file(const std::string& path);

}  // namespace transitnet
