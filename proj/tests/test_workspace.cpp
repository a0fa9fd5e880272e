#include "transitnet/common.hpp"
#include "transitnet/workspace.hpp"

#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace transitnet;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_config() {
  PipelineConfig cfg;
  for (const auto& [k, v] : std::vector<std::pair<std::string, std::string>>{
           {"synth.stops", "160"}, {"synth.users", "200"}, {"synth.days", "3"}, {"stats.bootstrap", "100"},
           {"stats.grid_size", "20"}, {"metrics.mode", "exact"}, {"intervene.k", "3"}}) {
    set_pipeline_option(cfg, k, v);
  }
  return cfg;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::internal;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

void run_all(Workspace& ws) {
  ws.synth();
  ws.odm();
  ws.validate_sample();
  ws.graph();
  ws.communities();
  ws.flows();
  ws.intervene();
  ws.report();
}

}  // namespace

TEST(PipelineConfig, OptionsAndErrors) {
  PipelineConfig cfg;
  set_pipeline_option(cfg, "synth.users", "42");
  set_pipeline_option(cfg, "metrics.mode", "sampled");
  set_pipeline_option(cfg, "intervene.weight", "3.5");
  set_pipeline_option(cfg, "ingest.bbox", "-4,-39,-3,-38");
  EXPECT_EQ(cfg.synth.users, 42u);
  EXPECT_EQ(cfg.metrics.mode, MetricMode::sampled);
  EXPECT_EQ(cfg.express_weight, 3.5);
  EXPECT_EQ(cfg.load.bbox.min_lon, -39);
  for (const auto& [k, v] : std::vector<std::pair<std::string, std::string>>{
           {"nope", "1"}, {"metrics.mode", "fast"}, {"odm.max_gap_s", "-5"}, {"synth.bogus", "1"},
           {"intervene.k", "x"}, {"ingest.bbox", "1,2,3"}}) {
    EXPECT_EQ(kind_of([&, k = k, v = v] { set_pipeline_option(cfg, k, v); }), ErrorKind::config) << k;
  }
}

TEST(PipelineConfig, FileWithRelativePaths) {
  fixture::TempDir dir("pcfg");
  fixture::write_file(dir.file("holidays.txt"), "2015-03-12\n");
  fixture::write_file(dir.file("p.cfg"), "# comment\nseed = 9\n\ncalendar = holidays.txt\nsynth.preset = fortaleza\n");
  const auto cfg = load_pipeline_config(dir.file("p.cfg"));
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.synth.stops, 4783u);
  EXPECT_EQ(cfg.calendar().holidays().size(), 1u);
  fixture::write_file(dir.file("bad.cfg"), "seed\n");
  EXPECT_EQ(kind_of([&] { load_pipeline_config(dir.file("bad.cfg")); }), ErrorKind::config);
}

TEST(Workspace, FullPipelineRecordsEveryArtifact) {
  fixture::TempDir dir("ws-full");
  Workspace ws(dir.path().string(), small_config());
  run_all(ws);
  for (const char* name : {artifact::dataset, artifact::ground_truth, artifact::odpairs, artifact::sample_validation,
                           artifact::graph, artifact::partition, artifact::flows, artifact::intervention,
                           artifact::report}) {
    const auto* rec = ws.manifest().find(name);
    ASSERT_TRUE(rec) << name;
    for (const auto& [rel, sha] : rec->files) EXPECT_EQ(sha256_file(ws.path(rel)), sha) << rel;
  }
  EXPECT_EQ(ws.manifest().find(artifact::partition)->inputs.at(artifact::graph),
            ws.manifest().find(artifact::graph)->digest);
  const auto m = read_json_file(ws.path(wsfile::graph_metrics));
  EXPECT_GT(m["giant_nodes"].get<int>(), 0);
  const auto traj = read_json_file(ws.path(wsfile::trajectory_json));
  EXPECT_EQ(traj["steps"].size(), 4u);
  const auto report = fixture::read_file(ws.path(wsfile::report));
  EXPECT_NE(report.find("Communities"), std::string::npos);

  const auto reloaded = Manifest::load(ws.path(wsfile::manifest));
  EXPECT_EQ(reloaded.digest(), ws.manifest().digest());
}

TEST(Workspace, RerunningIsIdempotent) {
  fixture::TempDir dir("ws-idem");
  Workspace ws(dir.path().string(), small_config());
  run_all(ws);
  const auto first = ws.manifest().digest();
  Workspace again(dir.path().string(), small_config());
  run_all(again);
  EXPECT_EQ(again.manifest().digest(), first);
}

TEST(Workspace, MissingUpstreamArtifact) {
  fixture::TempDir dir("ws-missing");
  Workspace ws(dir.path().string(), small_config());
  EXPECT_EQ(message_of([&] { ws.intervene(); }), "missing artifact: graph");
  ws.synth();
  ws.graph();
  EXPECT_EQ(message_of([&] { ws.intervene(); }), "missing artifact: partition");
  EXPECT_EQ(kind_of([&] { ws.intervene(); }), ErrorKind::artifact);
}

TEST(Workspace, EditedInputMakesDownstreamStale) {
  fixture::TempDir dir("ws-stale");
  Workspace ws(dir.path().string(), small_config());
  ws.synth();
  ws.graph();
  ws.communities();
  {
    std::ofstream out(ws.path("data/stops.csv"), std::ios::app);
    out << "ZZ999,-3.7,-38.5,0\n";
  }
  const auto msg = message_of([&] { ws.graph(); });
  EXPECT_EQ(msg.rfind("stale artifact: dataset", 0), 0u) << msg;
  ws.set_force(true);
  ws.graph();
  ws.set_force(false);
  EXPECT_EQ(message_of([&] { ws.flows(); }).rfind("missing artifact: odpairs", 0), 0u);
  const auto stale = message_of([&] { ws.require(artifact::partition); });
  EXPECT_EQ(stale.rfind("stale artifact: partition", 0), 0u) << stale;
  ws.communities();
  ws.require(artifact::partition);
}

TEST(Workspace, IngestImportsADirectory) {
  fixture::TempDir src("ws-src"), dir("ws-ingest");
  {
    Workspace seed(src.path().string(), small_config());
    seed.synth();
  }
  auto cfg = small_config();
  EXPECT_EQ(kind_of([&] { Workspace(dir.path().string(), cfg).ingest(); }), ErrorKind::config);
  set_pipeline_option(cfg, "ingest.source", (src.path() / "data").string());
  Workspace ws(dir.path().string(), cfg);
  ws.ingest();
  ASSERT_TRUE(ws.manifest().find(artifact::dataset));
  EXPECT_FALSE(ws.manifest().find(artifact::ground_truth));
  ws.odm();
  EXPECT_TRUE(fs::exists(ws.path(wsfile::odpairs)));
}

TEST(Workspace, TwoDaySamplesSkipTheDayFilter) {
  fixture::TempDir dir("ws-twodays");
  auto cfg = small_config();
  set_pipeline_option(cfg, "synth.days", "2");
  Workspace ws(dir.path().string(), cfg);
  ws.synth();
  const auto summary = ws.odm();
  EXPECT_NE(summary.find("day filter"), std::string::npos) << summary;
  EXPECT_TRUE(fs::exists(ws.path(wsfile::day_filter)));
}
