#include "transitnet/transitnet.h"

#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

namespace {

struct Step {
  const char* name;
  tn_step step;
  const char* help;
};

constexpr Step kSteps[] = {
    {"synth", TN_STEP_SYNTH, "Generate a synthetic city into the workspace"},
    {"ingest", TN_STEP_INGEST, "Import the five raw datasets from ingest.source"},
    {"odm", TN_STEP_ODM, "Estimate OD pairs from validations and GPS pings"},
    {"validate-sample", TN_STEP_VALIDATE_SAMPLE, "Power-law and kernel fit of used vs total boardings"},
    {"graph", TN_STEP_GRAPH, "Build the supply graph and its baseline metrics"},
    {"communities", TN_STEP_COMMUNITIES, "Detect communities with Louvain"},
    {"flows", TN_STEP_FLOWS, "Aggregate OD pairs into community flows per day class"},
    {"intervene", TN_STEP_INTERVENE, "Apply express edges between the top community pairs"},
    {"report", TN_STEP_REPORT, "Write report.md from every artifact present"},
};

int fail(tn_status s) {
  std::fprintf(stderr, "error: %s\n", tn_last_error());
  return static_cast<int>(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transit network analysis pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string workspace = ".";
  std::string config;
  std::vector<std::string> sets;
  long long seed = -1;
  long long k = -1;
  bool force = false, exact = false, sampled = false;
  std::string host = "127.0.0.1";
  int port = 8080;

  app.add_option("-w,--workspace", workspace, "Workspace directory")->capture_default_str();
  app.add_option("-c,--config", config, "Pipeline config file (key = value lines)");
  app.add_option("--set", sets, "Override one config key, e.g. --set odm.max_gap_s=90");
  app.add_option("--seed", seed, "Seed for synth");
  app.add_option("-k", k, "Number of interventions");
  app.add_flag("--force", force, "Use stale inputs anyway and adopt their current digests");
  auto* ex = app.add_flag("--exact", exact, "Exact all-pairs metrics");
  app.add_flag("--sampled", sampled, "Sampled metrics")->excludes(ex);

  for (const auto& s : kSteps) app.add_subcommand(s.name, s.help);
  auto* serve_cmd = app.add_subcommand("serve", "Serve the workspace read models over HTTP");
  serve_cmd->add_option("--host", host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", port, "Port (0 picks a free one)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return TN_ERR_CONFIG;
  }

  tn_workspace* ws = nullptr;
  if (tn_status s = tn_workspace_open(workspace.c_str(), config.empty() ? nullptr : config.c_str(), &ws)) {
    return fail(s);
  }
  auto set = [&](const std::string& key, const std::string& value) {
    return tn_workspace_set_option(ws, key.c_str(), value.c_str());
  };
  tn_status s = TN_OK;
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      tn_workspace_close(ws);
      return TN_ERR_CONFIG;
    }
    if ((s = set(kv.substr(0, eq), kv.substr(eq + 1)))) break;
  }
  if (!s && seed >= 0) s = set("seed", std::to_string(seed));
  if (!s && k >= 0) s = set("intervene.k", std::to_string(k));
  if (!s && exact) s = set("metrics.mode", "exact");
  if (!s && sampled) s = set("metrics.mode", "sampled");
  if (!s) s = tn_workspace_set_force(ws, force ? 1 : 0);
  if (s) {
    tn_workspace_close(ws);
    return fail(s);
  }

  if (serve_cmd->parsed()) {
    s = tn_serve(
        ws, host.c_str(), port,
        [](int bound, void*) {
          std::printf("serving on port %d\n", bound);
          std::fflush(stdout);
        },
        nullptr);
  } else {
    for (const auto& step : kSteps) {
      if (!app.got_subcommand(step.name)) continue;
      char* summary = nullptr;
      s = tn_workspace_run(ws, step.step, &summary);
      if (summary) {
        std::puts(summary);
        tn_string_free(summary);
      }
    }
  }
  tn_workspace_close(ws);
  return s ? fail(s) : 0;
}
