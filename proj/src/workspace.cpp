#include "transitnet/workspace.hpp"

#include "transitnet/common.hpp"
#include "transitnet/csv.hpp"
#include "transitnet/stats.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace transitnet {

// ---------------------------------------------------------------------------
// Config

Calendar PipelineConfig::calendar() const {
  return calendar_path.empty() ? Calendar{} : Calendar::load(calendar_path);
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  if constexpr (std::is_floating_point_v<T>) {
    auto v = csv::to_double(value);
    if (!v) throw_config(fmt::format("config: {} expects a number, got '{}'", key, value));
    return static_cast<T>(*v);
  } else {
    auto v = csv::to_int(value);
    if (!v || (std::is_unsigned_v<T> && *v < 0)) {
      throw_config(fmt::format("config: {} expects a non-negative integer, got '{}'", key, value));
    }
    return static_cast<T>(*v);
  }
}

bool parse_flag(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw_config(fmt::format("config: {} expects true or false, got '{}'", key, value));
}

std::string trim(std::string s) {
  auto sp = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && sp(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && sp(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

}  // namespace

void set_pipeline_option(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  if (key.rfind("synth.", 0) == 0) {
    const std::string sub = key.substr(6);
    if (sub == "preset") {
      if (value != "fortaleza") throw_config("config: synth.preset supports only 'fortaleza'");
      cfg.synth = fortaleza_scale_config();
    } else {
      set_synth_option(cfg.synth, sub, value);
    }
    return;
  }
  if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "ingest.source") {
    cfg.import_dir = value;
  } else if (key == "ingest.max_reject_rate") {
    cfg.load.max_reject_rate = parse_number<double>(key, value);
  } else if (key == "ingest.bbox") {
    std::istringstream in(value);
    char c1, c2, c3;
    BoundingBox b;
    if (!(in >> b.min_lat >> c1 >> b.min_lon >> c2 >> b.max_lat >> c3 >> b.max_lon) || c1 != ',' || c2 != ',' ||
        c3 != ',') {
      throw_config("config: ingest.bbox expects min_lat,min_lon,max_lat,max_lon");
    }
    cfg.load.bbox = b;
  } else if (key == "calendar") {
    cfg.calendar_path = value;
  } else if (key == "filter.low_factor") {
    cfg.low_factor = parse_number<double>(key, value);
  } else if (key == "filter.high_factor") {
    cfg.high_factor = parse_number<double>(key, value);
  } else if (key == "odm.max_gap_s") {
    cfg.odm.max_gap_s = parse_number<std::int64_t>(key, value);
  } else if (key == "odm.snap_radius_m") {
    cfg.odm.snap_radius_m = parse_number<double>(key, value);
  } else if (key == "odm.recurrence_fraction") {
    cfg.odm.recurrence_fraction = parse_number<double>(key, value);
  } else if (key == "odm.min_recurrence") {
    cfg.odm.min_recurrence = parse_number<std::size_t>(key, value);
  } else if (key == "odm.correct") {
    cfg.odm.correct = parse_flag(key, value);
  } else if (key == "stats.bootstrap") {
    cfg.bootstrap_samples = parse_number<std::size_t>(key, value);
  } else if (key == "stats.seed") {
    cfg.stats_seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "stats.grid_size") {
    cfg.grid_size = parse_number<std::size_t>(key, value);
  } else if (key == "louvain.seed") {
    cfg.louvain.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "louvain.resolution") {
    cfg.louvain.resolution = parse_number<double>(key, value);
  } else if (key == "intervene.k") {
    cfg.interventions = parse_number<std::size_t>(key, value);
  } else if (key == "intervene.weight") {
    cfg.express_weight = parse_number<double>(key, value);
  } else if (key == "metrics.mode") {
    if (value == "exact") {
      cfg.metrics.mode = MetricMode::exact;
    } else if (value == "sampled") {
      cfg.metrics.mode = MetricMode::sampled;
    } else if (value == "auto") {
      cfg.metrics.mode = MetricMode::automatic;
    } else {
      throw_config("config: metrics.mode must be exact, sampled or auto");
    }
  } else if (key == "metrics.exact_threshold") {
    cfg.metrics.exact_threshold = parse_number<std::size_t>(key, value);
  } else if (key == "metrics.samples") {
    cfg.metrics.samples = parse_number<std::size_t>(key, value);
  } else if (key == "metrics.seed") {
    cfg.metrics.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "metrics.directed") {
    cfg.metrics.directed = parse_flag(key, value);
  } else {
    throw_config("config: unknown key '" + key + "'");
  }

  if (cfg.odm.max_gap_s <= 0 || !(cfg.odm.snap_radius_m > 0)) throw_config("config: odm tolerances must be positive");
  if (!(cfg.louvain.resolution > 0)) throw_config("config: louvain.resolution must be positive");
}

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_config("cannot open config " + path);
  PipelineConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw_config(fmt::format("{}:{}: expected key = value", path, lineno));
    set_pipeline_option(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  // Relative calendar/import paths are relative to the config file.
  const fs::path base = fs::path(path).parent_path();
  if (!cfg.calendar_path.empty() && fs::path(cfg.calendar_path).is_relative()) {
    cfg.calendar_path = (base / cfg.calendar_path).string();
  }
  if (!cfg.import_dir.empty() && fs::path(cfg.import_dir).is_relative()) {
    cfg.import_dir = (base / cfg.import_dir).string();
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Manifest

Manifest Manifest::load(const std::string& path) {
  Manifest m;
  if (!fs::exists(path)) return m;
  nlohmann::json j;
  try {
    std::ifstream in(path);
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw_artifact(path + ": unreadable manifest: " + e.what());
  }
  const auto artifacts = j.value("artifacts", nlohmann::json::object());
  for (const auto& [name, a] : artifacts.items()) {
    ArtifactRecord r;
    r.files = a.value("files", std::map<std::string, std::string>{});
    r.inputs = a.value("inputs", std::map<std::string, std::string>{});
    r.digest = a.value("digest", "");
    r.created = a.value("created", "");
    m.artifacts_[name] = std::move(r);
  }
  return m;
}

void Manifest::save(const std::string& path) const {
  nlohmann::ordered_json arts = nlohmann::ordered_json::object();
  for (const auto& [name, r] : artifacts_) {
    arts[name] = {{"digest", r.digest}, {"files", r.files}, {"inputs", r.inputs}, {"created", r.created}};
  }
  nlohmann::ordered_json j{{"version", 1}, {"digest", digest()}, {"artifacts", std::move(arts)}};
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw_artifact("cannot write " + tmp);
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

const ArtifactRecord* Manifest::find(const std::string& name) const {
  auto it = artifacts_.find(name);
  return it == artifacts_.end() ? nullptr : &it->second;
}

std::string Manifest::digest() const {
  std::string text;
  for (const auto& [name, r] : artifacts_) text += name + '=' + r.digest + '\n';
  return sha256_hex(text);
}

// ---------------------------------------------------------------------------
// Workspace

namespace wsfile {
std::string flow_matrix(DayClass c) { return fmt::format("flows/flow_matrix_{}.csv", to_string(c)); }
}  // namespace wsfile

namespace {

std::string now_iso() {
  const auto t = std::chrono::system_clock::now();
  return format_iso8601({std::chrono::duration_cast<std::chrono::seconds>(t.time_since_epoch()).count(), 0});
}

std::string data_file(const char* name) { return std::string(wsfile::data_dir) + "/" + name; }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw_artifact("cannot write " + path);
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

}  // namespace

nlohmann::ordered_json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_artifact("missing file: " + path);
  try {
    return nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw_data(path + ": invalid JSON: " + e.what());
  }
}

nlohmann::ordered_json metrics_to_json(const GraphMetrics& m) {
  return {{"avg_path_length", m.avg_path_length},
          {"avg_eccentricity", m.avg_eccentricity},
          {"diameter", m.diameter},
          {"node_count", m.node_count},
          {"edge_count", m.edge_count},
          {"sources", m.sources},
          {"reachable_pairs", m.reachable_pairs},
          {"sampled", m.sampled},
          {"degenerate", m.degenerate},
          {"directed", m.directed},
          {"convention", "hop distances over reachable ordered pairs"}};
}

nlohmann::ordered_json stats_to_json(const std::vector<CommunityStats>& stats) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& s : stats) {
    rows.push_back({{"id", s.id},
                    {"node_count", s.node_count},
                    {"diameter", s.diameter},
                    {"normalized_diameter", s.normalized_diameter},
                    {"density", s.density_defined ? nlohmann::ordered_json(s.density) : nlohmann::ordered_json()},
                    {"avg_clustering", s.avg_clustering},
                    {"avg_weighted_degree", s.avg_weighted_degree},
                    {"avg_weighted_degree_full", s.avg_weighted_degree_full},
                    {"cut_weight", s.cut_weight}});
  }
  return rows;
}

Workspace::Workspace(std::string dir, PipelineConfig cfg) : dir_(std::move(dir)), cfg_(std::move(cfg)) {
  if (dir_.empty()) throw_config("workspace directory not set");
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw_config("cannot create workspace " + dir_ + ": " + ec.message());
  manifest_ = Manifest::load(path(wsfile::manifest));
}

std::string Workspace::path(const std::string& rel) const { return (fs::path(dir_) / rel).string(); }

void Workspace::save_manifest() const { manifest_.save(path(wsfile::manifest)); }

void Workspace::record(const std::string& name, const std::vector<std::string>& files,
                       const std::vector<std::string>& inputs) {
  ArtifactRecord r;
  std::string all;
  for (const auto& f : files) {
    r.files[f] = sha256_file(path(f));
  }
  for (const auto& [f, sha] : r.files) all += f + ':' + sha + '\n';
  for (const auto& in : inputs) {
    const auto* rec = manifest_.find(in);
    r.inputs[in] = rec ? rec->digest : "";
  }
  r.digest = sha256_hex(all);
  r.created = now_iso();
  manifest_.put(name, std::move(r));
  save_manifest();
}

void Workspace::require(const std::string& name) {
  const ArtifactRecord* rec = manifest_.find(name);
  if (!rec) throw_artifact("missing artifact: " + name);
  std::vector<std::string> problems;
  for (const auto& [file, sha] : rec->files) {
    if (!fs::exists(path(file))) {
      throw_artifact(fmt::format("missing artifact: {} (file {} is gone)", name, file));
    }
    if (sha256_file(path(file)) != sha) problems.push_back(fmt::format("{} changed since it was recorded", file));
  }
  for (const auto& [in, digest] : rec->inputs) {
    const auto* up = manifest_.find(in);
    if (!up || up->digest != digest) problems.push_back(fmt::format("upstream artifact {} was rebuilt", in));
  }
  if (problems.empty()) return;
  if (!force_) {
    throw_artifact(fmt::format("stale artifact: {}: {} (rerun the producing step or pass --force)", name,
                               problems.front()));
  }
  // Forced: adopt the files as they are now.
  std::vector<std::string> files, inputs;
  for (const auto& [f, _] : rec->files) files.push_back(f);
  for (const auto& [i, _] : rec->inputs) inputs.push_back(i);
  record(name, files, inputs);
}

namespace {

std::vector<std::string> dataset_files() {
  return {data_file(kStopsFile), data_file(kRoutesFile), data_file(kTerminalsFile), data_file(kPingsFile),
          data_file(kValidationsFile), wsfile::rejects};
}

}  // namespace

std::string Workspace::synth() {
  auto bundle = generate_synthetic_city(cfg_.synth, cfg_.seed);
  const std::string data = path(wsfile::data_dir);
  write_synth_bundle(data, bundle);
  write_rejects(path(wsfile::rejects), {});
  save_synth_config(path(wsfile::synth_config), cfg_.synth);
  record(artifact::dataset, dataset_files(), {});
  record(artifact::ground_truth,
         {data_file(kGroundTruthFile), data_file(kPlantedFile), wsfile::synth_config}, {artifact::dataset});
  return fmt::format("synth: {} stops, {} route records, {} pings, {} validations, {} ground-truth legs (seed {})",
                     bundle.dataset.stops.size(), bundle.dataset.routes.size(), bundle.dataset.pings.size(),
                     bundle.dataset.validations.size(), bundle.truth.size(), cfg_.seed);
}

std::string Workspace::ingest() {
  if (cfg_.import_dir.empty()) throw_config("ingest needs a source directory (ingest.source in --config)");
  Dataset ds = load_dataset_dir(cfg_.import_dir, cfg_.load);
  write_dataset_dir(path(wsfile::data_dir), ds);
  write_rejects(path(wsfile::rejects), ds.rejects);
  record(artifact::dataset, dataset_files(), {});
  return fmt::format("ingest: {} stops, {} route records, {} terminals, {} pings, {} validations, {} rejects",
                     ds.stops.size(), ds.routes.size(), ds.terminals.size(), ds.pings.size(),
                     ds.validations.size(), ds.rejects.size());
}

std::string Workspace::odm() {
  require(artifact::dataset);
  Dataset ds = load_dataset_dir(path(wsfile::data_dir), cfg_.load);
  const Calendar cal = cfg_.calendar();
  fs::create_directories(path("odm"));

  std::set<Day> days;
  for (const auto& v : ds.validations) days.insert(local_day(v.timestamp));
  std::vector<Validation> kept;
  std::string filter_note;
  if (days.size() >= 3) {
    auto filtered = filter_anomalous_days(ds.validations, cfg_.low_factor, cfg_.high_factor, cal);
    write_day_filter_report(path(wsfile::day_filter), filtered.report);
    const auto dropped = std::count_if(filtered.report.begin(), filtered.report.end(),
                                       [](const DayFilterReport& r) { return !r.kept; });
    filter_note = fmt::format("{} of {} days dropped", dropped, filtered.report.size());
    kept = std::move(filtered.kept);
  } else {
    write_day_filter_report(path(wsfile::day_filter), {});
    filter_note = fmt::format("day filter skipped ({} days < 3)", days.size());
    kept = std::move(ds.validations);
  }

  auto result = build_odm(kept, ds.pings, ds.routes, ds.stops, ds.terminals, cfg_.odm, cal);
  write_odpairs(path(wsfile::odpairs), result.pairs);
  write_diagnostics(path(wsfile::diagnostics), result.diagnostics);
  write_diagnostics_summary(path(wsfile::diagnostics_summary), result.diagnostics);
  write_embarkings(path(wsfile::embarkings), result.embarkings);
  record(artifact::odpairs,
         {wsfile::odpairs, wsfile::diagnostics, wsfile::diagnostics_summary, wsfile::embarkings, wsfile::day_filter},
         {artifact::dataset});
  return fmt::format("odm: {} OD pairs from {} validations; {}; unlocatable {}, unsnappable {}", result.pairs.size(),
                     kept.size(), filter_note, result.diagnostics.unlocatable, result.diagnostics.unsnappable);
}

std::string Workspace::validate_sample() {
  require(artifact::odpairs);
  const auto emb = load_embarkings(path(wsfile::embarkings));
  std::vector<XY> pts;
  for (const auto& [_, e] : emb) {
    if (e.total > 0 && e.used > 0) pts.push_back({static_cast<double>(e.total), static_cast<double>(e.used)});
  }
  const auto reg = fit_power_law(pts);
  const auto fit = kernel_fit(pts, cfg_.bootstrap_samples, cfg_.stats_seed, cfg_.grid_size);
  fs::create_directories(path("stats"));
  write_regression_report(path(wsfile::regression), reg, fit);
  write_curve_csv(path(wsfile::curve), fit);
  record(artifact::sample_validation, {wsfile::regression, wsfile::curve}, {artifact::odpairs});
  return fmt::format("validate-sample: beta = {:.4f} (stderr {:.4f}), Y = {:.4f}, r2 = {:.4f}, h = {:.4g}, n = {}",
                     reg.beta, reg.beta_stderr, reg.Y, reg.r2, fit.h, reg.n);
}

std::string Workspace::graph() {
  require(artifact::dataset);
  const auto stops = load_stops(path(data_file(kStopsFile)), cfg_.load).records;
  const auto routes = load_routes(path(data_file(kRoutesFile)), cfg_.load, &stops).records;
  const auto pings = load_pings(path(data_file(kPingsFile)), cfg_.load).records;
  const StopIndex index(stops);
  const auto supplies = compute_all_supplies(routes, pings, index, cfg_.odm.snap_radius_m);
  const SupplyGraph g = build_supply_graph(routes, supplies, &stops);
  const auto comps = giant_component(g);
  const auto metrics = graph_metrics(comps.giant, cfg_.metrics);

  fs::create_directories(path("graph"));
  write_supplies_csv(path(wsfile::route_supply), supplies);
  write_nodes_csv(path(wsfile::graph_nodes), g, comps);
  write_edges_csv(path(wsfile::graph_edges), g);
  write_text(path(wsfile::graph_geojson), graph_geojson(comps.giant, index));
  nlohmann::ordered_json j{{"node_count", g.node_count()},
                           {"edge_count", g.edge_count()},
                           {"total_weight", g.total_weight()},
                           {"component_count", comps.component_count},
                           {"giant_nodes", comps.giant.node_count()},
                           {"giant_edges", comps.giant.edge_count()},
                           {"giant_coverage", comps.coverage},
                           {"metrics", metrics_to_json(metrics)}};
  write_text(path(wsfile::graph_metrics), j.dump(2));
  record(artifact::graph,
         {wsfile::route_supply, wsfile::graph_nodes, wsfile::graph_edges, wsfile::graph_geojson, wsfile::graph_metrics},
         {artifact::dataset});
  return fmt::format(
      "graph: {} nodes, {} edges, {} components, giant {} nodes ({:.2f}%); APL {:.2f}, avg ecc {:.2f}, diameter {}{}",
      g.node_count(), g.edge_count(), comps.component_count, comps.giant.node_count(), 100 * comps.coverage,
      metrics.avg_path_length, metrics.avg_eccentricity, metrics.diameter, metrics.sampled ? " (sampled)" : "");
}

std::string Workspace::communities() {
  require(artifact::graph);
  const SupplyGraph g = load_graph(path(wsfile::graph_nodes), path(wsfile::graph_edges), true);
  const Partition p = louvain(g, cfg_.louvain);
  const auto stats = community_stats(g, p, cfg_.metrics.directed);
  const auto stops = load_stops(path(data_file(kStopsFile)), cfg_.load).records;

  fs::create_directories(path("communities"));
  write_partition_csv(path(wsfile::communities), g, p);
  write_community_stats_csv(path(wsfile::community_stats), stats);
  std::unordered_map<std::string, int> lookup;
  for (NodeId u = 0; u < g.node_count(); ++u) lookup[g.id(u)] = p.assignment[u];
  write_text(path(wsfile::communities_geojson), graph_geojson(g, StopIndex(stops), &lookup));
  std::vector<int> singleton(g.node_count()), one(g.node_count(), 0);
  for (NodeId u = 0; u < g.node_count(); ++u) singleton[u] = static_cast<int>(u);
  nlohmann::ordered_json j{{"modularity", p.modularity},
                           {"modularity_check", modularity(g, p.assignment, cfg_.louvain.resolution)},
                           {"singleton_modularity", modularity(g, singleton, cfg_.louvain.resolution)},
                           {"all_in_one_modularity", modularity(g, one, cfg_.louvain.resolution)},
                           {"levels", p.levels},
                           {"level_modularity", p.level_modularity},
                           {"community_count", p.community_count},
                           {"seed", cfg_.louvain.seed},
                           {"resolution", cfg_.louvain.resolution},
                           {"stats", stats_to_json(stats)}};
  write_text(path(wsfile::partition_summary), j.dump(2));
  record(artifact::partition,
         {wsfile::communities, wsfile::community_stats, wsfile::communities_geojson, wsfile::partition_summary},
         {artifact::graph});
  return fmt::format("communities: {} communities, Q = {:.4f}, {} levels", p.community_count, p.modularity,
                     p.levels);
}

namespace {

CommunityLookup stop_communities(const SupplyGraph& g, const Partition& p) {
  CommunityLookup lookup;
  for (NodeId u = 0; u < g.node_count(); ++u) lookup[g.id(u)] = p.assignment[u];
  return lookup;
}

}  // namespace

std::string Workspace::flows() {
  require(artifact::odpairs);
  require(artifact::partition);
  const SupplyGraph g = load_graph(path(wsfile::graph_nodes), path(wsfile::graph_edges), true);
  const Partition p = load_partition(path(wsfile::communities), g);
  const auto pairs = load_odpairs(path(wsfile::odpairs));
  const auto report = flow_summary(pairs, stop_communities(g, p), p.community_count, cfg_.calendar());

  fs::create_directories(path("flows"));
  std::vector<std::string> files{wsfile::flows_summary};
  for (const auto c : {DayClass::weekday, DayClass::saturday, DayClass::sunday_holiday}) {
    const auto file = wsfile::flow_matrix(c);
    if (const FlowMatrix* m = report.matrix(c)) {
      write_flow_matrix_csv(path(file), *m);
      files.push_back(file);
    } else if (fs::exists(path(file))) {
      fs::remove(path(file));
    }
  }
  write_text(path(wsfile::flows_summary), flow_report_json(report));
  record(artifact::flows, files, {artifact::odpairs, artifact::partition});
  std::string line = "flows:";
  for (const auto& s : report.summaries) {
    line += fmt::format(" {} {:.1f}% inter ({} pairs, {} unassigned);", to_string(s.day_class), s.pct_inter, s.total,
                        s.unassigned);
  }
  return line;
}

std::string Workspace::intervene() {
  require(artifact::graph);
  require(artifact::partition);
  require(artifact::flows);
  SupplyGraph g = load_graph(path(wsfile::graph_nodes), path(wsfile::graph_edges), true);
  const Partition p = load_partition(path(wsfile::communities), g);
  if (!fs::exists(path(wsfile::flow_matrix(DayClass::weekday)))) {
    throw_data("intervene needs weekday flows, but the OD pairs contain no weekday");
  }
  const FlowMatrix weekday = load_flow_matrix_csv(path(wsfile::flow_matrix(DayClass::weekday)), DayClass::weekday);
  const FlowMatrix sized = weekday.size() == p.community_count ? weekday : [&] {
    FlowMatrix m(p.community_count, DayClass::weekday);
    for (std::size_t a = 0; a < std::min(weekday.size(), m.size()); ++a) {
      for (std::size_t b = 0; b < std::min(weekday.size(), m.size()); ++b) m.counts[a][b] = weekday.counts[a][b];
    }
    return m;
  }();
  const auto plan = plan_interventions(sized, g, p, cfg_.interventions, cfg_.express_weight);
  const auto traj = apply_interventions(g, plan, cfg_.metrics);

  fs::create_directories(path("intervene"));
  write_text(path(wsfile::plan), plan_json(g, plan));
  write_trajectory_csv(path(wsfile::trajectory), traj);
  write_text(path(wsfile::trajectory_json), trajectory_json(traj));
  record(artifact::intervention, {wsfile::plan, wsfile::trajectory, wsfile::trajectory_json},
         {artifact::graph, artifact::partition, artifact::flows});
  const auto& first = traj.steps.front().metrics;
  const auto& last = traj.steps.back().metrics;
  return fmt::format("intervene: {} steps; APL {:.2f} -> {:.2f}, avg ecc {:.2f} -> {:.2f}, diameter {} -> {}",
                     plan.steps.size(), first.avg_path_length, last.avg_path_length, first.avg_eccentricity,
                     last.avg_eccentricity, first.diameter, last.diameter);
}

std::string Workspace::report() {
  std::ostringstream md;
  md << "# Transit network analysis report\n\n";
  Manifest upstream;
  for (const auto& [name, r] : manifest_.artifacts()) {
    if (name != artifact::report) upstream.put(name, r);
  }
  md << fmt::format("Input manifest digest: `{}`\n\n", upstream.digest());
  std::vector<std::string> inputs;

  md << "## Artifacts\n\n| artifact | digest |\n|---|---|\n";
  for (const auto& [name, r] : upstream.artifacts()) md << fmt::format("| {} | `{}` |\n", name, r.digest.substr(0, 16));
  md << '\n';

  auto section = [&](const char* name, auto&& body) {
    if (!manifest_.find(name)) return;
    require(name);
    inputs.push_back(name);
    body();
  };

  section(artifact::odpairs, [&] {
    md << "## OD estimation\n\n| outcome | count |\n|---|---|\n";
    csv::Reader r(path(wsfile::diagnostics_summary));
    while (r.next()) md << fmt::format("| {} | {} |\n", r.fields()[0], r.fields()[1]);
    md << '\n';
  });
  section(artifact::sample_validation, [&] {
    const auto j = read_json_file(path(wsfile::regression));
    md << "## Sample representativeness\n\n";
    md << fmt::format("Power law y = Y x^beta: beta = {:.4f} (standard error {:.4f}), Y = {:.4f}, R2 = {:.4f}, "
                      "n = {}.  \nKernel smoother bandwidth h = {:.4g}, {} bootstrap resamples (seed {}).\n\n",
                      j["beta"].get<double>(), j["beta_stderr"].get<double>(), j["Y"].get<double>(),
                      j["r2"].get<double>(), j["n"].get<std::size_t>(), j["h"].get<double>(),
                      j["B"].get<std::size_t>(), j["seed"].get<std::uint64_t>());
  });
  section(artifact::graph, [&] {
    const auto j = read_json_file(path(wsfile::graph_metrics));
    const auto& m = j["metrics"];
    md << "## Supply graph\n\n";
    md << fmt::format("{} nodes, {} edges, {} weakly connected components. Giant component: {} nodes ({:.2f}%), {} "
                      "edges.\n\n",
                      j["node_count"].get<std::size_t>(), j["edge_count"].get<std::size_t>(),
                      j["component_count"].get<std::size_t>(), j["giant_nodes"].get<std::size_t>(),
                      100 * j["giant_coverage"].get<double>(), j["giant_edges"].get<std::size_t>());
    md << fmt::format("Average path length {:.2f} hops, average eccentricity {:.2f} hops, diameter {} hops ({}, "
                      "{}).\n\n",
                      m["avg_path_length"].get<double>(), m["avg_eccentricity"].get<double>(),
                      m["diameter"].get<int>(), m["sampled"].get<bool>() ? "sampled" : "exact",
                      m["convention"].get<std::string>());
  });
  section(artifact::partition, [&] {
    const auto j = read_json_file(path(wsfile::partition_summary));
    md << "## Communities\n\n";
    md << fmt::format("{} communities, modularity Q = {:.4f} (seed {}, resolution {}).\n\n",
                      j["community_count"].get<std::size_t>(), j["modularity"].get<double>(),
                      j["seed"].get<std::uint64_t>(), j["resolution"].get<double>());
    md << "| id | nodes | diameter | normalized diameter | density | avg clustering | avg weighted degree |\n"
          "|---|---|---|---|---|---|---|\n";
    for (const auto& s : j["stats"]) {
      md << fmt::format("| {} | {} | {} | {:.3f} | {} | {:.3f} | {:.3f} |\n", s["id"].get<int>(),
                        s["node_count"].get<std::size_t>(), s["diameter"].get<int>(),
                        s["normalized_diameter"].get<double>(),
                        s["density"].is_null() ? std::string("n/a") : fmt::format("{:.3f}", s["density"].get<double>()),
                        s["avg_clustering"].get<double>(), s["avg_weighted_degree"].get<double>());
    }
    md << '\n';
  });
  section(artifact::flows, [&] {
    const auto j = read_json_file(path(wsfile::flows_summary));
    md << "## Flows\n\nCounts are OD pairs (trips).\n\n| day class | pairs | intra % | inter % | unassigned | top "
          "pair |\n|---|---|---|---|---|---|\n";
    for (const auto& c : j["day_classes"]) {
      std::string top = "-";
      if (!c["top_inter_pairs"].empty()) {
        const auto& p = c["top_inter_pairs"][0];
        top = fmt::format("{{{}, {}}} {:.1f}%", p["pair"][0].get<int>(), p["pair"][1].get<int>(),
                          100 * p["share"].get<double>());
      }
      md << fmt::format("| {} | {} | {:.1f} | {:.1f} | {} | {} |\n", c["day_class"].get<std::string>(),
                        c["total"].get<std::uint64_t>(), c["pct_intra"].get<double>(), c["pct_inter"].get<double>(),
                        c["unassigned"].get<std::uint64_t>(), top);
    }
    md << '\n';
  });
  section(artifact::intervention, [&] {
    const auto plan = read_json_file(path(wsfile::plan));
    const auto t = read_json_file(path(wsfile::trajectory_json));
    md << "## Express-route interventions\n\n| step | pair | APL | avg ecc | diameter |\n|---|---|---|---|---|\n";
    for (const auto& s : t["steps"]) {
      const auto i = s["step"].get<std::size_t>();
      const std::string pair = i == 0 ? "baseline"
                                      : fmt::format("{{{}, {}}}", plan["pairs"][i - 1][0].get<int>(),
                                                    plan["pairs"][i - 1][1].get<int>());
      md << fmt::format("| {} | {} | {:.2f} | {:.2f} | {} |\n", i, pair, s["apl"].get<double>(),
                        s["avg_ecc"].get<double>(), s["diameter"].get<int>());
    }
    md << fmt::format("\nLargest APL drop at the first step: {}.\n",
                      t["first_step_largest_apl_drop"].get<bool>() ? "yes" : "no");
  });

  const std::string text = md.str();
  write_text(path(wsfile::report), text);
  record(artifact::report, {wsfile::report}, inputs);
  return text;
}

}  // namespace transitnet
