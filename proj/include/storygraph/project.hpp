#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "storygraph/atomic_file.hpp"
#include "storygraph/graph_io.hpp"
#include "storygraph/media.hpp"
#include "storygraph/orchestrator.hpp"

namespace storygraph {

struct Snapshot {
  int snapshot_id = 0;
  std::int64_t timestamp_ms = 0;
  std::string reason;
  StoryGraph graph;
};

// A project lives in its own directory: project.json plus assets/ and, after
// an export, export/. The graph in project.json carries what the plain graph
// document cannot: media assets and the story context.
struct Project {
  std::string project_id;
  std::string name;
  std::uint64_t version = 0;  // bumped by every saved change; used as the HTTP ETag
  StoryGraph graph;
  std::vector<Snapshot> snapshots;
  std::vector<MediaJob> jobs;
  std::vector<StageRecord> transcripts;
};

inline constexpr std::string_view project_file_name = "project.json";
inline constexpr int project_format_version = 1;

inline ordered_json stored_graph_to_json(const StoryGraph& graph) {
  ordered_json assets = ordered_json::object();
  for (const auto& node : graph.nodes) {
    if (node.assets.empty()) continue;
    auto& list = assets[node.id] = ordered_json::array();
    for (const auto& asset : node.assets) list.push_back(to_json(asset));
  }
  return {{"document", graph_to_json(graph)},
          {"story_context", graph.story_context ? ordered_json(*graph.story_context) : ordered_json()},
          {"assets", std::move(assets)}};
}

inline StoryGraph stored_graph_from_json(const ordered_json& in) {
  if (!in.is_object() || !in.contains("document")) {
    throw Error(ErrorCode::SchemaViolation, "graph", "stored graph needs a document");
  }
  auto graph = graph_from_json(in["document"], ParseMode::Lenient);
  if (in.contains("story_context") && in["story_context"].is_string()) {
    graph.story_context = in["story_context"].get<std::string>();
  }
  if (in.contains("assets") && in["assets"].is_object()) {
    for (const auto& [node_id, list] : in["assets"].items()) {
      auto node = std::find_if(graph.nodes.begin(), graph.nodes.end(), [&](const auto& n) { return n.id == node_id; });
      if (node == graph.nodes.end()) throw Error(ErrorCode::SchemaViolation, node_id, "assets for unknown node " + node_id);
      for (const auto& asset : list) node->assets.push_back(media_asset_from_json(asset));
    }
  }
  return graph;
}

inline ordered_json to_json(const StageRecord& r) {
  return {{"stage", r.stage}, {"status", r.status}, {"input", r.input}, {"output", r.output}, {"elapsed_ms", r.elapsed_ms}};
}

inline StageRecord stage_record_from_json(const ordered_json& in) {
  return {in.value("stage", ""), in.value("status", ""), in.value("input", ""), in.value("output", ""),
          in.value("elapsed_ms", std::int64_t{0})};
}

inline ordered_json to_json(const Project& project) {
  ordered_json snapshots = ordered_json::array();
  for (const auto& s : project.snapshots) {
    snapshots.push_back({{"snapshot_id", s.snapshot_id},
                         {"timestamp_ms", s.timestamp_ms},
                         {"reason", s.reason},
                         {"graph", stored_graph_to_json(s.graph)}});
  }
  ordered_json jobs = ordered_json::array();
  for (const auto& job : project.jobs) jobs.push_back(to_json(job));
  ordered_json transcripts = ordered_json::array();
  for (const auto& record : project.transcripts) transcripts.push_back(to_json(record));
  return {{"format", "storygraph-project"},
          {"format_version", project_format_version},
          {"project_id", project.project_id},
          {"name", project.name},
          {"version", project.version},
          {"graph", stored_graph_to_json(project.graph)},
          {"snapshots", std::move(snapshots)},
          {"jobs", std::move(jobs)},
          {"transcripts", std::move(transcripts)}};
}

/// Any structural or integrity problem is reported as CorruptProject.
inline Project project_from_json(const ordered_json& in) {
  try {
    if (!in.is_object() || in.value("format", "") != "storygraph-project") {
      throw Error(ErrorCode::SchemaViolation, "format", "not a story-graph project file");
    }
    Project project;
    project.project_id = in.at("project_id").get<std::string>();
    project.name = in.value("name", "");
    project.version = in.value("version", std::uint64_t{0});
    project.graph = stored_graph_from_json(in.at("graph"));
    int last = 0;
    for (const auto& s : in.at("snapshots")) {
      Snapshot snapshot{s.at("snapshot_id").get<int>(), s.value("timestamp_ms", std::int64_t{0}),
                        s.value("reason", ""), stored_graph_from_json(s.at("graph"))};
      if (snapshot.snapshot_id <= last) throw Error(ErrorCode::SchemaViolation, "snapshots", "snapshot ids must increase");
      last = snapshot.snapshot_id;
      project.snapshots.push_back(std::move(snapshot));
    }
    for (const auto& job : in.at("jobs")) project.jobs.push_back(media_job_from_json(job));
    for (const auto& record : in.at("transcripts")) project.transcripts.push_back(stage_record_from_json(record));
    return project;
  } catch (const Error& e) {
    throw Error(ErrorCode::CorruptProject, e.subject(), e.detail());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptProject, "", e.what());
  }
}

inline std::filesystem::path project_file(const std::filesystem::path& dir) { return dir / project_file_name; }

inline void save_project(const std::filesystem::path& dir, const Project& project,
                         const BeforeRenameHook& before_rename = {}) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IOFailure, dir.string(), "cannot create project directory: " + ec.message());
  write_file_atomic(project_file(dir), to_json(project).dump(1) + "\n", before_rename);
}

/// Reads and validates a project. A file that fails to parse or validate is
/// left untouched and reported as CorruptProject.
inline Project load_project(const std::filesystem::path& dir) {
  const auto path = project_file(dir);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnknownProject, dir.filename().string(), "no project at " + dir.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  ordered_json document;
  try {
    document = ordered_json::parse(buffer.str());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptProject, path.string(), std::string("unreadable project file: ") + e.what());
  }
  return project_from_json(document);
}

inline Project new_project(std::string project_id, std::string name) {
  Project project;
  project.project_id = std::move(project_id);
  project.name = std::move(name);
  return project;
}

/// Lowercase letters, digits and dashes taken from `name`.
inline std::string project_slug(std::string_view name) {
  std::string slug;
  for (unsigned char c : name) {
    if (std::isalnum(c)) {
      slug += static_cast<char>(std::tolower(c));
    } else if (!slug.empty() && slug.back() != '-') {
      slug += '-';
    }
  }
  while (!slug.empty() && slug.back() == '-') slug.pop_back();
  if (slug.size() > 40) slug.resize(40);
  return slug.empty() ? "project" : slug;
}

/// Creates root/{slug} (with -2, -3, ... on collision) holding a fresh,
/// empty project.
inline Project create_project(const std::filesystem::path& root, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  const auto base = project_slug(name);
  for (int attempt = 1; attempt < 10000; ++attempt) {
    const auto id = attempt == 1 ? base : base + "-" + std::to_string(attempt);
    if (std::filesystem::create_directory(root / id, ec)) {
      auto project = new_project(id, name);
      save_project(root / id, project);
      return project;
    }
    if (ec) throw Error(ErrorCode::IOFailure, root.string(), "cannot create project: " + ec.message());
  }
  throw Error(ErrorCode::IOFailure, root.string(), "no free project id for " + name);
}

/// Replaces the graph after validating it and records the new state as a
/// snapshot. On failure the project is unchanged.
inline void commit_graph(Project& project, StoryGraph graph, std::string reason) {
  require_valid(graph);
  const int id = project.snapshots.empty() ? 1 : project.snapshots.back().snapshot_id + 1;
  project.snapshots.push_back({id, now_ms(), std::move(reason), graph});
  project.graph = std::move(graph);
  ++project.version;
}

/// Makes snapshot `snapshot_id` current. The state being replaced is
/// snapshotted first, so nothing is lost.
inline void restore_snapshot(Project& project, int snapshot_id) {
  auto it = std::find_if(project.snapshots.begin(), project.snapshots.end(),
                         [&](const Snapshot& s) { return s.snapshot_id == snapshot_id; });
  if (it == project.snapshots.end()) {
    throw Error(ErrorCode::LookupError, std::to_string(snapshot_id), "no snapshot " + std::to_string(snapshot_id));
  }
  StoryGraph target = it->graph;
  const StoryGraph current = project.graph;
  commit_graph(project, current, "before restore of snapshot " + std::to_string(snapshot_id));
  commit_graph(project, std::move(target), "restore snapshot " + std::to_string(snapshot_id));
}

}  // namespace storygraph
