// Batch front end: every command is a thin wrapper over one library call.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "storygraph/edit.hpp"
#include "storygraph/evaluation.hpp"
#include "storygraph/export.hpp"
#include "storygraph/media.hpp"
#include "storygraph/orchestrator.hpp"
#include "storygraph/project.hpp"
#include "storygraph/remote_backend.hpp"
#include "storygraph/scripted_backend.hpp"
#include "storygraph/service.hpp"

namespace sg = storygraph;
using sg::ordered_json;

namespace {

struct Options {
  std::string format = "text";
  std::string backend = "scripted";
  std::uint64_t seed = 7;
  std::string remote_url;
  std::string project = ".";
  bool json() const { return format == "json"; }
};

std::shared_ptr<const sg::GenerativeBackend> make_backend(const Options& o) {
  if (o.backend == "remote") {
    auto url = o.remote_url;
    if (url.empty()) {
      if (const char* env = std::getenv("STORYGRAPH_REMOTE_URL")) url = env;
    }
    if (url.empty()) {
      throw sg::Error(sg::ErrorCode::PreconditionFailed, "backend",
                      "remote backend needs --remote-url or STORYGRAPH_REMOTE_URL");
    }
    sg::RemoteConfig config;
    config.base_url = url;
    return std::make_shared<sg::RemoteBackend>(config);
  }
  return std::make_shared<sg::ScriptedBackend>(o.seed);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw sg::Error(sg::ErrorCode::IOFailure, path, "cannot read " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string> id_list(const std::string& csv) {
  std::vector<std::string> ids;
  for (auto& id : sg::text::split(csv, ',')) {
    auto trimmed = std::string(sg::text::trim(id));
    if (!trimmed.empty()) ids.push_back(trimmed);
  }
  return ids;
}

// Saves the project and mirrors its graph to graph.json for other tools.
void store(const std::filesystem::path& dir, const sg::Project& project) {
  sg::save_project(dir, project);
  sg::write_file_atomic(dir / "graph.json", sg::serialize_graph(project.graph) + "\n");
}

void print(const Options& o, const ordered_json& json, const std::string& text) {
  if (o.json()) {
    std::cout << json.dump(2) << "\n";
  } else {
    std::cout << text;
  }
}

ordered_json graph_summary(const sg::Project& p) {
  ordered_json out = {{"project_id", p.project_id}, {"version", p.version}, {"node_count", p.graph.nodes.size()}};
  out["topology"] = p.graph.empty() ? ordered_json() : ordered_json(sg::to_string(sg::classify_topology(p.graph)));
  return out;
}

std::string summary_line(const sg::Project& p) {
  if (p.graph.empty()) return "empty graph\n";
  return std::string(sg::to_string(sg::classify_topology(p.graph))) + ", " + std::to_string(p.graph.nodes.size()) +
         " nodes\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Story graph tool: generate, edit, narrate and export branching stories."};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"text", "json"}));
  app.add_option("--backend", o.backend, "Generative backend")->check(CLI::IsMember({"scripted", "remote"}));
  app.add_option("--seed", o.seed, "Seed for the scripted backend");
  app.add_option("--remote-url", o.remote_url, "Base URL of the remote backend (http only)");
  app.add_option("-C,--project", o.project, "Project directory");

  std::string name, root = ".";
  auto* cmd_new = app.add_subcommand("new", "Create an empty project under ROOT");
  cmd_new->add_option("name", name, "Project name")->required();
  cmd_new->add_option("--root", root, "Directory holding projects");

  std::string prompt;
  auto* cmd_generate = app.add_subcommand("generate", "Generate a story graph from a premise");
  cmd_generate->add_option("prompt", prompt, "Story premise")->required();

  std::string nodes, instruction;
  auto* cmd_edit = app.add_subcommand("edit", "Rewrite the text of selected nodes");
  cmd_edit->add_option("--nodes", nodes, "Comma-separated node ids (default: all)");
  cmd_edit->add_option("--instruction", instruction, "Edit instruction")->required();

  std::string after;
  auto* cmd_extend = app.add_subcommand("extend", "Add one generated event");
  cmd_extend->add_option("--after", after, "Node the new event follows (default: last in story order)");
  cmd_extend->add_option("--instruction", instruction, "What should happen")->required();

  std::string kind = "audio", voice, style;
  int workers = 2;
  auto* cmd_media = app.add_subcommand("media", "Generate audio, images or video for nodes");
  cmd_media->add_option("--nodes", nodes, "Comma-separated node ids")->required();
  cmd_media->add_option("--kind", kind, "Media kind")->check(CLI::IsMember({"audio", "image", "video"}));
  cmd_media->add_option("--voice", voice, "Voice (audio only)");
  cmd_media->add_option("--style", style, "Style instructions");
  cmd_media->add_option("--workers", workers, "Concurrent jobs")->check(CLI::Range(1, 64));

  std::string path, dest;
  auto* cmd_export = app.add_subcommand("export", "Write manifest, subtitles and storyboard");
  auto* export_path = cmd_export->add_option("--path", path, "Root-to-end path, comma-separated");
  cmd_export->add_option("--nodes", nodes, "Subset of nodes, exported in story order")->excludes(export_path);
  cmd_export->add_option("--dest", dest, "Output directory (default: PROJECT/export)");

  std::string corpus = "linear";
  int jobs = 1;
  double alpha = 0.05;
  bool no_node_check = false;
  auto* cmd_eval = app.add_subcommand("eval", "Run the topology experiment on a prompt corpus");
  cmd_eval->add_option("--corpus", corpus, "branching, linear or a corpus file");
  cmd_eval->add_option("--jobs", jobs, "Trials run in parallel")->check(CLI::Range(1, 64));
  cmd_eval->add_option("--alpha", alpha, "1 - confidence level")->check(CLI::Range(0.0, 1.0));
  cmd_eval->add_flag("--no-node-check", no_node_check, "Do not require 8 to 12 nodes per story");

  std::string file;
  auto* cmd_validate = app.add_subcommand("validate", "Check a graph document");
  cmd_validate->add_option("file", file, "Graph document")->required();

  std::string host = "127.0.0.1";
  int port = 8080;
  bool delegated = false;
  auto* cmd_serve = app.add_subcommand("serve", "Serve the HTTP API");
  cmd_serve->add_option("--root", root, "Directory holding projects");
  cmd_serve->add_option("--host", host, "Listen address");
  cmd_serve->add_option("--port", port, "Listen port")->check(CLI::Range(0, 65535));
  cmd_serve->add_option("--workers", workers, "Concurrent media jobs per run")->check(CLI::Range(1, 64));
  cmd_serve->add_flag("--delegated-routing", delegated, "Let the text backend choose the task kind");

  auto* cmd_prune = app.add_subcommand("prune", "Delete superseded media versions");

  auto* cmd_snapshots = app.add_subcommand("snapshots", "List graph snapshots");

  int snapshot_id = 0;
  auto* cmd_restore = app.add_subcommand("restore", "Make an earlier snapshot current");
  cmd_restore->add_option("snapshot", snapshot_id, "Snapshot id")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::filesystem::path dir = o.project;
  try {
    if (*cmd_new) {
      auto project = sg::create_project(root, name);
      const auto where = std::filesystem::path(root) / project.project_id;
      print(o, {{"project_id", project.project_id}, {"path", where.string()}}, where.string() + "\n");
    } else if (*cmd_generate) {
      auto project = sg::load_project(dir);
      auto result = sg::run_pipeline(prompt, *make_backend(o));
      project.transcripts = result.transcripts;
      sg::commit_graph(project, std::move(result.graph), "generate");
      store(dir, project);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      auto json = graph_summary(project);
      json["warnings"] = result.warnings;
      print(o, json, summary_line(project));
    } else if (*cmd_edit) {
      auto project = sg::load_project(dir);
      auto selection = id_list(nodes);
      if (selection.empty()) {
        for (const auto& node : project.graph.nodes) selection.push_back(node.id);
      }
      sg::commit_graph(project, sg::edit_nodes(project.graph, selection, instruction, *make_backend(o)), "edit");
      store(dir, project);
      auto json = graph_summary(project);
      json["edited"] = selection;
      print(o, json, "edited " + sg::text::join(selection, ",") + "\n");
    } else if (*cmd_extend) {
      auto project = sg::load_project(dir);
      std::optional<std::string> anchor;
      if (!after.empty()) anchor = after;
      auto inserted = sg::extend_story(project.graph, anchor, instruction, *make_backend(o));
      sg::commit_graph(project, std::move(inserted.graph), "extend");
      store(dir, project);
      auto json = graph_summary(project);
      json["node_id"] = inserted.node_id;
      print(o, json, "added node " + inserted.node_id + "\n");
    } else if (*cmd_media) {
      auto project = sg::load_project(dir);
      sg::MediaParams params{*sg::parse_media_kind(kind), o.backend, std::nullopt, std::nullopt};
      if (!voice.empty()) params.voice = voice;
      if (!style.empty()) params.style_instructions = style;
      auto queued = sg::enqueue_media(project.graph, id_list(nodes), params, project.jobs.size() + 1);
      sg::AssetStore assets(dir);
      sg::process_jobs(queued, *make_backend(o), workers, sg::commit_to_graph(project.graph, &assets));
      project.jobs.insert(project.jobs.end(), queued.begin(), queued.end());
      ++project.version;
      store(dir, project);
      ordered_json json = ordered_json::array();
      std::string text;
      bool failed = false;
      for (const auto& job : queued) {
        json.push_back(sg::to_json(job));
        text += job.job_id + " node " + job.node_id + " " + std::string(sg::to_string(job.status));
        if (job.asset_id) text += " " + *job.asset_id;
        if (job.error) text += " (" + *job.error + ")";
        text += "\n";
        failed = failed || job.status == sg::JobStatus::Failed;
      }
      print(o, json, text);
      if (failed) return 1;
    } else if (*cmd_export) {
      auto project = sg::load_project(dir);
      auto selection = !path.empty()    ? sg::ExportSelection::path(id_list(path))
                       : !nodes.empty() ? sg::ExportSelection::nodes(id_list(nodes))
                                        : sg::ExportSelection::all();
      auto order = sg::sequence_for_export(project.graph, selection);
      if (auto warning = sg::export_warning(project.graph, selection)) std::cerr << "warning: " << *warning << "\n";
      const std::filesystem::path destination = dest.empty() ? dir / "export" : std::filesystem::path(dest);
      auto inventory = sg::export_bundle(project.graph, order, destination, dir);
      std::string text;
      for (const auto& f : inventory) text += (destination / f).string() + "\n";
      print(o, {{"destination", destination.string()}, {"order", order}, {"files", inventory}}, text);
    } else if (*cmd_eval) {
      const bool builtin = corpus == "linear" || corpus == "branching";
      const sg::Corpus chosen = builtin ? sg::builtin_corpus(corpus) : sg::load_corpus(corpus);
      sg::EvalOptions options;
      options.check_node_count = !no_node_check;
      options.jobs = jobs;
      auto records = sg::run_eval(chosen.prompts, *make_backend(o), options);
      auto summary = sg::summarize(records, alpha);
      std::string label = corpus == "linear" ? "Linear" : corpus == "branching" ? "Branching" : chosen.name;
      ordered_json trials = ordered_json::array();
      for (const auto& r : records) trials.push_back(sg::to_json(r));
      print(o, {{"corpus", chosen.name}, {"summary", sg::to_json(summary)}, {"records", trials}},
            sg::format_eval_table({{label, summary}}));
    } else if (*cmd_validate) {
      auto graph = sg::parse_graph_unchecked(read_text(file));
      auto report = sg::validate(graph);
      ordered_json violations = ordered_json::array();
      for (const auto& v : report.violations) {
        violations.push_back({{"kind", sg::to_string(v.kind)}, {"subject", v.subject}, {"message", v.message}});
      }
      std::string text = report.ok() ? "ok: " + std::to_string(graph.nodes.size()) + " nodes, " +
                                           std::to_string(graph.edges.size()) + " edges\n"
                                     : sg::describe(report);
      for (const auto& w : report.warnings) text += "warning: " + w + "\n";
      print(o,
            {{"valid", report.ok()},
             {"node_count", graph.nodes.size()},
             {"edge_count", graph.edges.size()},
             {"violations", violations},
             {"warnings", report.warnings}},
            text);
      return report.ok() ? 0 : 1;
    } else if (*cmd_serve) {
      sg::ServiceConfig config;
      config.project_root = root;
      config.media_workers = workers;
      config.delegated_routing = delegated;
      sg::StoryService service(config, make_backend(o));
      httplib::Server server;
      service.install(server);
      static httplib::Server* running = &server;
      std::signal(SIGINT, [](int) { running->stop(); });
      std::signal(SIGTERM, [](int) { running->stop(); });
      const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
      if (bound < 0) throw sg::Error(sg::ErrorCode::IOFailure, host, "cannot listen on " + host + ":" + std::to_string(port));
      std::cerr << "listening on http://" << host << ":" << bound << "\n";
      server.listen_after_bind();
    } else if (*cmd_prune) {
      auto project = sg::load_project(dir);
      sg::AssetStore assets(dir);
      auto removed = sg::prune_assets(project.graph, &assets);
      ++project.version;
      store(dir, project);
      ordered_json ids = ordered_json::array();
      std::string text;
      for (const auto& a : removed) {
        ids.push_back(a.asset_id);
        text += "removed " + a.asset_id + "\n";
      }
      print(o, {{"removed", ids}}, text);
    } else if (*cmd_snapshots) {
      auto project = sg::load_project(dir);
      ordered_json json = ordered_json::array();
      std::string text;
      for (const auto& s : project.snapshots) {
        json.push_back({{"snapshot_id", s.snapshot_id}, {"timestamp_ms", s.timestamp_ms}, {"reason", s.reason},
                        {"node_count", s.graph.nodes.size()}});
        text += std::to_string(s.snapshot_id) + "  " + s.reason + " (" + std::to_string(s.graph.nodes.size()) + " nodes)\n";
      }
      print(o, json, text);
    } else if (*cmd_restore) {
      auto project = sg::load_project(dir);
      sg::restore_snapshot(project, snapshot_id);
      store(dir, project);
      print(o, graph_summary(project), summary_line(project));
    }
  } catch (const sg::Error& e) {
    if (o.json()) {
      std::cout << sg::error_body(e).dump(2) << "\n";
    } else {
      std::cerr << "error: " << e.what() << "\n";
    }
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
