#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "storygraph/edit.hpp"
#include "storygraph/evaluation.hpp"
#include "storygraph/export.hpp"
#include "storygraph/media.hpp"
#include "storygraph/orchestrator.hpp"
#include "storygraph/project.hpp"

namespace storygraph {

struct ServiceConfig {
  std::filesystem::path project_root = "projects";
  int media_workers = 2;
  bool delegated_routing = false;  // ask the text backend to pick the task kind
  std::size_t context_budget = default_context_budget;
  std::chrono::milliseconds event_follow_limit{30000};  // longest a following event stream stays open
};

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownNode:
    case ErrorCode::UnknownProject:
    case ErrorCode::LookupError: return 404;
    case ErrorCode::Conflict: return 409;
    case ErrorCode::BackendFailure:
    case ErrorCode::UnparseableDecomposition:
    case ErrorCode::CyclicDrafts:
    case ErrorCode::DanglingSuccessor: return 502;
    case ErrorCode::IOFailure:
    case ErrorCode::CorruptProject:
    case ErrorCode::MissingAsset: return 500;
    default: return 400;
  }
}

inline ordered_json error_body(const Error& e) {
  ordered_json error = {{"code", to_string(e.code())}, {"subject", e.subject()}, {"message", e.detail()}};
  if (!e.stage().empty()) error["stage"] = e.stage();
  return {{"error", std::move(error)}};
}

/// Append-only, multi-reader event record for one project.
class EventLog {
 public:
  std::uint64_t publish(std::string type, ordered_json data) {
    std::lock_guard lock(mutex_);
    ordered_json event = {{"sequence", events_.size() + 1}, {"type", std::move(type)}};
    for (auto& [key, value] : data.items()) {
      if (key != "sequence") event[key] = value;
    }
    events_.push_back(std::move(event));
    changed_.notify_all();
    return events_.size();
  }

  /// Events with sequence > `after`, waiting up to `wait` for one to appear.
  std::vector<ordered_json> since(std::uint64_t after, std::chrono::milliseconds wait = {}) {
    std::unique_lock lock(mutex_);
    changed_.wait_for(lock, wait, [&] { return events_.size() > after || closed_; });
    if (after >= events_.size()) return {};
    return {events_.begin() + static_cast<std::ptrdiff_t>(after), events_.end()};
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    changed_.notify_all();
  }

 private:
  std::mutex mutex_;
  std::condition_variable changed_;
  std::vector<ordered_json> events_;
  bool closed_ = false;
};

/// HTTP front end over the library. One mutation at a time per project: a
/// second concurrent mutation is rejected with 409 rather than queued, and
/// an If-Match header carrying a stale version is rejected the same way.
class StoryService {
 public:
  StoryService(ServiceConfig config, std::shared_ptr<const GenerativeBackend> backend)
      : config_(std::move(config)), backend_(std::move(backend)) {
    std::error_code ec;
    std::filesystem::create_directories(config_.project_root, ec);
  }

  ~StoryService() { shutdown(); }

  StoryService(const StoryService&) = delete;
  StoryService& operator=(const StoryService&) = delete;

  /// Blocks until every media run started so far has finished.
  void wait_idle() {
    std::vector<std::thread> runs;
    {
      std::lock_guard lock(runs_mutex_);
      runs.swap(runs_);
    }
    for (auto& run : runs) run.join();
  }

  void shutdown() {
    wait_idle();
    std::lock_guard lock(slots_mutex_);
    for (auto& [id, slot] : slots_) slot->events.close();
  }

  void install(httplib::Server& server) {
    const std::string project = R"(/projects/([A-Za-z0-9._-]+))";
    server.Get("/health", wrap([this](const auto&, auto& res) {
                 send_json(res, {{"status", "ok"}, {"backend", backend_->name()}});
               }));
    server.Get("/projects", wrap([this](const auto&, auto& res) { send_json(res, list_projects()); }));
    server.Post("/projects", wrap([this](const auto& req, auto& res) { create(req, res); }));
    server.Get(project, wrap([this](const auto& req, auto& res) { summary(req, res); }));
    server.Get(project + "/graph", wrap([this](const auto& req, auto& res) { get_graph(req, res); }));
    server.Put(project + "/graph", wrap([this](const auto& req, auto& res) { put_graph(req, res); }));
    server.Get(project + "/state", wrap([this](const auto& req, auto& res) { get_state(req, res); }));
    server.Post(project + "/chat", wrap([this](const auto& req, auto& res) { chat(req, res); }));
    server.Post(project + "/nodes", wrap([this](const auto& req, auto& res) { add(req, res); }));
    server.Patch(project + R"(/nodes/([^/]+))", wrap([this](const auto& req, auto& res) { patch_node(req, res); }));
    server.Post(project + "/remove", wrap([this](const auto& req, auto& res) { remove(req, res); }));
    server.Post(project + "/duplicate", wrap([this](const auto& req, auto& res) { duplicate(req, res); }));
    server.Post(project + "/media", wrap([this](const auto& req, auto& res) { media(req, res); }));
    server.Get(project + "/jobs", wrap([this](const auto& req, auto& res) { jobs(req, res); }));
    server.Get(project + "/events", wrap([this](const auto& req, auto& res) { events(req, res); }));
    server.Post(project + "/export", wrap([this](const auto& req, auto& res) { export_project(req, res); }));
    server.Get(project + "/export/(manifest|srt|storyboard)",
               wrap([this](const auto& req, auto& res) { export_document(req, res); }));
    server.Get(project + "/snapshots", wrap([this](const auto& req, auto& res) { snapshots(req, res); }));
    server.Get(project + R"(/snapshots/(\d+))", wrap([this](const auto& req, auto& res) { snapshot(req, res); }));
    server.Post(project + "/restore", wrap([this](const auto& req, auto& res) { restore(req, res); }));
    server.Post(project + "/prune", wrap([this](const auto& req, auto& res) { prune(req, res); }));
    server.Post("/eval", wrap([this](const auto& req, auto& res) { evaluate(req, res); }));
  }

 private:
  struct Slot {
    std::mutex gate;
    std::optional<Project> project;
    EventLog events;
  };

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  static Handler wrap(Handler body) {
    return [body = std::move(body)](const httplib::Request& req, httplib::Response& res) {
      try {
        body(req, res);
      } catch (const Error& e) {
        res.status = http_status(e.code());
        res.set_content(error_body(e).dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(error_body(Error(ErrorCode::IOFailure, "", e.what())).dump(), "application/json");
      }
    };
  }

  static void send_json(httplib::Response& res, const ordered_json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static ordered_json body_json(const httplib::Request& req) {
    if (req.body.empty()) return ordered_json::object();
    try {
      auto body = ordered_json::parse(req.body);
      if (!body.is_object()) throw Error(ErrorCode::SchemaViolation, "", "request body must be a JSON object");
      return body;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedDocument, "", std::string("request body is not JSON: ") + e.what());
    }
  }

  static std::vector<std::string> id_list(const ordered_json& body, const char* key) {
    std::vector<std::string> ids;
    if (!body.contains(key) || body[key].is_null()) return ids;
    if (!body[key].is_array()) throw Error(ErrorCode::SchemaViolation, key, std::string(key) + " must be an array");
    for (const auto& item : body[key]) {
      if (item.is_string()) {
        ids.push_back(item.get<std::string>());
      } else if (item.is_number_integer()) {
        ids.push_back(std::to_string(item.get<long long>()));
      } else {
        throw Error(ErrorCode::SchemaViolation, key, std::string(key) + " must hold node ids");
      }
    }
    return ids;
  }

  static std::optional<std::string> optional_string(const ordered_json& body, const char* key) {
    if (!body.contains(key) || body[key].is_null()) return std::nullopt;
    if (!body[key].is_string()) throw Error(ErrorCode::SchemaViolation, key, std::string(key) + " must be a string");
    return body[key].get<std::string>();
  }

  static std::string etag(const Project& project) { return "\"" + std::to_string(project.version) + "\""; }

  std::filesystem::path project_dir(const std::string& id) const { return config_.project_root / id; }

  std::shared_ptr<Slot> slot(const std::string& id) {
    std::lock_guard lock(slots_mutex_);
    auto& slot = slots_[id];
    if (!slot) {
      if (!std::filesystem::exists(project_file(project_dir(id)))) {
        slots_.erase(id);
        throw Error(ErrorCode::UnknownProject, id, "no project " + id);
      }
      slot = std::make_shared<Slot>();
    }
    return slot;
  }

  // Callers hold slot.gate.
  Project& loaded(Slot& slot, const std::string& id) {
    if (!slot.project) slot.project = load_project(project_dir(id));
    return *slot.project;
  }

  template <class Read>
  void read(const httplib::Request& req, httplib::Response& res, Read body) {
    const std::string id = req.matches[1];
    auto s = slot(id);
    std::lock_guard lock(s->gate);
    const Project& project = loaded(*s, id);
    res.set_header("ETag", etag(project));
    body(project);
  }

  /// Runs `change` on a copy of the project; only a successful save makes
  /// the copy current.
  template <class Change>
  void mutate(const httplib::Request& req, httplib::Response& res, Change change, int status = 200) {
    const std::string id = req.matches[1];
    auto s = slot(id);
    std::unique_lock lock(s->gate, std::try_to_lock);
    if (!lock.owns_lock()) throw Error(ErrorCode::Conflict, id, "another change to this project is in progress");
    Project working = loaded(*s, id);
    if (req.has_header("If-Match")) {
      auto expected = req.get_header_value("If-Match");
      if (expected != "*" && expected != etag(working) && expected != std::to_string(working.version)) {
        throw Error(ErrorCode::Conflict, id,
                    "project is at version " + std::to_string(working.version) + ", request expected " + expected);
      }
    }
    ordered_json result = change(working, *s);
    save_project(project_dir(id), working);
    s->project = std::move(working);
    res.set_header("ETag", etag(*s->project));
    result["version"] = s->project->version;
    send_json(res, result, status);
  }

  ordered_json list_projects() const {
    ordered_json out = ordered_json::array();
    std::error_code ec;
    std::vector<std::string> ids;
    for (const auto& entry : std::filesystem::directory_iterator(config_.project_root, ec)) {
      if (std::filesystem::exists(project_file(entry.path()))) ids.push_back(entry.path().filename().string());
    }
    std::sort(ids.begin(), ids.end());
    for (const auto& id : ids) out.push_back(id);
    return out;
  }

  void create(const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req);
    auto name = optional_string(body, "name").value_or("untitled");
    auto project = create_project(config_.project_root, name);
    res.set_header("ETag", etag(project));
    send_json(res, {{"project_id", project.project_id}, {"name", project.name}, {"version", project.version}}, 201);
  }

  void summary(const httplib::Request& req, httplib::Response& res) {
    read(req, res, [&](const Project& p) {
      ordered_json out = {{"project_id", p.project_id},
                          {"name", p.name},
                          {"version", p.version},
                          {"node_count", p.graph.nodes.size()},
                          {"edge_count", p.graph.edges.size()},
                          {"snapshot_count", p.snapshots.size()}};
      out["topology"] = p.graph.empty() ? ordered_json() : ordered_json(to_string(classify_topology(p.graph)));
      out["story_context"] = p.graph.story_context ? ordered_json(*p.graph.story_context) : ordered_json();
      send_json(res, out);
    });
  }

  void get_graph(const httplib::Request& req, httplib::Response& res) {
    read(req, res, [&](const Project& p) { res.set_content(serialize_graph(p.graph), "application/json"); });
  }

  void get_state(const httplib::Request& req, httplib::Response& res) {
    read(req, res, [&](const Project& p) {
      ordered_json jobs = ordered_json::array();
      for (const auto& job : p.jobs) jobs.push_back(to_json(job));
      send_json(res, {{"version", p.version}, {"graph", stored_graph_to_json(p.graph)}, {"jobs", std::move(jobs)}});
    });
  }

  /// Nodes that keep their id keep their assets; a changed segment makes
  /// them stale.
  static StoryGraph carry_assets(const StoryGraph& before, StoryGraph after) {
    after.story_context = before.story_context;
    for (auto& node : after.nodes) {
      if (const auto* old = before.find_node(node.id)) {
        node.assets = old->assets;
        if (old->segment != node.segment) {
          for (auto& asset : node.assets) asset.stale = true;
        }
      }
    }
    return after;
  }

  void put_graph(const httplib::Request& req, httplib::Response& res) {
    const auto mode = req.get_param_value("mode") == "lenient" ? ParseMode::Lenient : ParseMode::Strict;
    auto incoming = parse_graph(req.body, mode);
    mutate(req, res, [&](Project& p, Slot&) {
      commit_graph(p, carry_assets(p.graph, std::move(incoming)), "replace graph");
      return ordered_json{{"graph", graph_to_json(p.graph)}};
    });
  }

  static MediaKind media_kind_for(const std::string& utterance) {
    if (text::has_word_stem(utterance, {"video", "clip", "animat"})) return MediaKind::Video;
    if (text::has_word_stem(utterance, {"image", "picture", "illustrat", "draw"})) return MediaKind::Image;
    return MediaKind::Audio;
  }

  void chat(const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req);
    TaskRequest request;
    request.utterance = optional_string(body, "utterance").value_or("");
    request.selection = id_list(body, "selection");
    if (auto command = optional_string(body, "command")) {
      request.explicit_command = parse_task_kind(*command);
      if (!request.explicit_command) throw Error(ErrorCode::SchemaViolation, "command", "unknown command " + *command);
    }
    std::vector<MediaJob> started;
    mutate(req, res, [&](Project& p, Slot& s) {
      request.graph_present = !p.graph.empty();
      auto decision = config_.delegated_routing ? route_request(request, *backend_) : route_request(request);
      ordered_json out = {{"task_kind", to_string(decision.kind)}, {"notice", decision.notice}};
      switch (decision.kind) {
        case TaskKind::Generate: {
          auto result = run_pipeline(request.utterance, *backend_, [&](const StageRecord& r) {
            s.events.publish("stage", {{"stage", r.stage}, {"status", r.status}, {"elapsed_ms", r.elapsed_ms}});
          });
          p.transcripts = result.transcripts;
          commit_graph(p, std::move(result.graph), "generate");
          out["warnings"] = result.warnings;
          break;
        }
        case TaskKind::Edit: {
          auto selection = decision.selection;
          if (selection.empty()) {
            for (const auto& node : p.graph.nodes) selection.push_back(node.id);
          }
          commit_graph(p, edit_nodes(p.graph, selection, request.utterance, *backend_), "edit");
          break;
        }
        case TaskKind::Extend: {
          std::optional<std::string> after;
          if (!decision.selection.empty()) after = decision.selection.front();
          auto inserted = extend_story(p.graph, after, request.utterance, *backend_);
          commit_graph(p, std::move(inserted.graph), "extend");
          out["node_id"] = inserted.node_id;
          break;
        }
        case TaskKind::MediaGen: {
          MediaParams params{media_kind_for(request.utterance), backend_->name(), std::nullopt, request.utterance};
          started = queue_jobs(p, decision.selection, params);
          out["job_ids"] = job_ids(started);
          break;
        }
        case TaskKind::Export: {
          auto selection = decision.selection.empty() ? ExportSelection::all() : ExportSelection::nodes(decision.selection);
          out.update(write_export(p, selection));
          break;
        }
      }
      out["graph"] = graph_to_json(p.graph);
      return out;
    });
    start_media(req.matches[1], std::move(started));
  }

  void add(const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req);
    mutate(
        req, res,
        [&](Project& p, Slot&) {
          auto inserted = add_node(p.graph, optional_string(body, "label").value_or("New event"),
                                   optional_string(body, "segment").value_or(""), optional_string(body, "connect_from"),
                                   optional_string(body, "connect_to"));
          commit_graph(p, std::move(inserted.graph), "add node " + inserted.node_id);
          return ordered_json{{"node_id", inserted.node_id}, {"graph", graph_to_json(p.graph)}};
        },
        201);
  }

  void patch_node(const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req);
    const std::string node_id = req.matches[2];
    mutate(req, res, [&](Project& p, Slot&) {
      auto graph = update_node_text(p.graph, node_id, optional_string(body, "label"), optional_string(body, "segment"));
      if (body.contains("position")) {
        const auto& position = body["position"];
        if (!position.is_object() || !position.contains("x") || !position.contains("y") || !position["x"].is_number() ||
            !position["y"].is_number()) {
          throw Error(ErrorCode::SchemaViolation, "position", "position needs numeric x and y");
        }
        graph = move_node(std::move(graph), node_id, {position["x"].get<double>(), position["y"].get<double>()});
      }
      commit_graph(p, std::move(graph), "update node " + node_id);
      return ordered_json{{"graph", graph_to_json(p.graph)}};
    });
  }

  void remove(const httplib::Request& req, httplib::Response& res) {
    auto selection = id_list(body_json(req), "selection");
    if (selection.empty()) throw Error(ErrorCode::EmptySelection, "", "nothing selected to remove");
    mutate(req, res, [&](Project& p, Slot&) {
      commit_graph(p, remove_nodes(p.graph, selection), "remove " + text::join(selection, ","));
      return ordered_json{{"graph", graph_to_json(p.graph)}};
    });
  }

  void duplicate(const httplib::Request& req, httplib::Response& res) {
    auto selection = id_list(body_json(req), "selection");
    mutate(req, res, [&](Project& p, Slot&) {
      auto copy = duplicate_subgraph(p.graph, selection);
      commit_graph(p, std::move(copy.graph), "duplicate " + text::join(selection, ","));
      ordered_json mapping = ordered_json::object();
      for (const auto& [from, to] : copy.mapping) mapping[from] = to;
      return ordered_json{{"mapping", std::move(mapping)}, {"graph", graph_to_json(p.graph)}};
    });
  }

  static ordered_json job_ids(const std::vector<MediaJob>& jobs) {
    ordered_json ids = ordered_json::array();
    for (const auto& job : jobs) ids.push_back(job.job_id);
    return ids;
  }

  std::vector<MediaJob> queue_jobs(Project& p, const std::vector<std::string>& selection, const MediaParams& params) {
    auto jobs = enqueue_media(p.graph, selection, params, p.jobs.size() + 1, config_.context_budget);
    p.jobs.insert(p.jobs.end(), jobs.begin(), jobs.end());
    return jobs;
  }

  void media(const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req);
    auto selection = id_list(body, "selection");
    auto params = media_params_from_json(body.contains("params") ? body["params"] : ordered_json{{"kind", "audio"}});
    std::vector<MediaJob> started;
    mutate(
        req, res,
        [&](Project& p, Slot&) {
          started = queue_jobs(p, selection, params);
          return ordered_json{{"job_ids", job_ids(started)}};
        },
        202);
    start_media(req.matches[1], std::move(started));
  }

  /// Drains `jobs` on a background thread. Every transition and every new
  /// asset is saved to the project under its gate and published as an event.
  void start_media(const std::string& id, std::vector<MediaJob> jobs) {
    if (jobs.empty()) return;
    auto s = slot(id);
    std::lock_guard lock(runs_mutex_);
    runs_.emplace_back([this, s, id, jobs = std::move(jobs)]() mutable {
      AssetStore store(project_dir(id));
      auto commit = [&](const MediaJob& job, const BackendResponse& response) {
        std::lock_guard gate(s->gate);
        Project working = loaded(*s, id);
        auto asset = commit_to_graph(working.graph, &store)(job, response);
        ++working.version;
        save_project(project_dir(id), working);
        s->project = std::move(working);
        return asset;
      };
      auto observer = [&](const JobEvent& event) {
        {
          std::lock_guard gate(s->gate);
          Project working = loaded(*s, id);
          auto local = std::find_if(jobs.begin(), jobs.end(), [&](const MediaJob& j) { return j.job_id == event.job_id; });
          for (auto& stored : working.jobs) {
            if (stored.job_id == event.job_id) stored = *local;
          }
          try {
            save_project(project_dir(id), working);
            s->project = std::move(working);
          } catch (const Error&) {
            // the in-memory state stays authoritative until the next save
          }
        }
        s->events.publish("job", to_json(event));
      };
      process_jobs(jobs, *backend_, config_.media_workers, commit, observer);
    });
  }

  void jobs(const httplib::Request& req, httplib::Response& res) {
    read(req, res, [&](const Project& p) {
      ordered_json out = ordered_json::array();
      for (const auto& job : p.jobs) out.push_back(to_json(job));
      send_json(res, out);
    });
  }

  /// Server-sent events. `since` (or Last-Event-ID) skips events already
  /// seen; `follow=1` keeps the stream open for new events, until `limit`
  /// events have been sent when given.
  void events(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    auto s = slot(id);
    std::uint64_t since = 0;
    auto last = req.has_header("Last-Event-ID") ? req.get_header_value("Last-Event-ID") : req.get_param_value("since");
    if (!last.empty()) {
      try {
        since = std::stoull(last);
      } catch (const std::exception&) {
        throw Error(ErrorCode::SchemaViolation, "since", "since must be an event sequence number");
      }
    }
    const bool follow = req.get_param_value("follow") == "1" || req.get_param_value("follow") == "true";
    std::uint64_t limit = 0;
    if (req.has_param("limit")) {
      try {
        limit = std::stoull(req.get_param_value("limit"));
      } catch (const std::exception&) {
        throw Error(ErrorCode::SchemaViolation, "limit", "limit must be a count");
      }
    }
    const auto deadline = std::chrono::steady_clock::now() + config_.event_follow_limit;
    auto cursor = std::make_shared<std::uint64_t>(since);
    auto sent = std::make_shared<std::uint64_t>(0);
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("text/event-stream", [s, cursor, sent, limit, follow,
                                                           deadline](std::size_t, httplib::DataSink& sink) {
      auto batch = s->events.since(*cursor, follow ? std::chrono::milliseconds(250) : std::chrono::milliseconds(0));
      std::string chunk;
      for (const auto& event : batch) {
        if (limit && *sent == limit) break;
        ++*sent;
        *cursor = event["sequence"].get<std::uint64_t>();
        chunk += "id: " + std::to_string(*cursor) + "\nevent: " + event["type"].get<std::string>() +
                 "\ndata: " + event.dump() + "\n\n";
      }
      if (!chunk.empty() && !sink.write(chunk.data(), chunk.size())) return false;
      if (!follow || (limit && *sent == limit) || std::chrono::steady_clock::now() >= deadline) {
        sink.done();
      } else if (chunk.empty()) {
        const std::string keepalive = ": keepalive\n\n";
        if (!sink.write(keepalive.data(), keepalive.size())) return false;
      }
      return true;
    });
  }

  static ExportSelection selection_from(const ordered_json& body) {
    auto path = id_list(body, "path");
    if (!path.empty()) return ExportSelection::path(std::move(path));
    auto nodes = id_list(body, "selection");
    if (!nodes.empty()) return ExportSelection::nodes(std::move(nodes));
    return ExportSelection::all();
  }

  ordered_json write_export(const Project& p, const ExportSelection& selection) {
    auto order = sequence_for_export(p.graph, selection);
    auto destination = project_dir(p.project_id) / "export";
    std::error_code ec;
    std::filesystem::remove_all(destination, ec);
    auto inventory = export_bundle(p.graph, order, destination, project_dir(p.project_id));
    ordered_json out = {{"order", order}, {"inventory", inventory}};
    if (auto warning = export_warning(p.graph, selection)) out["warning"] = *warning;
    return out;
  }

  void export_project(const httplib::Request& req, httplib::Response& res) {
    auto selection = selection_from(body_json(req));
    // exporting writes files but does not change the project
    const std::string id = req.matches[1];
    auto s = slot(id);
    std::unique_lock lock(s->gate, std::try_to_lock);
    if (!lock.owns_lock()) throw Error(ErrorCode::Conflict, id, "another change to this project is in progress");
    send_json(res, write_export(loaded(*s, id), selection));
  }

  void export_document(const httplib::Request& req, httplib::Response& res) {
    ordered_json query = ordered_json::object();
    for (const char* key : {"path", "selection"}) {
      if (req.has_param(key)) query[key] = text::split(req.get_param_value(key), ',');
    }
    const std::string what = req.matches[2];
    read(req, res, [&](const Project& p) {
      auto order = sequence_for_export(p.graph, selection_from(query));
      if (what == "srt") {
        res.set_content(render_srt(build_manifest(p.graph, order)), "application/x-subrip");
      } else if (what == "storyboard") {
        res.set_content(export_storyboard(p.graph, order), "text/markdown");
      } else {
        send_json(res, manifest_to_json(build_manifest(p.graph, order)));
      }
    });
  }

  void snapshots(const httplib::Request& req, httplib::Response& res) {
    read(req, res, [&](const Project& p) {
      ordered_json out = ordered_json::array();
      for (const auto& s : p.snapshots) {
        out.push_back({{"snapshot_id", s.snapshot_id},
                       {"timestamp_ms", s.timestamp_ms},
                       {"reason", s.reason},
                       {"node_count", s.graph.nodes.size()}});
      }
      send_json(res, out);
    });
  }

  void snapshot(const httplib::Request& req, httplib::Response& res) {
    const int wanted = std::stoi(req.matches[2]);
    read(req, res, [&](const Project& p) {
      for (const auto& s : p.snapshots) {
        if (s.snapshot_id == wanted) {
          res.set_content(serialize_graph(s.graph), "application/json");
          return;
        }
      }
      throw Error(ErrorCode::LookupError, std::to_string(wanted), "no snapshot " + std::to_string(wanted));
    });
  }

  void restore(const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req);
    if (!body.contains("snapshot_id") || !body["snapshot_id"].is_number_integer()) {
      throw Error(ErrorCode::SchemaViolation, "snapshot_id", "snapshot_id must be an integer");
    }
    const int snapshot_id = body["snapshot_id"].get<int>();
    mutate(req, res, [&](Project& p, Slot&) {
      restore_snapshot(p, snapshot_id);
      return ordered_json{{"graph", graph_to_json(p.graph)}};
    });
  }

  void prune(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    mutate(req, res, [&](Project& p, Slot&) {
      AssetStore store(project_dir(id));
      auto removed = prune_assets(p.graph, &store);
      ++p.version;
      ordered_json ids = ordered_json::array();
      for (const auto& asset : removed) ids.push_back(asset.asset_id);
      return ordered_json{{"removed", std::move(ids)}};
    });
  }

  void evaluate(const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req);
    const auto& corpus = builtin_corpus(optional_string(body, "corpus").value_or("linear"));
    EvalOptions options;
    options.check_node_count = body.value("check_node_count", true);
    options.jobs = body.value("jobs", 1);
    auto records = run_eval(corpus.prompts, *backend_, options);
    auto summary = summarize(records, body.value("alpha", 0.05));
    ordered_json trials = ordered_json::array();
    for (const auto& r : records) trials.push_back(to_json(r));
    const std::string label = corpus.name == "linear" ? "Linear" : "Branching";
    send_json(res, {{"corpus", corpus.name},
                    {"summary", to_json(summary)},
                    {"table", format_eval_table({{label, summary}})},
                    {"records", std::move(trials)}});
  }

  ServiceConfig config_;
  std::shared_ptr<const GenerativeBackend> backend_;
  std::mutex slots_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> slots_;
  std::mutex runs_mutex_;
  std::vector<std::thread> runs_;
};

}  // namespace storygraph
