#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "storygraph/backend.hpp"
#include "storygraph/graph.hpp"
#include "storygraph/prompts.hpp"
#include "storygraph/topology.hpp"

namespace storygraph {

inline constexpr std::size_t default_context_budget = 4000;

struct RollingContext {
  std::string text;
  std::size_t char_budget = default_context_budget;
};

/// Segments of every ancestor of `id` in topological order, joined by blank
/// lines. When too long, the oldest text is dropped first; the cut never
/// splits a UTF-8 sequence.
inline RollingContext rolling_context(const StoryGraph& graph, const std::string& id,
                                      std::size_t char_budget = default_context_budget) {
  GraphIndex index(graph);
  auto ancestors = index.ancestors_of(index.require(id));
  std::vector<std::string> parts;
  for (std::size_t i : detail::topological_indices(index)) {
    if (ancestors[i]) parts.push_back(index.node(i).segment);
  }
  std::string joined = text::join(parts, "\n\n");
  if (joined.size() > char_budget) {
    std::size_t cut = joined.size() - char_budget;
    while (cut < joined.size() && (static_cast<unsigned char>(joined[cut]) & 0xC0) == 0x80) ++cut;
    joined.erase(0, cut);
  }
  return {std::move(joined), char_budget};
}

enum class JobStatus { Queued, Running, Done, Failed };

inline std::string_view to_string(JobStatus status) {
  switch (status) {
    case JobStatus::Queued: return "queued";
    case JobStatus::Running: return "running";
    case JobStatus::Done: return "done";
    case JobStatus::Failed: return "failed";
  }
  return "queued";
}

inline std::optional<JobStatus> parse_job_status(std::string_view name) {
  for (auto s : {JobStatus::Queued, JobStatus::Running, JobStatus::Done, JobStatus::Failed}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

inline bool is_terminal(JobStatus status) { return status == JobStatus::Done || status == JobStatus::Failed; }

inline bool is_legal_transition(JobStatus from, JobStatus to) {
  return (from == JobStatus::Queued && to == JobStatus::Running) ||
         (from == JobStatus::Running && (to == JobStatus::Done || to == JobStatus::Failed));
}

inline std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

struct MediaJob {
  std::string job_id;
  std::string node_id;
  MediaParams params;
  JobStatus status = JobStatus::Queued;
  std::optional<std::string> error;
  std::string prompt;   // the node segment
  std::string context;  // rolling context, image and video only
  std::optional<std::string> asset_id;
  std::int64_t submitted_at = 0;
  std::optional<std::int64_t> started_at;
  std::optional<std::int64_t> finished_at;

  friend bool operator==(const MediaJob&, const MediaJob&) = default;
};

/// One queued job per selected node, ids numbered from `first_number`.
inline std::vector<MediaJob> enqueue_media(const StoryGraph& graph, const std::vector<std::string>& selection,
                                           const MediaParams& params, std::size_t first_number = 1,
                                           std::size_t context_budget = default_context_budget) {
  if (selection.empty()) throw Error(ErrorCode::EmptySelection, "", "media generation needs at least one node");
  for (const auto& id : selection) {
    if (text::trim(require_node(graph, id).segment).empty()) {
      throw Error(ErrorCode::EmptySegment, id, "node " + id + " has no text to generate media from");
    }
  }
  const auto submitted = now_ms();
  std::vector<MediaJob> jobs;
  for (const auto& id : selection) {
    MediaJob job;
    job.job_id = "job-" + std::to_string(first_number + jobs.size());
    job.node_id = id;
    job.params = params;
    job.prompt = require_node(graph, id).segment;
    if (params.kind != MediaKind::Audio) job.context = rolling_context(graph, id, context_budget).text;
    job.submitted_at = submitted;
    jobs.push_back(std::move(job));
  }
  return jobs;
}

inline BackendRequest media_request(const MediaJob& job) {
  const std::string kind(to_string(job.params.kind));
  ordered_json inputs = {{"segment", job.prompt}, {"context", job.context}, {"provider", job.params.provider}};
  if (job.params.voice) inputs["voice"] = *job.params.voice;
  if (job.params.style_instructions) inputs["style_instructions"] = *job.params.style_instructions;
  return {kind, prompts::media(kind, job.prompt, job.context, job.params.style_instructions.value_or("")),
          std::move(inputs)};
}

/// Attaches a new version of (node, kind): the previous current version
/// becomes stale and is kept.
inline MediaAsset attach_asset(StoryGraph& graph, const std::string& node_id, const MediaParams& params,
                               std::optional<double> duration_s, const std::function<std::string(const MediaAsset&)>& uri_for = {}) {
  auto at = std::find_if(graph.nodes.begin(), graph.nodes.end(), [&](const StoryNode& n) { return n.id == node_id; });
  if (at == graph.nodes.end()) throw Error(ErrorCode::UnknownNode, node_id, "no node with id " + node_id);
  int version = 0;
  for (const auto& asset : at->assets) {
    if (asset.kind == params.kind) version = std::max(version, asset.version);
  }
  MediaAsset asset;
  asset.node_id = node_id;
  asset.kind = params.kind;
  asset.version = version + 1;
  asset.asset_id = node_id + "-" + std::string(to_string(params.kind)) + "-v" + std::to_string(asset.version);
  asset.duration_s = duration_s;
  asset.params = params;
  asset.uri = uri_for ? uri_for(asset) : std::string();
  for (auto& existing : at->assets) {
    if (existing.kind == params.kind) existing.stale = true;
  }
  at->assets.push_back(asset);
  return asset;
}

/// Current (non-stale) asset per kind, in kind order.
inline std::vector<MediaAsset> current_assets(const StoryGraph& graph, const std::string& id) {
  std::map<MediaKind, MediaAsset> latest;
  for (const auto& asset : require_node(graph, id).assets) {
    if (asset.stale) continue;
    auto [it, inserted] = latest.emplace(asset.kind, asset);
    if (!inserted && asset.version > it->second.version) it->second = asset;
  }
  std::vector<MediaAsset> out;
  for (auto& [kind, asset] : latest) out.push_back(std::move(asset));
  return out;
}

inline std::optional<MediaAsset> current_asset(const StoryGraph& graph, const std::string& id, MediaKind kind) {
  for (auto& asset : current_assets(graph, id)) {
    if (asset.kind == kind) return asset;
  }
  return std::nullopt;
}

/// Files under a project directory: assets/{node}/{kind}-v{n}.{ext}.
class AssetStore {
 public:
  explicit AssetStore(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const noexcept { return root_; }

  /// Node ids are arbitrary tokens; anything outside [A-Za-z0-9._-] is
  /// percent-encoded so an id can never escape the assets directory.
  static std::string path_component(std::string_view id) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : id) {
      if (std::isalnum(c) || c == '_' || c == '-' || (c == '.' && id != "." && id != "..")) {
        out += static_cast<char>(c);
      } else {
        out += '%';
        out += hex[c >> 4];
        out += hex[c & 15];
      }
    }
    return out;
  }

  static std::string relative_uri(const MediaAsset& asset, std::string_view ext) {
    return "assets/" + path_component(asset.node_id) + "/" + std::string(to_string(asset.kind)) + "-v" +
           std::to_string(asset.version) + "." + std::string(ext);
  }

  std::filesystem::path resolve(const std::string& uri) const { return root_ / uri; }

  void write(const std::string& uri, const std::string& payload) const {
    auto path = resolve(uri);
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    out.close();
    if (ec || !out) throw Error(ErrorCode::IOFailure, path.string(), "cannot write asset " + path.string());
  }

 private:
  std::filesystem::path root_;
};

inline std::string default_extension(MediaKind kind) {
  switch (kind) {
    case MediaKind::Audio: return "wav";
    case MediaKind::Image: return "png";
    case MediaKind::Video: return "mp4";
  }
  return "bin";
}

struct JobEvent {
  std::uint64_t sequence = 0;
  std::string job_id;
  std::string node_id;
  JobStatus status = JobStatus::Queued;
  std::int64_t timestamp_ms = 0;
  std::optional<std::string> error;
  std::optional<MediaAsset> asset;
};

/// Receives each finished generation and turns it into an attached asset.
/// Calls are serialized, so version numbers per (node, kind) never race.
using AssetCommit = std::function<MediaAsset(const MediaJob&, const BackendResponse&)>;
using JobObserver = std::function<void(const JobEvent&)>;

/// Commit that attaches to `graph` and, when `store` is given, writes the
/// payload to the asset's file.
inline AssetCommit commit_to_graph(StoryGraph& graph, const AssetStore* store = nullptr) {
  return [&graph, store](const MediaJob& job, const BackendResponse& response) {
    std::optional<double> duration;
    if (response.metadata.contains("duration_s") && response.metadata["duration_s"].is_number()) {
      duration = response.metadata["duration_s"].get<double>();
    }
    std::string ext = response.metadata.value("ext", default_extension(job.params.kind));
    auto asset = attach_asset(graph, job.node_id, job.params, duration,
                              [&](const MediaAsset& a) { return AssetStore::relative_uri(a, ext); });
    if (store) store->write(asset.uri, response.payload);
    return asset;
  };
}

/// Drains `jobs` with `worker_count` threads. Each job moves queued ->
/// running -> done|failed; a failure is recorded on the job and never stops
/// the others. The observer sees one event per transition, in a single
/// linear order. With one worker, jobs run in enqueue order.
inline void process_jobs(std::vector<MediaJob>& jobs, const GenerativeBackend& backend, int worker_count,
                         const AssetCommit& commit, const JobObserver& observer = {}) {
  std::mutex mutex;
  std::size_t next = 0;
  std::uint64_t sequence = 0;

  auto emit = [&](MediaJob& job, JobStatus to, std::optional<MediaAsset> asset = std::nullopt) {
    if (!is_legal_transition(job.status, to)) {
      throw std::logic_error("illegal job transition for " + job.job_id);
    }
    job.status = to;
    const auto stamp = now_ms();
    if (to == JobStatus::Running) {
      job.started_at = stamp;
    } else {
      job.finished_at = stamp;
    }
    if (observer) observer({++sequence, job.job_id, job.node_id, to, stamp, job.error, std::move(asset)});
  };

  auto worker = [&] {
    for (;;) {
      MediaJob* job = nullptr;
      {
        std::lock_guard lock(mutex);
        while (next < jobs.size() && jobs[next].status != JobStatus::Queued) ++next;
        if (next == jobs.size()) return;
        job = &jobs[next++];
        emit(*job, JobStatus::Running);
      }
      std::optional<BackendResponse> response;
      std::string failure;
      try {
        if (!backend.supports(capability_for(job->params.kind))) {
          throw Error(ErrorCode::BackendFailure, job->job_id,
                      "backend " + backend.name() + " cannot generate " + std::string(to_string(job->params.kind)));
        }
        response = backend.complete(media_request(*job));
      } catch (const std::exception& e) {
        failure = e.what();
      }
      std::lock_guard lock(mutex);
      if (response) {
        try {
          auto asset = commit(*job, *response);
          job->asset_id = asset.asset_id;
          emit(*job, JobStatus::Done, std::move(asset));
          continue;
        } catch (const std::exception& e) {
          failure = e.what();
        }
      }
      job->error = failure.empty() ? "unknown failure" : failure;
      emit(*job, JobStatus::Failed);
    }
  };

  const int count = std::max(1, worker_count);
  if (count == 1) {
    worker();
    return;
  }
  std::vector<std::jthread> threads;
  for (int i = 0; i < count; ++i) threads.emplace_back(worker);
}

/// Removes superseded versions. For each (node, kind) the current version
/// stays; when every version is stale, the newest one stays. Returns the
/// removed assets; their files are deleted when `store` is given.
inline std::vector<MediaAsset> prune_assets(StoryGraph& graph, const AssetStore* store = nullptr) {
  std::vector<MediaAsset> removed;
  for (auto& node : graph.nodes) {
    std::map<MediaKind, int> keep;
    for (const auto& asset : node.assets) {
      auto& best = keep[asset.kind];
      bool current = std::any_of(node.assets.begin(), node.assets.end(),
                                 [&](const MediaAsset& a) { return a.kind == asset.kind && !a.stale; });
      if (current ? !asset.stale : asset.version > best) best = asset.version;
    }
    std::vector<MediaAsset> kept;
    for (auto& asset : node.assets) {
      if (asset.version == keep[asset.kind]) {
        kept.push_back(std::move(asset));
      } else {
        removed.push_back(std::move(asset));
      }
    }
    node.assets = std::move(kept);
  }
  if (store) {
    for (const auto& asset : removed) {
      std::error_code ec;
      if (!asset.uri.empty()) std::filesystem::remove(store->resolve(asset.uri), ec);
    }
  }
  return removed;
}

// JSON forms used by the project manifest and the service.

inline ordered_json to_json(const MediaParams& params) {
  ordered_json out = {{"kind", to_string(params.kind)}, {"provider", params.provider}};
  if (params.voice) out["voice"] = *params.voice;
  if (params.style_instructions) out["style_instructions"] = *params.style_instructions;
  return out;
}

inline MediaParams media_params_from_json(const ordered_json& in) {
  if (!in.is_object()) throw Error(ErrorCode::SchemaViolation, "params", "media params must be an object");
  MediaParams params;
  auto kind = parse_media_kind(in.value("kind", ""));
  if (!kind) throw Error(ErrorCode::SchemaViolation, "params/kind", "kind must be audio, image or video");
  params.kind = *kind;
  params.provider = in.value("provider", "scripted");
  if (in.contains("voice") && in["voice"].is_string()) params.voice = in["voice"].get<std::string>();
  if (in.contains("style_instructions") && in["style_instructions"].is_string()) {
    params.style_instructions = in["style_instructions"].get<std::string>();
  }
  return params;
}

inline ordered_json to_json(const MediaAsset& asset) {
  ordered_json out = {{"asset_id", asset.asset_id}, {"node_id", asset.node_id}, {"kind", to_string(asset.kind)},
                      {"version", asset.version},   {"uri", asset.uri}};
  if (asset.duration_s) out["duration_s"] = *asset.duration_s;
  out["stale"] = asset.stale;
  out["params"] = to_json(asset.params);
  return out;
}

inline MediaAsset media_asset_from_json(const ordered_json& in) {
  MediaAsset asset;
  try {
    asset.asset_id = in.at("asset_id").get<std::string>();
    asset.node_id = in.at("node_id").get<std::string>();
    auto kind = parse_media_kind(in.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::SchemaViolation, "kind", "unknown media kind");
    asset.kind = *kind;
    asset.version = in.at("version").get<int>();
    asset.uri = in.at("uri").get<std::string>();
    if (in.contains("duration_s") && !in["duration_s"].is_null()) asset.duration_s = in["duration_s"].get<double>();
    asset.stale = in.value("stale", false);
    asset.params = media_params_from_json(in.at("params"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, "asset", e.what());
  }
  return asset;
}

inline ordered_json to_json(const MediaJob& job) {
  ordered_json out = {{"job_id", job.job_id},   {"node_id", job.node_id},
                      {"params", to_json(job.params)}, {"status", to_string(job.status)}};
  out["error"] = job.error ? ordered_json(*job.error) : ordered_json();
  out["asset_id"] = job.asset_id ? ordered_json(*job.asset_id) : ordered_json();
  out["prompt"] = job.prompt;
  out["context"] = job.context;
  out["submitted_at"] = job.submitted_at;
  out["started_at"] = job.started_at ? ordered_json(*job.started_at) : ordered_json();
  out["finished_at"] = job.finished_at ? ordered_json(*job.finished_at) : ordered_json();
  return out;
}

inline MediaJob media_job_from_json(const ordered_json& in) {
  MediaJob job;
  try {
    job.job_id = in.at("job_id").get<std::string>();
    job.node_id = in.at("node_id").get<std::string>();
    job.params = media_params_from_json(in.at("params"));
    auto status = parse_job_status(in.at("status").get<std::string>());
    if (!status) throw Error(ErrorCode::SchemaViolation, "status", "unknown job status");
    job.status = *status;
    auto optional_string = [&](const char* key) -> std::optional<std::string> {
      if (in.contains(key) && in[key].is_string()) return in[key].get<std::string>();
      return std::nullopt;
    };
    auto optional_int = [&](const char* key) -> std::optional<std::int64_t> {
      if (in.contains(key) && in[key].is_number_integer()) return in[key].get<std::int64_t>();
      return std::nullopt;
    };
    job.error = optional_string("error");
    job.asset_id = optional_string("asset_id");
    job.prompt = in.value("prompt", "");
    job.context = in.value("context", "");
    job.submitted_at = in.value("submitted_at", std::int64_t{0});
    job.started_at = optional_int("started_at");
    job.finished_at = optional_int("finished_at");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, "job", e.what());
  }
  return job;
}

inline ordered_json to_json(const JobEvent& event) {
  ordered_json out = {{"sequence", event.sequence},  {"job_id", event.job_id},
                      {"node_id", event.node_id},    {"status", to_string(event.status)},
                      {"timestamp_ms", event.timestamp_ms}};
  if (event.error) out["error"] = *event.error;
  if (event.asset) out["asset"] = to_json(*event.asset);
  return out;
}

}  // namespace storygraph
