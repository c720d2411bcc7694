#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "storygraph/drafts.hpp"
#include "storygraph/graph_io.hpp"
#include "storygraph/media.hpp"
#include "storygraph/topology.hpp"
#include "storygraph/validate.hpp"

namespace storygraph {

/// What to export: everything, a node subset (kept in story order), or one
/// root-to-sink path taken verbatim.
struct ExportSelection {
  enum class Mode { All, Nodes, Path };
  Mode mode = Mode::All;
  std::vector<std::string> ids;

  static ExportSelection all() { return {}; }
  static ExportSelection nodes(std::vector<std::string> ids) { return {Mode::Nodes, std::move(ids)}; }
  static ExportSelection path(std::vector<std::string> ids) { return {Mode::Path, std::move(ids)}; }
};

inline bool is_story_path(const StoryGraph& graph, const std::vector<std::string>& path) {
  if (path.empty()) return false;
  GraphIndex index(graph);
  for (const auto& id : path) {
    if (!index.find(id)) return false;
  }
  if (!index.predecessors(*index.find(path.front())).empty()) return false;
  if (!index.successors(*index.find(path.back())).empty()) return false;
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (!graph.has_edge(path[i - 1], path[i])) return false;
  }
  return true;
}

inline std::vector<std::string> sequence_for_export(const StoryGraph& graph,
                                                    const ExportSelection& selection = ExportSelection::all()) {
  if (graph.empty()) throw Error(ErrorCode::EmptyGraph, "", "graph has no nodes");
  require_valid(graph);
  switch (selection.mode) {
    case ExportSelection::Mode::All: return topological_order(graph);
    case ExportSelection::Mode::Nodes: return topological_order(graph, selection.ids);
    case ExportSelection::Mode::Path:
      if (!is_story_path(graph, selection.ids)) {
        throw Error(ErrorCode::InvalidPath, text::join(selection.ids, ","),
                    "[" + text::join(selection.ids, ",") + "] is not a root-to-end path of the graph");
      }
      return selection.ids;
  }
  return {};
}

/// Full exports of branching stories concatenate the branches; callers show
/// this warning so the author can pick a path instead.
inline std::optional<std::string> export_warning(const StoryGraph& graph, const ExportSelection& selection) {
  if (selection.mode == ExportSelection::Mode::Path || graph.empty()) return std::nullopt;
  if (classify_topology(graph) != TopologyClass::Branching) return std::nullopt;
  return "story branches; exporting every branch one after another in story order (choose a path to export one "
         "storyline)";
}

inline constexpr double fallback_words_per_second = 2.5;
inline constexpr std::int64_t minimum_entry_ms = 1000;

struct ManifestEntry {
  std::string node_id;
  std::string label;
  std::string segment;
  std::vector<MediaAsset> assets;  // current asset per kind
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  bool estimated = false;  // no audio: duration from word count

  double start_s() const { return static_cast<double>(start_ms) / 1000.0; }
  double end_s() const { return static_cast<double>(end_ms) / 1000.0; }
};

// Times are kept in whole milliseconds so entries tile exactly and subtitle
// times equal manifest times.
struct ExportManifest {
  std::vector<ManifestEntry> entries;
  std::int64_t total_ms = 0;

  double total_duration_s() const { return static_cast<double>(total_ms) / 1000.0; }
};

inline std::int64_t estimated_duration_ms(std::string_view segment) {
  const double seconds = static_cast<double>(text::word_count(segment)) / fallback_words_per_second;
  return std::max(minimum_entry_ms, static_cast<std::int64_t>(std::llround(seconds * 1000.0)));
}

inline ExportManifest build_manifest(const StoryGraph& graph, const std::vector<std::string>& order) {
  if (order.empty()) throw Error(ErrorCode::EmptyOrder, "", "nothing to export");
  ExportManifest manifest;
  for (const auto& id : order) {
    const auto& node = require_node(graph, id);
    ManifestEntry entry{node.id, node.label, node.segment, current_assets(graph, id), manifest.total_ms, 0, true};
    std::int64_t duration = 0;
    for (const auto& asset : entry.assets) {
      if (asset.kind == MediaKind::Audio && asset.duration_s && *asset.duration_s > 0) {
        duration = std::max<std::int64_t>(1, std::llround(*asset.duration_s * 1000.0));
        entry.estimated = false;
      }
    }
    if (entry.estimated) duration = estimated_duration_ms(node.segment);
    entry.end_ms = entry.start_ms + duration;
    manifest.total_ms = entry.end_ms;
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

/// HH:MM:SS,mmm
inline std::string srt_timestamp(std::int64_t ms) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%02lld:%02lld:%02lld,%03lld", static_cast<long long>(ms / 3600000),
                static_cast<long long>(ms / 60000 % 60), static_cast<long long>(ms / 1000 % 60),
                static_cast<long long>(ms % 1000));
  return buffer;
}

/// Cue text may not contain blank lines (they end a cue).
inline std::string subtitle_text(const ManifestEntry& entry) {
  std::vector<std::string> lines;
  for (const auto& line : text::split(entry.segment, '\n')) {
    auto trimmed = text::trim(line);
    if (!trimmed.empty()) lines.push_back(trimmed);
  }
  if (lines.empty()) lines.push_back(text::trim(entry.label).empty() ? entry.node_id : text::trim(entry.label));
  return text::join(lines, "\n");
}

inline std::string render_srt(const ExportManifest& manifest) {
  std::string out;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& entry = manifest.entries[i];
    if (i > 0) out += '\n';
    out += std::to_string(i + 1) + "\n" + srt_timestamp(entry.start_ms) + " --> " + srt_timestamp(entry.end_ms) +
           "\n" + subtitle_text(entry) + "\n";
  }
  return out;
}

inline ordered_json manifest_to_json(const ExportManifest& manifest) {
  ordered_json entries = ordered_json::array();
  for (const auto& entry : manifest.entries) {
    ordered_json assets = ordered_json::object();
    for (const auto& asset : entry.assets) {
      ordered_json ref = {{"asset_id", asset.asset_id}, {"version", asset.version}, {"uri", asset.uri}};
      if (asset.duration_s) ref["duration_s"] = *asset.duration_s;
      assets[std::string(to_string(asset.kind))] = std::move(ref);
    }
    entries.push_back({{"node_id", entry.node_id},
                       {"label", entry.label},
                       {"segment", entry.segment},
                       {"assets", std::move(assets)},
                       {"start_s", entry.start_s()},
                       {"end_s", entry.end_s()},
                       {"duration_estimated", entry.estimated}});
  }
  return entries;
}

inline std::string format_seconds(std::int64_t ms) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%lld.%03lld s", static_cast<long long>(ms / 1000),
                static_cast<long long>(ms % 1000));
  return buffer;
}

/// Markdown storyboard: one section per node in export order.
inline std::string export_storyboard(const StoryGraph& graph, const std::vector<std::string>& order) {
  auto manifest = build_manifest(graph, order);
  std::string out = "# Storyboard\n\n";
  out += std::to_string(manifest.entries.size()) + " scenes, " + format_seconds(manifest.total_ms) + "\n";
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& entry = manifest.entries[i];
    auto asset_line = [&](MediaKind kind) {
      for (const auto& asset : entry.assets) {
        if (asset.kind == kind) return asset.uri.empty() ? asset.asset_id : asset.uri;
      }
      return std::string("(none)");
    };
    out += "\n## " + std::to_string(i + 1) + ". " + detail::flatten_field(entry.label) + "\n\n";
    out += "- Node: " + entry.node_id + "\n";
    out += "- Time: " + srt_timestamp(entry.start_ms) + " to " + srt_timestamp(entry.end_ms) + "\n";
    out += "- Duration: " + format_seconds(entry.end_ms - entry.start_ms) + (entry.estimated ? " (estimated)" : "") +
           "\n";
    out += "- Image: " + asset_line(MediaKind::Image) + "\n";
    out += "- Audio: " + asset_line(MediaKind::Audio) + "\n";
    out += "- Video: " + asset_line(MediaKind::Video) + "\n\n";
    out += text::trim(entry.segment) + "\n";
  }
  return out;
}

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (ec || !out) throw Error(ErrorCode::IOFailure, path.string(), "cannot write " + path.string());
}

}  // namespace detail

/// Writes graph.json, subtitles.srt, storyboard.md and manifest.json into
/// `destination`, and copies each referenced current asset from
/// `asset_root` to the same relative path. Returns the relative paths
/// written. Missing asset files are reported before anything is written.
inline std::vector<std::string> export_bundle(const StoryGraph& graph, const std::vector<std::string>& order,
                                              const std::filesystem::path& destination,
                                              const std::filesystem::path& asset_root) {
  auto manifest = build_manifest(graph, order);
  std::set<std::string> uris;
  for (const auto& entry : manifest.entries) {
    for (const auto& asset : entry.assets) {
      if (asset.uri.empty()) continue;
      auto source = asset_root / asset.uri;
      if (!std::filesystem::is_regular_file(source)) {
        throw Error(ErrorCode::MissingAsset, source.string(), "asset file " + source.string() + " is missing");
      }
      uris.insert(asset.uri);
    }
  }

  std::vector<std::string> inventory = {"graph.json", "subtitles.srt", "storyboard.md", "manifest.json"};
  detail::write_text_file(destination / "graph.json", serialize_graph(graph) + "\n");
  detail::write_text_file(destination / "subtitles.srt", render_srt(manifest));
  detail::write_text_file(destination / "storyboard.md", export_storyboard(graph, order));
  detail::write_text_file(destination / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");
  for (const auto& uri : uris) {
    auto target = destination / uri;
    std::error_code ec;
    std::filesystem::create_directories(target.parent_path(), ec);
    std::filesystem::copy_file(asset_root / uri, target, std::filesystem::copy_options::overwrite_existing, ec);
    if (ec) throw Error(ErrorCode::IOFailure, target.string(), "cannot copy asset: " + ec.message());
    inventory.push_back(uri);
  }
  return inventory;
}

}  // namespace storygraph
