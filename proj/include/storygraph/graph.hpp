#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "storygraph/error.hpp"

namespace storygraph {

using ordered_json = nlohmann::ordered_json;

enum class MediaKind { Audio, Image, Video };

inline std::string_view to_string(MediaKind kind) {
  switch (kind) {
    case MediaKind::Audio: return "audio";
    case MediaKind::Image: return "image";
    case MediaKind::Video: return "video";
  }
  return "audio";
}

inline std::optional<MediaKind> parse_media_kind(std::string_view text) {
  if (text == "audio") return MediaKind::Audio;
  if (text == "image") return MediaKind::Image;
  if (text == "video") return MediaKind::Video;
  return std::nullopt;
}

struct MediaParams {
  MediaKind kind = MediaKind::Audio;
  std::string provider = "scripted";
  std::optional<std::string> voice;  // audio only
  std::optional<std::string> style_instructions;

  friend bool operator==(const MediaParams&, const MediaParams&) = default;
};

/// One generated version of a node's audio, image or video.
struct MediaAsset {
  std::string asset_id;
  std::string node_id;
  MediaKind kind = MediaKind::Audio;
  int version = 1;
  std::string uri;
  std::optional<double> duration_s;
  bool stale = false;
  MediaParams params;

  friend bool operator==(const MediaAsset&, const MediaAsset&) = default;
};

struct Position {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

struct StoryNode {
  std::string id;
  std::string label;
  std::string segment;
  Position position;
  std::vector<MediaAsset> assets;

  // Unknown members kept by lenient parsing, re-emitted after the canonical
  // keys of the object they were found in.
  ordered_json extra_fields = ordered_json::object();
  ordered_json extra_data_fields = ordered_json::object();
  ordered_json extra_position_fields = ordered_json::object();

  friend bool operator==(const StoryNode&, const StoryNode&) = default;
};

struct StoryEdge {
  std::string id;
  std::string source;
  std::string target;
  ordered_json extra_fields = ordered_json::object();

  friend bool operator==(const StoryEdge&, const StoryEdge&) = default;
};

struct StoryGraph {
  std::vector<StoryNode> nodes;
  std::vector<StoryEdge> edges;
  std::optional<std::string> story_context;
  ordered_json extra_fields = ordered_json::object();

  bool empty() const noexcept { return nodes.empty(); }

  const StoryNode* find_node(std::string_view id) const {
    auto it = std::find_if(nodes.begin(), nodes.end(),
                           [&](const StoryNode& n) { return n.id == id; });
    return it == nodes.end() ? nullptr : &*it;
  }

  StoryNode* find_node(std::string_view id) {
    auto it = std::find_if(nodes.begin(), nodes.end(),
                           [&](const StoryNode& n) { return n.id == id; });
    return it == nodes.end() ? nullptr : &*it;
  }

  bool contains(std::string_view id) const { return find_node(id) != nullptr; }

  bool has_edge(std::string_view source, std::string_view target) const {
    return std::any_of(edges.begin(), edges.end(), [&](const StoryEdge& e) {
      return e.source == source && e.target == target;
    });
  }

  friend bool operator==(const StoryGraph&, const StoryGraph&) = default;
};

enum class TopologyClass { Linear, Branching };

inline std::string_view to_string(TopologyClass topology) {
  return topology == TopologyClass::Linear ? "Linear" : "Branching";
}

inline std::optional<TopologyClass> parse_topology(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "linear") return TopologyClass::Linear;
  if (lower == "branching") return TopologyClass::Branching;
  return std::nullopt;
}

inline std::string edge_id(std::string_view source, std::string_view target) {
  std::string id = "e";
  id.append(source);
  id.push_back('-');
  id.append(target);
  return id;
}

/// Three-way comparison treating runs of digits as numbers, so "2" < "10".
inline int compare_natural(std::string_view a, std::string_view b) {
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (is_digit(a[i]) && is_digit(b[j])) {
      std::size_t i_end = i, j_end = j;
      while (i_end < a.size() && is_digit(a[i_end])) ++i_end;
      while (j_end < b.size() && is_digit(b[j_end])) ++j_end;
      std::size_t i_sig = i, j_sig = j;
      while (i_sig + 1 < i_end && a[i_sig] == '0') ++i_sig;
      while (j_sig + 1 < j_end && b[j_sig] == '0') ++j_sig;
      std::size_t i_len = i_end - i_sig, j_len = j_end - j_sig;
      if (i_len != j_len) return i_len < j_len ? -1 : 1;
      int cmp = a.substr(i_sig, i_len).compare(b.substr(j_sig, j_len));
      if (cmp != 0) return cmp < 0 ? -1 : 1;
      // equal value; fewer leading zeros first
      if ((i_end - i) != (j_end - j)) return (i_end - i) < (j_end - j) ? -1 : 1;
      i = i_end;
      j = j_end;
    } else {
      if (a[i] != b[j]) return static_cast<unsigned char>(a[i]) < static_cast<unsigned char>(b[j]) ? -1 : 1;
      ++i;
      ++j;
    }
  }
  if (i < a.size()) return 1;
  if (j < b.size()) return -1;
  return 0;
}

/// Smallest positive integer, as a decimal string, not already used as a node id.
inline std::string fresh_node_id(const StoryGraph& graph,
                                 const std::set<std::string>& also_taken = {}) {
  std::set<std::string> taken = also_taken;
  for (const auto& node : graph.nodes) taken.insert(node.id);
  for (std::uint64_t candidate = 1;; ++candidate) {
    std::string id = std::to_string(candidate);
    if (!taken.contains(id)) return id;
  }
}

inline std::unordered_map<std::string, std::size_t> node_index(const StoryGraph& graph) {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(graph.nodes.size());
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) index.emplace(graph.nodes[i].id, i);
  return index;
}

inline const StoryNode& require_node(const StoryGraph& graph, std::string_view id) {
  const StoryNode* node = graph.find_node(id);
  if (node == nullptr) {
    throw Error(ErrorCode::UnknownNode, std::string(id), "no node with id \"" + std::string(id) + "\"");
  }
  return *node;
}

}  // namespace storygraph
