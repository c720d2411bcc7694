#pragma once

#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "storygraph/graph.hpp"
#include "storygraph/validate.hpp"

namespace storygraph {

enum class ParseMode {
  Strict,   // unknown members are a SchemaViolation
  Lenient,  // unknown members are kept verbatim and re-serialized
};

namespace detail {

[[noreturn]] inline void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::SchemaViolation, path, what + " at " + path);
}

inline const ordered_json& member(const ordered_json& object, const char* key, const std::string& path) {
  auto it = object.find(key);
  if (it == object.end()) schema_error(path + "/" + key, "missing field");
  return *it;
}

inline std::string string_member(const ordered_json& object, const char* key, const std::string& path) {
  const auto& value = member(object, key, path);
  if (!value.is_string()) schema_error(path + "/" + key, "expected string");
  return value.get<std::string>();
}

inline double number_member(const ordered_json& object, const char* key, const std::string& path) {
  const auto& value = member(object, key, path);
  if (!value.is_number()) schema_error(path + "/" + key, "expected number");
  double number = value.get<double>();
  if (!std::isfinite(number)) schema_error(path + "/" + key, "expected finite number");
  return number;
}

inline const ordered_json& object_member(const ordered_json& object, const char* key, const std::string& path) {
  const auto& value = member(object, key, path);
  if (!value.is_object()) schema_error(path + "/" + key, "expected object");
  return value;
}

// Unknown members of `object` given its allowed keys. Strict mode rejects them.
inline ordered_json unknown_members(const ordered_json& object, std::initializer_list<std::string_view> allowed,
                                    const std::string& path, ParseMode mode) {
  ordered_json extra = ordered_json::object();
  for (auto it = object.begin(); it != object.end(); ++it) {
    bool known = false;
    for (auto key : allowed) known = known || it.key() == key;
    if (known) continue;
    if (mode == ParseMode::Strict) schema_error(path + "/" + it.key(), "unknown field \"" + it.key() + "\"");
    extra[it.key()] = it.value();
  }
  return extra;
}

inline ordered_json parse_json_text(std::string_view text) {
  // Track keys per open object so duplicate members are caught instead of
  // silently overwritten.
  std::vector<std::set<std::string>> open_objects;
  std::string duplicate;
  auto callback = [&](int, nlohmann::detail::parse_event_t event, ordered_json& parsed) {
    using nlohmann::detail::parse_event_t;
    switch (event) {
      case parse_event_t::object_start: open_objects.emplace_back(); break;
      case parse_event_t::object_end:
        if (!open_objects.empty()) open_objects.pop_back();
        break;
      case parse_event_t::key:
        if (!open_objects.empty() && !open_objects.back().insert(parsed.get<std::string>()).second &&
            duplicate.empty()) {
          duplicate = parsed.get<std::string>();
        }
        break;
      default: break;
    }
    return true;
  };
  ordered_json document;
  try {
    document = ordered_json::parse(text.begin(), text.end(), callback);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedDocument, "byte " + std::to_string(e.byte), e.what());
  }
  if (!duplicate.empty()) schema_error("\"" + duplicate + "\"", "duplicate member \"" + duplicate + "\"");
  return document;
}

inline void append_number(std::string& out, double value) {
  double integral = 0.0;
  if (std::modf(value, &integral) == 0.0 && std::fabs(value) < 9.0e15) {
    out += std::to_string(static_cast<long long>(value));
  } else {
    out += ordered_json(value).dump();
  }
}

inline void append_string(std::string& out, const std::string& value) {
  out += ordered_json(value).dump();
}

// Appends `,"key":value` for each extra member.
inline void append_extra(std::string& out, const ordered_json& extra) {
  for (auto it = extra.begin(); it != extra.end(); ++it) {
    out.push_back(',');
    append_string(out, it.key());
    out.push_back(':');
    out += it.value().dump();
  }
}

}  // namespace detail

/// Shape checks only; the result may still violate graph integrity.
inline StoryGraph graph_from_json_unchecked(const ordered_json& document, ParseMode mode = ParseMode::Strict) {
  using namespace detail;
  if (!document.is_object()) schema_error("", "expected a top-level object");
  StoryGraph graph;
  graph.extra_fields = unknown_members(document, {"nodes", "edges"}, "", mode);

  const auto& nodes = member(document, "nodes", "");
  if (!nodes.is_array()) schema_error("/nodes", "expected array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string path = "/nodes/" + std::to_string(i);
    const auto& item = nodes[i];
    if (!item.is_object()) schema_error(path, "expected object");
    StoryNode node;
    node.extra_fields = unknown_members(item, {"id", "data", "position"}, path, mode);
    node.id = string_member(item, "id", path);
    const auto& data = object_member(item, "data", path);
    node.extra_data_fields = unknown_members(data, {"label", "segment"}, path + "/data", mode);
    node.label = string_member(data, "label", path + "/data");
    node.segment = string_member(data, "segment", path + "/data");
    const auto& position = object_member(item, "position", path);
    node.extra_position_fields = unknown_members(position, {"x", "y"}, path + "/position", mode);
    node.position.x = number_member(position, "x", path + "/position");
    node.position.y = number_member(position, "y", path + "/position");
    graph.nodes.push_back(std::move(node));
  }

  const auto& edges = member(document, "edges", "");
  if (!edges.is_array()) schema_error("/edges", "expected array");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string path = "/edges/" + std::to_string(i);
    const auto& item = edges[i];
    if (!item.is_object()) schema_error(path, "expected object");
    StoryEdge edge;
    edge.extra_fields = unknown_members(item, {"id", "source", "target"}, path, mode);
    edge.id = string_member(item, "id", path);
    edge.source = string_member(item, "source", path);
    edge.target = string_member(item, "target", path);
    graph.edges.push_back(std::move(edge));
  }

  return graph;
}

/// Builds a graph from an already-parsed JSON value (used for documents
/// embedded in larger files). Same checks as parse_graph.
inline StoryGraph graph_from_json(const ordered_json& document, ParseMode mode = ParseMode::Strict) {
  auto graph = graph_from_json_unchecked(document, mode);
  require_valid(graph);
  return graph;
}

/// For reporting every integrity problem instead of the first failure.
inline StoryGraph parse_graph_unchecked(std::string_view text, ParseMode mode = ParseMode::Strict) {
  return graph_from_json_unchecked(detail::parse_json_text(text), mode);
}

/// Parses the story-graph document format (top-level "nodes" and "edges").
inline StoryGraph parse_graph(std::string_view text, ParseMode mode = ParseMode::Strict) {
  return graph_from_json(detail::parse_json_text(text), mode);
}

/// Emits the document with canonical key order, one node or edge per line.
/// Media assets and story context are not part of this format.
inline std::string serialize_graph(const StoryGraph& graph) {
  using namespace detail;
  std::string out = "{\"nodes\":[";
  if (!graph.nodes.empty()) out += "\n";
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const auto& node = graph.nodes[i];
    out += "{\"id\":";
    append_string(out, node.id);
    out += ",\"data\":{\"label\":";
    append_string(out, node.label);
    out += ",\"segment\":";
    append_string(out, node.segment);
    append_extra(out, node.extra_data_fields);
    out += "},\"position\":{\"x\":";
    append_number(out, node.position.x);
    out += ",\"y\":";
    append_number(out, node.position.y);
    append_extra(out, node.extra_position_fields);
    out += "}";
    append_extra(out, node.extra_fields);
    out += "}";
    out += (i + 1 < graph.nodes.size()) ? ",\n" : "\n";
  }
  out += "],";
  if (!graph.nodes.empty()) out += "\n";
  out += "\"edges\":[";
  if (!graph.edges.empty()) out += "\n";
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    const auto& edge = graph.edges[i];
    out += "{\"id\":";
    append_string(out, edge.id);
    out += ",\"source\":";
    append_string(out, edge.source);
    out += ",\"target\":";
    append_string(out, edge.target);
    append_extra(out, edge.extra_fields);
    out += "}";
    if (i + 1 < graph.edges.size()) out += ",\n";
  }
  out += "]";
  append_extra(out, graph.extra_fields);
  out += "}";
  return out;
}

inline ordered_json graph_to_json(const StoryGraph& graph) {
  return ordered_json::parse(serialize_graph(graph));
}

}  // namespace storygraph
