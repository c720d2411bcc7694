#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "storygraph/graph.hpp"
#include "storygraph/layout.hpp"
#include "storygraph/topology.hpp"

namespace storygraph {

// Structural editing primitives. Each takes a graph by value and returns the
// edited copy; the input is never modified.

struct NodeInsertion {
  StoryGraph graph;
  std::string node_id;
};

inline NodeInsertion add_node(StoryGraph graph, std::string label, std::string segment,
                              const std::optional<std::string>& connect_from = std::nullopt,
                              const std::optional<std::string>& connect_to = std::nullopt) {
  GraphIndex index(graph);
  std::optional<std::size_t> from, to;
  if (connect_from) from = index.require(*connect_from);
  if (connect_to) to = index.require(*connect_to);
  if (from && to && (*from == *to || index.reachable_from(*to)[*from])) {
    throw Error(ErrorCode::WouldCreateCycle, *connect_to,
                "connecting " + *connect_from + " -> new -> " + *connect_to + " would create a cycle");
  }

  int layer = 0;
  if (from) {
    layer = layout::layer_of(graph.nodes[*from].position.x) + 1;
  } else if (to) {
    layer = std::max(0, layout::layer_of(graph.nodes[*to].position.x) - 1);
  } else if (!graph.empty()) {
    for (const auto& node : graph.nodes) layer = std::max(layer, layout::layer_of(node.position.x) + 1);
  }

  StoryNode node;
  node.id = fresh_node_id(graph);
  node.label = std::move(label);
  node.segment = std::move(segment);
  node.position = next_free_slot(graph, layer);
  const std::string id = node.id;
  graph.nodes.push_back(std::move(node));
  if (connect_from) graph.edges.push_back({edge_id(*connect_from, id), *connect_from, id});
  if (connect_to) graph.edges.push_back({edge_id(id, *connect_to), id, *connect_to});
  return {std::move(graph), id};
}

/// Replaces the named text fields of one node. Attached media stays but is
/// marked stale when the text actually changes.
inline StoryGraph update_node_text(StoryGraph graph, const std::string& id,
                                   const std::optional<std::string>& label,
                                   const std::optional<std::string>& segment) {
  StoryNode* node = graph.find_node(id);
  if (node == nullptr) throw Error(ErrorCode::UnknownNode, id, "no node with id \"" + id + "\"");
  if (label) node->label = *label;
  // media is generated from the segment, so only a new segment outdates it
  if (segment && *segment != node->segment) {
    node->segment = *segment;
    for (auto& asset : node->assets) asset.stale = true;
  }
  return graph;
}

inline StoryGraph move_node(StoryGraph graph, const std::string& id, Position position) {
  StoryNode* node = graph.find_node(id);
  if (node == nullptr) throw Error(ErrorCode::UnknownNode, id, "no node with id \"" + id + "\"");
  node->position = position;
  return graph;
}

/// Removes nodes and every edge touching them.
inline StoryGraph remove_nodes(StoryGraph graph, const std::vector<std::string>& ids) {
  if (ids.empty()) throw Error(ErrorCode::EmptySelection, "", "selection is empty");
  std::set<std::string> doomed;
  for (const auto& id : ids) {
    require_node(graph, id);
    doomed.insert(id);
  }
  std::erase_if(graph.nodes, [&](const StoryNode& n) { return doomed.contains(n.id); });
  std::erase_if(graph.edges,
                [&](const StoryEdge& e) { return doomed.contains(e.source) || doomed.contains(e.target); });
  return graph;
}

struct Duplication {
  StoryGraph graph;
  std::vector<std::pair<std::string, std::string>> mapping;  // original -> clone, stored order
};

/// Clones the selected nodes one branch row lower. Internal edges are cloned,
/// and edges entering the selection from outside are replicated onto the
/// clones so both versions hang from the same parents. Edges leaving the
/// selection are not cloned.
inline Duplication duplicate_subgraph(StoryGraph graph, const std::vector<std::string>& ids) {
  if (ids.empty()) throw Error(ErrorCode::EmptySelection, "", "selection is empty");
  std::set<std::string> selected;
  for (const auto& id : ids) {
    require_node(graph, id);
    selected.insert(id);
  }

  std::map<std::string, std::string> clone_of;
  std::vector<std::pair<std::string, std::string>> mapping;
  std::set<std::string> issued;
  std::vector<StoryNode> clones;
  for (const auto& node : graph.nodes) {
    if (!selected.contains(node.id)) continue;
    std::string fresh = fresh_node_id(graph, issued);
    issued.insert(fresh);
    clone_of[node.id] = fresh;
    mapping.emplace_back(node.id, fresh);

    StoryNode copy = node;
    copy.id = fresh;
    copy.position.y += layout::row_step;
    for (auto& asset : copy.assets) {
      asset.node_id = fresh;
      asset.asset_id = fresh + ":" + std::string(to_string(asset.kind)) + ":v" + std::to_string(asset.version);
    }
    clones.push_back(std::move(copy));
  }

  std::vector<StoryEdge> new_edges;
  for (const auto& edge : graph.edges) {
    if (!selected.contains(edge.target)) continue;
    const std::string target = clone_of.at(edge.target);
    const std::string source = selected.contains(edge.source) ? clone_of.at(edge.source) : edge.source;
    StoryEdge copy = edge;
    copy.id = edge_id(source, target);
    copy.source = source;
    copy.target = target;
    new_edges.push_back(std::move(copy));
  }

  for (auto& clone : clones) graph.nodes.push_back(std::move(clone));
  for (auto& edge : new_edges) graph.edges.push_back(std::move(edge));
  return {std::move(graph), std::move(mapping)};
}

}  // namespace storygraph
