#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "storygraph/graph.hpp"

namespace storygraph {

/// Adjacency view over a valid graph, by stored node index.
class GraphIndex {
 public:
  explicit GraphIndex(const StoryGraph& graph)
      : graph_(&graph), index_(node_index(graph)), succ_(graph.nodes.size()), pred_(graph.nodes.size()) {
    for (const auto& edge : graph.edges) {
      auto s = index_.find(edge.source);
      auto t = index_.find(edge.target);
      if (s == index_.end() || t == index_.end()) continue;
      succ_[s->second].push_back(t->second);
      pred_[t->second].push_back(s->second);
    }
  }

  std::size_t size() const noexcept { return succ_.size(); }
  const StoryNode& node(std::size_t i) const { return graph_->nodes[i]; }
  const std::string& id(std::size_t i) const { return graph_->nodes[i].id; }
  const std::vector<std::size_t>& successors(std::size_t i) const { return succ_[i]; }
  const std::vector<std::size_t>& predecessors(std::size_t i) const { return pred_[i]; }

  std::optional<std::size_t> find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t require(const std::string& id) const {
    auto found = find(id);
    if (!found) throw Error(ErrorCode::UnknownNode, id, "no node with id \"" + id + "\"");
    return *found;
  }

  /// Canvas tie-break: left to right, then top to bottom, then numeric-aware id.
  bool precedes(std::size_t a, std::size_t b) const {
    const auto& na = node(a);
    const auto& nb = node(b);
    if (na.position.x != nb.position.x) return na.position.x < nb.position.x;
    if (na.position.y != nb.position.y) return na.position.y < nb.position.y;
    int cmp = compare_natural(na.id, nb.id);
    if (cmp != 0) return cmp < 0;
    return a < b;
  }

  std::vector<std::size_t> sorted_by_tie_break(std::vector<std::size_t> nodes) const {
    std::sort(nodes.begin(), nodes.end(), [this](std::size_t a, std::size_t b) { return precedes(a, b); });
    return nodes;
  }

  /// Indices reachable from `start` (excluding `start`) walking successors.
  std::vector<bool> reachable_from(std::size_t start) const {
    std::vector<bool> seen(size(), false);
    std::vector<std::size_t> stack{start};
    while (!stack.empty()) {
      std::size_t v = stack.back();
      stack.pop_back();
      for (std::size_t w : succ_[v]) {
        if (!seen[w]) {
          seen[w] = true;
          stack.push_back(w);
        }
      }
    }
    return seen;
  }

  /// Indices of every ancestor of `target` (excluding `target`).
  std::vector<bool> ancestors_of(std::size_t target) const {
    std::vector<bool> seen(size(), false);
    std::vector<std::size_t> stack{target};
    while (!stack.empty()) {
      std::size_t v = stack.back();
      stack.pop_back();
      for (std::size_t w : pred_[v]) {
        if (!seen[w]) {
          seen[w] = true;
          stack.push_back(w);
        }
      }
    }
    return seen;
  }

 private:
  const StoryGraph* graph_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> succ_;
  std::vector<std::vector<std::size_t>> pred_;
};

inline std::vector<std::string> roots(const StoryGraph& graph) {
  GraphIndex index(graph);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index.predecessors(i).empty()) out.push_back(index.id(i));
  }
  return out;
}

inline std::vector<std::string> sinks(const StoryGraph& graph) {
  GraphIndex index(graph);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index.successors(i).empty()) out.push_back(index.id(i));
  }
  return out;
}

inline TopologyClass classify_topology(const StoryGraph& graph) {
  if (graph.empty()) throw Error(ErrorCode::EmptyGraph, "", "cannot classify an empty graph");
  GraphIndex index(graph);
  const std::size_t n = index.size();
  if (graph.edges.size() + 1 != n) return TopologyClass::Branching;
  std::size_t root_count = 0, sink_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (index.successors(i).size() > 1 || index.predecessors(i).size() > 1) return TopologyClass::Branching;
    root_count += index.predecessors(i).empty();
    sink_count += index.successors(i).empty();
  }
  // n-1 edges with all degrees <= 1 forms a single chain exactly when it
  // has one root and one sink (an acyclic union of paths).
  return (root_count == 1 && sink_count == 1) ? TopologyClass::Linear : TopologyClass::Branching;
}

namespace detail {

inline std::vector<std::size_t> topological_indices(const GraphIndex& index) {
  const std::size_t n = index.size();
  std::vector<std::size_t> in_degree(n);
  for (std::size_t i = 0; i < n; ++i) in_degree[i] = index.predecessors(i).size();
  auto later = [&index](std::size_t a, std::size_t b) { return index.precedes(b, a); };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(later)> ready(later);
  for (std::size_t i = 0; i < n; ++i) {
    if (in_degree[i] == 0) ready.push(i);
  }
  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    std::size_t v = ready.top();
    ready.pop();
    order.push_back(v);
    for (std::size_t w : index.successors(v)) {
      if (--in_degree[w] == 0) ready.push(w);
    }
  }
  if (order.size() != n) throw Error(ErrorCode::IntegrityViolation, "", "graph contains a cycle");
  return order;
}

}  // namespace detail

/// Kahn's algorithm; among simultaneously ready nodes the canvas tie-break
/// decides. With a selection the full order is restricted to the selected ids,
/// which keeps every reachability relation between them.
inline std::vector<std::string> topological_order(const StoryGraph& graph,
                                                  const std::optional<std::vector<std::string>>& selection = std::nullopt) {
  if (graph.empty()) throw Error(ErrorCode::EmptyGraph, "", "graph has no nodes");
  GraphIndex index(graph);
  std::vector<bool> keep(index.size(), !selection.has_value());
  if (selection) {
    if (selection->empty()) throw Error(ErrorCode::EmptySelection, "", "selection is empty");
    for (const auto& id : *selection) keep[index.require(id)] = true;
  }
  std::vector<std::string> out;
  for (std::size_t i : detail::topological_indices(index)) {
    if (keep[i]) out.push_back(index.id(i));
  }
  return out;
}

/// Every root-to-sink path; roots and successors visited in tie-break order.
inline std::vector<std::vector<std::string>> enumerate_paths(const StoryGraph& graph) {
  if (graph.empty()) throw Error(ErrorCode::EmptyGraph, "", "graph has no nodes");
  GraphIndex index(graph);
  std::vector<std::vector<std::size_t>> ordered_succ(index.size());
  std::vector<std::size_t> root_nodes;
  for (std::size_t i = 0; i < index.size(); ++i) {
    ordered_succ[i] = index.sorted_by_tie_break(index.successors(i));
    if (index.predecessors(i).empty()) root_nodes.push_back(i);
  }
  root_nodes = index.sorted_by_tie_break(root_nodes);

  std::vector<std::vector<std::string>> paths;
  std::vector<std::size_t> current;
  // explicit stack of (node, next successor position)
  for (std::size_t root : root_nodes) {
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    current.assign(1, root);
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (ordered_succ[node].empty()) {
        std::vector<std::string> path;
        path.reserve(current.size());
        for (std::size_t v : current) path.push_back(index.id(v));
        paths.push_back(std::move(path));
      }
      if (next < ordered_succ[node].size()) {
        std::size_t child = ordered_succ[node][next++];
        stack.emplace_back(child, 0);
        current.push_back(child);
      } else {
        stack.pop_back();
        current.pop_back();
      }
    }
  }
  return paths;
}

/// Layer index per node (by stored index): one more than the deepest
/// predecessor. A root that is not the first node continues after the node
/// stored just before it, unless that node descends from it; this keeps
/// narrative order for stories whose later beats lack an incoming edge.
inline std::vector<int> layer_indices(const StoryGraph& graph) {
  GraphIndex index(graph);
  const std::size_t n = index.size();
  std::vector<std::vector<std::size_t>> extra_pred(n);
  for (std::size_t i = 1; i < n; ++i) {
    if (!index.predecessors(i).empty()) continue;
    if (index.reachable_from(i)[i - 1]) continue;
    extra_pred[i].push_back(i - 1);
  }
  // longest path over edges plus the narrative links, in an order valid for both
  std::vector<std::vector<std::size_t>> succ(n);
  std::vector<std::size_t> in_degree(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t w : index.successors(i)) {
      succ[i].push_back(w);
      ++in_degree[w];
    }
    for (std::size_t p : extra_pred[i]) {
      succ[p].push_back(i);
      ++in_degree[i];
    }
  }
  std::vector<int> layer(n, 0);
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_degree[i] == 0) ready.push_back(i);
  }
  std::size_t processed = 0;
  while (!ready.empty()) {
    std::size_t v = ready.back();
    ready.pop_back();
    ++processed;
    for (std::size_t w : succ[v]) {
      layer[w] = std::max(layer[w], layer[v] + 1);
      if (--in_degree[w] == 0) ready.push_back(w);
    }
  }
  if (processed != n) {
    // A narrative link closed a cycle through several roots; fall back to pure edges.
    std::fill(layer.begin(), layer.end(), 0);
    for (std::size_t v : detail::topological_indices(index)) {
      for (std::size_t w : index.successors(v)) layer[w] = std::max(layer[w], layer[v] + 1);
    }
  }
  return layer;
}

}  // namespace storygraph
