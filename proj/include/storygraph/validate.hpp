#pragma once

#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "storygraph/graph.hpp"

namespace storygraph {

enum class ViolationKind {
  EmptyNodeId,
  DuplicateNodeId,
  DanglingEndpoint,
  SelfLoop,
  DuplicateEdge,
  NonCanonicalEdgeId,
  Cycle,
};

inline std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::EmptyNodeId: return "empty node id";
    case ViolationKind::DuplicateNodeId: return "duplicate id";
    case ViolationKind::DanglingEndpoint: return "dangling endpoint";
    case ViolationKind::SelfLoop: return "self-loop";
    case ViolationKind::DuplicateEdge: return "duplicate edge";
    case ViolationKind::NonCanonicalEdgeId: return "non-canonical edge id";
    case ViolationKind::Cycle: return "cycle";
  }
  return "violation";
}

struct Violation {
  ViolationKind kind;
  std::string subject;             // node or edge id
  std::vector<std::string> cycle;  // witness, first id repeated at the end
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<std::string> warnings;

  bool ok() const noexcept { return violations.empty(); }
};

namespace detail {

inline std::string join_ids(const std::vector<std::string>& ids, std::string_view sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i != 0) out.append(sep);
    out.append(ids[i]);
  }
  return out;
}

// Iterative three-colour DFS; returns one cycle or an empty vector.
inline std::vector<std::string> find_cycle(const std::vector<std::string>& ids,
                                           const std::vector<std::vector<std::size_t>>& succ) {
  enum class Colour { White, Grey, Black };
  std::vector<Colour> colour(ids.size(), Colour::White);
  std::vector<std::size_t> parent(ids.size(), ids.size());
  for (std::size_t start = 0; start < ids.size(); ++start) {
    if (colour[start] != Colour::White) continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{start, 0}};
    colour[start] = Colour::Grey;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < succ[node].size()) {
        std::size_t to = succ[node][next++];
        if (colour[to] == Colour::Grey) {
          std::vector<std::string> cycle;
          for (std::size_t v = node; v != to; v = parent[v]) cycle.push_back(ids[v]);
          cycle.push_back(ids[to]);
          std::reverse(cycle.begin(), cycle.end());
          cycle.push_back(ids[to]);
          return cycle;
        }
        if (colour[to] == Colour::White) {
          colour[to] = Colour::Grey;
          parent[to] = node;
          stack.emplace_back(to, 0);
        }
      } else {
        colour[node] = Colour::Black;
        stack.pop_back();
      }
    }
  }
  return {};
}

}  // namespace detail

/// Checks every node, edge and graph invariant. Violations are collected,
/// not thrown; at most one witness cycle is reported.
inline ValidationReport validate(const StoryGraph& graph) {
  ValidationReport report;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::string> ids;
  for (const auto& node : graph.nodes) {
    if (node.id.empty()) {
      report.violations.push_back({ViolationKind::EmptyNodeId, "", {}, "node id must be non-empty"});
      continue;
    }
    if (!index.emplace(node.id, ids.size()).second) {
      report.violations.push_back(
          {ViolationKind::DuplicateNodeId, node.id, {}, "duplicate id \"" + node.id + "\""});
      continue;
    }
    ids.push_back(node.id);
    if (node.segment.empty()) report.warnings.push_back("node \"" + node.id + "\" has an empty segment");
  }

  std::vector<std::vector<std::size_t>> succ(ids.size());
  std::vector<int> in_degree(ids.size(), 0);
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& edge : graph.edges) {
    bool dangling = false;
    for (const std::string* end : {&edge.source, &edge.target}) {
      if (!index.contains(*end)) {
        report.violations.push_back({ViolationKind::DanglingEndpoint, *end, {},
                                     "edge \"" + edge.id + "\" references missing node \"" + *end + "\""});
        dangling = true;
      }
    }
    if (edge.source == edge.target) {
      report.violations.push_back(
          {ViolationKind::SelfLoop, edge.id, {}, "edge \"" + edge.id + "\" is a self-loop"});
      continue;
    }
    if (!pairs.emplace(edge.source, edge.target).second) {
      report.violations.push_back({ViolationKind::DuplicateEdge, edge.id, {},
                                   "edge " + edge.source + "->" + edge.target + " appears more than once"});
      continue;
    }
    if (edge.id != edge_id(edge.source, edge.target)) {
      report.violations.push_back({ViolationKind::NonCanonicalEdgeId, edge.id, {},
                                   "edge id \"" + edge.id + "\" should be \"" +
                                       edge_id(edge.source, edge.target) + "\""});
    }
    if (dangling) continue;
    succ[index[edge.source]].push_back(index[edge.target]);
    ++in_degree[index[edge.target]];
  }

  auto cycle = detail::find_cycle(ids, succ);
  if (!cycle.empty()) {
    report.violations.push_back({ViolationKind::Cycle, cycle.front(), cycle,
                                 "cycle [" + detail::join_ids(cycle) + "]"});
  } else {
    std::size_t roots = std::count(in_degree.begin(), in_degree.end(), 0);
    if (roots > 1) {
      report.warnings.push_back("graph has " + std::to_string(roots) + " roots; export order between them is by canvas position");
    }
  }
  return report;
}

inline std::string describe(const ValidationReport& report) {
  std::string out;
  for (const auto& v : report.violations) {
    out += std::string(to_string(v.kind)) + " \"" + v.subject + "\": " + v.message + "\n";
  }
  return out;
}

/// Throws IntegrityViolation naming the first offending id when `graph` is invalid.
inline void require_valid(const StoryGraph& graph) {
  auto report = validate(graph);
  if (!report.ok()) {
    const auto& first = report.violations.front();
    std::string message;
    for (std::size_t i = 0; i < report.violations.size(); ++i) {
      if (i != 0) message += "; ";
      message += report.violations[i].message;
    }
    throw Error(ErrorCode::IntegrityViolation, first.subject, message);
  }
}

}  // namespace storygraph
