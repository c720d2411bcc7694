#pragma once

// Shared fixtures, generators and brute-force oracles for the test suites.
// Oracles here are written against plain adjacency data so they do not reuse
// the library's traversal code.

#include <stdlib.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "storygraph/graph.hpp"

#ifndef STORYGRAPH_TEST_DATA_DIR
#define STORYGRAPH_TEST_DATA_DIR "tests/data"
#endif

namespace storygraph::testing {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(STORYGRAPH_TEST_DATA_DIR) / name;
}

/// The blackout story document, verbatim, including its trailing newline.
inline std::string blackout_document() { return read_file(data_path("blackout_story.json")); }

inline std::string random_text(std::mt19937_64& rng, int max_words) {
  static const std::vector<std::string> words = {
      "the", "night", "lantern", "river", "\"quoted\"", "caf\xC3\xA9", "tab\tbed", "line\nbreak",
      "back\\slash", "storm", "ship", "door", "Elena's", "50%", "{brace}", "[x]"};
  std::uniform_int_distribution<int> count(0, max_words);
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  std::string out;
  for (int i = count(rng); i > 0; --i) {
    if (!out.empty()) out.push_back(' ');
    out += words[pick(rng)];
  }
  return out;
}

/// Random DAG: edges only go from lower to higher position in a random
/// permutation, so the result is acyclic. Ids are a shuffled mix of numeric
/// and word ids.
inline StoryGraph random_dag(std::mt19937_64& rng, int max_nodes, double edge_probability = 0.3,
                             bool allow_empty = false) {
  std::uniform_int_distribution<int> size_dist(allow_empty ? 0 : 1, max_nodes);
  const int n = size_dist(rng);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> coord(0, 40);

  StoryGraph graph;
  std::vector<std::string> ids(n);
  for (int i = 0; i < n; ++i) {
    ids[i] = coin(rng) < 0.8 ? std::to_string(i + 1) : "n" + std::to_string(i + 1);
  }
  for (int i = 0; i < n; ++i) {
    StoryNode node;
    node.id = ids[i];
    node.label = random_text(rng, 4);
    node.segment = random_text(rng, 12);
    node.position = {coord(rng) * 25.0 + (coin(rng) < 0.2 ? 0.5 : 0.0), coord(rng) * 25.0};
    graph.nodes.push_back(node);
  }
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (coin(rng) >= edge_probability) continue;
      const auto& s = ids[perm[a]];
      const auto& t = ids[perm[b]];
      graph.edges.push_back({edge_id(s, t), s, t});
    }
  }
  std::shuffle(graph.edges.begin(), graph.edges.end(), rng);
  return graph;
}

/// Adjacency matrix view used by the oracles.
struct Adjacency {
  std::vector<std::string> ids;
  std::vector<std::vector<bool>> edge;

  explicit Adjacency(const StoryGraph& graph) {
    std::map<std::string, std::size_t> at;
    for (const auto& node : graph.nodes) {
      at[node.id] = ids.size();
      ids.push_back(node.id);
    }
    edge.assign(ids.size(), std::vector<bool>(ids.size(), false));
    for (const auto& e : graph.edges) edge[at[e.source]][at[e.target]] = true;
  }
};

/// Linear iff |E| = |V| - 1, every in/out degree <= 1 and the undirected
/// graph is connected.
inline bool oracle_is_linear(const StoryGraph& graph) {
  Adjacency adj(graph);
  const std::size_t n = adj.ids.size();
  std::size_t edge_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t in = 0, out = 0;
    for (std::size_t j = 0; j < n; ++j) {
      out += adj.edge[i][j];
      in += adj.edge[j][i];
    }
    if (in > 1 || out > 1) return false;
    edge_count += out;
  }
  if (edge_count + 1 != n) return false;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t v) {
    return parent[v] == v ? v : parent[v] = find(parent[v]);
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (adj.edge[i][j]) parent[find(i)] = find(j);
  std::set<std::size_t> components;
  for (std::size_t i = 0; i < n; ++i) components.insert(find(i));
  return components.size() == 1;
}

/// All root-to-sink paths by recursive DFS over the adjacency matrix.
inline std::set<std::vector<std::string>> oracle_paths(const StoryGraph& graph) {
  Adjacency adj(graph);
  const std::size_t n = adj.ids.size();
  std::set<std::vector<std::string>> out;
  std::vector<std::string> current;
  std::function<void(std::size_t)> walk = [&](std::size_t v) {
    current.push_back(adj.ids[v]);
    bool sink = true;
    for (std::size_t w = 0; w < n; ++w) {
      if (adj.edge[v][w]) {
        sink = false;
        walk(w);
      }
    }
    if (sink) out.insert(current);
    current.pop_back();
  };
  for (std::size_t v = 0; v < n; ++v) {
    bool root = true;
    for (std::size_t u = 0; u < n; ++u) root = root && !adj.edge[u][v];
    if (root) walk(v);
  }
  return out;
}

/// Ancestor ids of `id` by transitive closure (Floyd-Warshall style).
inline std::set<std::string> oracle_ancestors(const StoryGraph& graph, const std::string& id) {
  Adjacency adj(graph);
  const std::size_t n = adj.ids.size();
  auto reach = adj.edge;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
  std::set<std::string> out;
  std::size_t target = std::find(adj.ids.begin(), adj.ids.end(), id) - adj.ids.begin();
  for (std::size_t i = 0; i < n; ++i)
    if (reach[i][target]) out.insert(adj.ids[i]);
  return out;
}

inline StoryGraph chain(const std::vector<std::string>& ids) {
  StoryGraph graph;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    StoryNode node;
    node.id = ids[i];
    node.label = "Beat " + ids[i];
    node.segment = "Segment " + ids[i] + ".";
    node.position = {50.0 + 300.0 * static_cast<double>(i), 50.0};
    graph.nodes.push_back(node);
    if (i > 0) graph.edges.push_back({edge_id(ids[i - 1], ids[i]), ids[i - 1], ids[i]});
  }
  return graph;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "storygraph-XXXXXX").string();
    if (!mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace storygraph::testing
