#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "storygraph/graph.hpp"

namespace storygraph {

namespace layout {
inline constexpr double origin = 50.0;
inline constexpr double column_step = 300.0;
inline constexpr double row_step = 500.0;
inline constexpr double convergence_y = 300.0;

inline double column_x(int layer) { return origin + column_step * layer; }
inline double row_y(int row) { return origin + row_step * row; }

/// Nearest layer for a canvas x coordinate (never negative).
inline int layer_of(double x) {
  return std::max(0, static_cast<int>(std::lround((x - origin) / column_step)));
}
}  // namespace layout

/// Assigns canvas positions to nodes grouped by layer. Parallel nodes stack
/// downwards one branch row apart; a lone node sits on the first row until
/// the story has branched, and on the convergence row afterwards.
inline std::map<std::string, Position> layout_positions(const std::vector<std::vector<std::string>>& layers) {
  std::map<std::string, Position> positions;
  bool branched = false;
  for (std::size_t layer = 0; layer < layers.size(); ++layer) {
    const auto& members = layers[layer];
    const double x = layout::column_x(static_cast<int>(layer));
    if (members.size() == 1) {
      positions[members.front()] = {x, branched ? layout::convergence_y : layout::origin};
      continue;
    }
    for (std::size_t row = 0; row < members.size(); ++row) {
      positions[members[row]] = {x, layout::row_y(static_cast<int>(row))};
    }
    branched = branched || members.size() > 1;
  }
  return positions;
}

/// Free slot for one new node in `layer`, given the nodes already on the canvas.
inline Position next_free_slot(const StoryGraph& graph, int layer) {
  const double x = layout::column_x(layer);
  bool branched = false;
  std::vector<double> used_y;
  std::map<int, int> column_sizes;
  for (const auto& node : graph.nodes) ++column_sizes[layout::layer_of(node.position.x)];
  for (const auto& [column, count] : column_sizes) {
    if (column < layer && count > 1) branched = true;
  }
  for (const auto& node : graph.nodes) {
    if (layout::layer_of(node.position.x) == layer) used_y.push_back(node.position.y);
  }
  if (used_y.empty()) return {x, branched ? layout::convergence_y : layout::origin};
  auto taken = [&](double y) {
    return std::any_of(used_y.begin(), used_y.end(), [y](double u) { return std::fabs(u - y) <= layout::row_step / 2; });
  };
  for (int row = 0;; ++row) {
    double y = layout::row_y(row);
    if (!taken(y)) return {x, y};
  }
}

}  // namespace storygraph
