#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "shepherd/swarm.hpp"

namespace shepherd {

// Interaction network of the remaining swarm: every sheep except the target,
// adjacent iff strictly closer than R.
struct InteractionGraph {
  std::vector<SheepId> nodes;
  std::vector<std::pair<SheepId, SheepId>> edges;  // i < j
};

inline InteractionGraph interaction_graph(const SwarmState& state, SheepId t, double r) {
  state.check_id(t);
  InteractionGraph g;
  for (SheepId i = 0; i < state.size(); ++i) {
    if (i != t) g.nodes.push_back(i);
  }
  for (std::size_t a = 0; a < g.nodes.size(); ++a) {
    for (std::size_t b = a + 1; b < g.nodes.size(); ++b) {
      const SheepId i = g.nodes[a];
      const SheepId j = g.nodes[b];
      if (distance(state.positions[i], state.positions[j]) < r) g.edges.emplace_back(i, j);
    }
  }
  return g;
}

// Component sizes, largest first.
inline std::vector<std::size_t> component_sizes(const InteractionGraph& g) {
  if (g.nodes.empty()) return {};
  const SheepId max_id = *std::max_element(g.nodes.begin(), g.nodes.end());
  std::vector<std::vector<SheepId>> adj(max_id + 1);
  std::vector<char> present(max_id + 1, 0);
  for (SheepId n : g.nodes) present[n] = 1;
  for (const auto& [i, j] : g.edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }

  std::vector<char> seen(max_id + 1, 0);
  std::vector<std::size_t> sizes;
  std::vector<SheepId> stack;
  for (SheepId start : g.nodes) {
    if (seen[start]) continue;
    std::size_t size = 0;
    stack.push_back(start);
    seen[start] = 1;
    while (!stack.empty()) {
      const SheepId u = stack.back();
      stack.pop_back();
      ++size;
      for (SheepId v : adj[u]) {
        if (present[v] && !seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
    sizes.push_back(size);
  }
  std::sort(sizes.begin(), sizes.end(), std::greater<>());
  return sizes;
}

inline std::size_t max_component_size(const InteractionGraph& g) {
  const auto sizes = component_sizes(g);
  return sizes.empty() ? 0 : sizes.front();
}

inline double max_component_fraction(const InteractionGraph& g) {
  if (g.nodes.empty()) throw std::invalid_argument("interaction graph has no nodes");
  return static_cast<double>(max_component_size(g)) / static_cast<double>(g.nodes.size());
}

inline bool is_separated(const SwarmState& state, SheepId t, double r) {
  return neighbor_set(state, t, r).empty();
}

}  // namespace shepherd
