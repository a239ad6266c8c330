#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "shepherd/metrics.hpp"

namespace {

using namespace shepherd;

SwarmState lattice(int side, double spacing) {
  std::vector<Vec2> pos;
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) pos.push_back({c * spacing, r * spacing});
  return SwarmState(std::move(pos), {-10, -10});
}

// Union-find over raw pairwise distances; sorted component sizes.
std::vector<std::size_t> union_find_components(const SwarmState& s, SheepId t, double r) {
  const std::size_t n = s.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (i != t && j != t && distance(s.positions[i], s.positions[j]) < r) parent[find(i)] = find(j);
  std::map<std::size_t, std::size_t> count;
  for (std::size_t i = 0; i < n; ++i)
    if (i != t) ++count[find(i)];
  std::vector<std::size_t> sizes;
  for (auto& [_, c] : count) sizes.push_back(c);
  std::sort(sizes.begin(), sizes.end(), std::greater<>());
  return sizes;
}

TEST(InteractionGraph, StrictRadiusDropsEdgeAtR) {
  const SwarmState s({{0, 0}, {0.5, 0}, {1.0, 0}}, {5, 5});
  const auto g = interaction_graph(s, 1, 1.0);
  EXPECT_EQ(g.nodes, (std::vector<SheepId>{0, 2}));
  EXPECT_TRUE(g.edges.empty());
  EXPECT_DOUBLE_EQ(max_component_fraction(g), 0.5);
}

TEST(InteractionGraph, LatticeWithoutCornerIsConnected) {
  const auto s = lattice(5, 0.5);
  const auto g = interaction_graph(s, 0, 1.0);
  EXPECT_EQ(g.nodes.size(), 24u);
  EXPECT_EQ(component_sizes(g), std::vector<std::size_t>{24});
  EXPECT_EQ(max_component_fraction(g), 1.0);
}

TEST(InteractionGraph, TwoSheepLeavesSingleNode) {
  const SwarmState s({{0, 0}, {0.3, 0}}, {5, 5});
  const auto g = interaction_graph(s, 0, 1.0);
  EXPECT_EQ(g.nodes.size(), 1u);
  EXPECT_TRUE(g.edges.empty());
  EXPECT_EQ(max_component_fraction(g), 1.0);
}

TEST(MaxComponentFraction, TwoEqualHalves) {
  std::vector<Vec2> pos;
  for (int i = 0; i < 12; ++i) pos.push_back({0.5 * i, 0.0});
  for (int i = 0; i < 12; ++i) pos.push_back({0.5 * i, 50.0});
  pos.push_back({100, 100});  // target
  const SwarmState s(std::move(pos), {-5, -5});
  EXPECT_DOUBLE_EQ(max_component_fraction(interaction_graph(s, 24, 1.0)), 0.5);
}

TEST(MaxComponentFraction, EmptyGraphThrows) {
  EXPECT_THROW(max_component_fraction(InteractionGraph{}), std::invalid_argument);
}

TEST(IsSeparated, Cases) {
  EXPECT_TRUE(is_separated(SwarmState({{0, 0}, {1.0, 0}}, {5, 5}), 0, 1.0));
  EXPECT_FALSE(is_separated(SwarmState({{0, 0}, {0.99, 0}}, {5, 5}), 0, 1.0));
  EXPECT_TRUE(is_separated(SwarmState({{0, 0}}, {5, 5}), 0, 1.0));
}

TEST(GraphProperties, MatchesUnionFindAndPartitions) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  std::uniform_int_distribution<int> nn(2, 50);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = nn(rng);
    std::vector<Vec2> pos;
    for (int i = 0; i < n; ++i) pos.push_back({u(rng), u(rng)});
    const SwarmState s(std::move(pos), {-1, -1});
    const SheepId t = static_cast<SheepId>(trial % n);
    const auto g = interaction_graph(s, t, 1.0);
    const auto sizes = component_sizes(g);
    EXPECT_EQ(sizes, union_find_components(s, t, 1.0));
    EXPECT_EQ(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}), g.nodes.size());
    for (const auto& [i, j] : g.edges) {
      EXPECT_LT(i, j);
      EXPECT_LT(distance(s.positions[i], s.positions[j]), 1.0);
    }
  }
}

TEST(GraphProperties, AddingNearbySheepNeverShrinksLargestComponent) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 4.0), a(0.0, 2.0 * M_PI), rr(0.0, 0.99);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Vec2> pos;
    for (int i = 0; i < 20; ++i) pos.push_back({u(rng), u(rng)});
    pos.push_back({50, 50});  // target far away, id 20
    const SwarmState before(pos, {-1, -1});
    const std::size_t m0 = max_component_size(interaction_graph(before, 20, 1.0));
    const Vec2 anchor = pos[static_cast<std::size_t>(trial) % 20];
    const double ang = a(rng), rad = rr(rng);
    pos.push_back(anchor + Vec2{rad * std::cos(ang), rad * std::sin(ang)});
    const SwarmState after(pos, {-1, -1});
    EXPECT_GE(max_component_size(interaction_graph(after, 20, 1.0)), m0);
  }
}

}  // namespace
