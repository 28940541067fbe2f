#include <algorithm>
#include <string>

#include <gtest/gtest.h>

#include "bethe_admm/datagen.hpp"
#include "bethe_admm/decomposition.hpp"

namespace bethe {

namespace {

PairwiseMRF zero_model(std::vector<index> cards, std::vector<Edge> edges)
{
  std::vector<table> node, pair;
  for (index k : cards)
    node.push_back(table(k, 0.0));
  for (const Edge& e : edges)
    pair.push_back(table(cards[e.u] * cards[e.v], 0.0));
  return PairwiseMRF(std::move(cards), std::move(edges), std::move(node), std::move(pair));
}

PairwiseMRF triangle() { return zero_model({2, 2, 2}, {{0, 1}, {0, 2}, {1, 2}}); }

bool has_defect(const std::vector<std::string>& defects, const std::string& text)
{
  return std::find(defects.begin(), defects.end(), text) != defects.end();
}

} // namespace

TEST(EdgeDecomposition, Triangle)
{
  const DecompositionPlan p = edge_decomposition(triangle());
  ASSERT_EQ(p.trees.size(), 3u);
  for (const auto& holders : p.node_membership)
    EXPECT_EQ(holders.size(), 2u);
  EXPECT_TRUE(validate_cover(p, triangle()).empty());
}

TEST(EdgeDecomposition, Path)
{
  const PairwiseMRF m = zero_model({2, 2, 2}, {{0, 1}, {1, 2}});
  const DecompositionPlan p = edge_decomposition(m);
  ASSERT_EQ(p.trees.size(), 2u);
  EXPECT_EQ(p.node_membership[0].size(), 1u);
  EXPECT_EQ(p.node_membership[1].size(), 2u);
  EXPECT_EQ(p.node_membership[2].size(), 1u);
}

TEST(EdgeDecomposition, Grid)
{
  const PairwiseMRF m = potts_grid3d(2, 2, 2, 2, 1.0, 3);
  const DecompositionPlan p = edge_decomposition(m);
  EXPECT_EQ(p.trees.size(), 12u);
  EXPECT_TRUE(validate_cover(p, m).empty());
}

TEST(EdgeDecomposition, EdgelessAndIsolated)
{
  EXPECT_THROW(edge_decomposition(zero_model({2, 2}, {})), cover_error);
  const PairwiseMRF m = zero_model({2, 2, 2}, {{0, 1}});
  const DecompositionPlan p = edge_decomposition(m);
  ASSERT_EQ(p.trees.size(), 2u);
  EXPECT_EQ(p.trees[1].nodes, (std::vector<index>{2}));
  EXPECT_TRUE(validate_cover(p, m).empty());
}

TEST(TreeCover, TreeGraphIsOneTree)
{
  const PairwiseMRF m = random_tree_mrf(9, 2, 1.0, 5);
  const DecompositionPlan p = tree_cover(m);
  ASSERT_EQ(p.trees.size(), 1u);
  EXPECT_EQ(p.trees[0].edges.size(), 8u);
  EXPECT_TRUE(validate_cover(p, m).empty());
}

TEST(TreeCover, Triangle)
{
  const DecompositionPlan p = tree_cover(triangle());
  ASSERT_EQ(p.trees.size(), 2u);
  EXPECT_EQ(p.trees[0].edges.size(), 2u);
  EXPECT_EQ(p.trees[1].edges.size(), 1u);
  EXPECT_TRUE(validate_cover(p, triangle()).empty());
}

TEST(TreeCover, DisconnectedAndShuffled)
{
  const PairwiseMRF m = zero_model({2, 2, 2, 2, 2, 2}, {{0, 1}, {0, 2}, {1, 2}, {3, 4}});
  const DecompositionPlan p = tree_cover(m);
  ASSERT_EQ(p.trees.size(), 4u);
  EXPECT_EQ(p.trees[2].nodes, (std::vector<index>{3, 4}));
  EXPECT_EQ(p.trees[3].nodes, (std::vector<index>{5}));
  EXPECT_TRUE(validate_cover(p, m).empty());

  const PairwiseMRF g = potts_grid3d(3, 3, 2, 2, 1.0, 1);
  for (std::uint64_t seed : {0, 1, 2, 3})
    EXPECT_TRUE(validate_cover(tree_cover(g, seed), g).empty());
}

TEST(TreeCover, GeneratedTreeCrossGraph)
{
  const auto inst = tree_cross_graph(4, 15, 3, 3, 1.0, 7);
  EXPECT_TRUE(validate_cover(tree_cover(inst.mrf), inst.mrf).empty());
  EXPECT_TRUE(validate_cover(inst.plan, inst.mrf).empty());
  EXPECT_EQ(inst.plan.trees.size(), 4u);
}

TEST(ValidateCover, UncoveredEdge)
{
  DecompositionPlan p = edge_decomposition(triangle());
  p.edge_membership[1].clear();
  EXPECT_TRUE(has_defect(validate_cover(p, triangle()), "edge 1 uncovered"));
}

TEST(ValidateCover, Chord)
{
  const PairwiseMRF m = triangle();
  DecompositionPlan p = make_plan(m, {{{0, 1, 2}, {0, 1}}, {{1, 2}, {2}}});
  ASSERT_TRUE(validate_cover(p, m).empty());
  p.trees[0].edges.push_back(2);
  p.edge_membership[2].insert(p.edge_membership[2].begin(), Membership{0, 2});
  EXPECT_TRUE(has_defect(validate_cover(p, m), "tree 0 cyclic"));
}

TEST(ValidateCover, OtherDefects)
{
  const PairwiseMRF m = triangle();
  DecompositionPlan p = edge_decomposition(m);
  p.trees[0].edges.push_back(9);
  EXPECT_TRUE(has_defect(validate_cover(p, m), "tree 0 references nonexistent edge 9"));

  p = edge_decomposition(m);
  std::reverse(p.node_membership[0].begin(), p.node_membership[0].end());
  EXPECT_FALSE(validate_cover(p, m).empty());

  p = edge_decomposition(m);
  p.trees[0].nodes = {0};
  EXPECT_FALSE(validate_cover(p, m).empty());
}

TEST(MakeTree, RejectsNonTrees)
{
  const PairwiseMRF m = triangle();
  EXPECT_THROW(make_tree(m, 0, {0, 1, 2}, {0, 1, 2}), tree_error);
  EXPECT_THROW(make_tree(m, 0, {0, 1, 2}, {0}), tree_error);
  EXPECT_THROW(make_tree(m, 0, {0, 1}, {1}), tree_error);
}

TEST(SplitPotentials, TriangleEdgeDecomposition)
{
  const PairwiseMRF m({2, 2, 2}, {{0, 1}, {0, 2}, {1, 2}}, {{1, -1}, {1, -1}, {1, -1}},
                      {{1, 2, 3, 4}, {5, 6, 7, 8}, {0, 0, 1, 1}});
  const DecompositionPlan p = split_potentials(m, edge_decomposition(m), {1, 1, 1});
  for (const TreeSubgraph& t : p.trees) {
    for (const table& th : t.theta_node)
      EXPECT_EQ(th, (table{0.5, -0.5}));
    EXPECT_EQ(t.theta_edge[0], m.edge_potential(t.edges[0]));
  }
}

TEST(SplitPotentials, SingleTreeIsExact)
{
  const PairwiseMRF m = random_tree_mrf(7, 3, 1.0, 9);
  const DecompositionPlan p = split_potentials(m, tree_cover(m), {1.0});
  for (index i = 0; i < p.trees[0].size(); ++i)
    EXPECT_EQ(p.trees[0].theta_node[i], m.node_potential(p.trees[0].nodes[i]));
  for (index j = 0; j < p.trees[0].edges.size(); ++j)
    EXPECT_EQ(p.trees[0].theta_edge[j], m.edge_potential(p.trees[0].edges[j]));
}

TEST(SplitPotentials, ReconstructsWithUnequalWeights)
{
  const PairwiseMRF m = potts_grid3d(3, 3, 3, 3, 1.0, 2);
  DecompositionPlan p = tree_cover(m, 4);
  std::vector<double> rho;
  for (index i = 0; i < p.trees.size(); ++i)
    rho.push_back(0.5 + 0.25 * static_cast<double>(i % 5));
  p = split_potentials(m, p, rho);

  std::vector<table> node(m.num_nodes()), edge(m.num_edges());
  for (index u = 0; u < m.num_nodes(); ++u)
    node[u].assign(m.card(u), 0.0);
  for (index e = 0; e < m.num_edges(); ++e)
    edge[e].assign(m.edge_potential(e).size(), 0.0);
  for (const TreeSubgraph& t : p.trees) {
    for (index i = 0; i < t.size(); ++i)
      for (index a = 0; a < t.theta_node[i].size(); ++a)
        node[t.nodes[i]][a] += t.rho * t.theta_node[i][a];
    for (index j = 0; j < t.edges.size(); ++j)
      for (index a = 0; a < t.theta_edge[j].size(); ++a)
        edge[t.edges[j]][a] += t.rho * t.theta_edge[j][a];
  }
  for (index u = 0; u < m.num_nodes(); ++u)
    for (index a = 0; a < m.card(u); ++a)
      EXPECT_NEAR(node[u][a], m.node_potential(u)[a], 1e-12);
  for (index e = 0; e < m.num_edges(); ++e)
    for (index a = 0; a < edge[e].size(); ++a)
      EXPECT_NEAR(edge[e][a], m.edge_potential(e)[a], 1e-12);
}

TEST(SplitPotentials, ZeroWeightIsError)
{
  DecompositionPlan p = edge_decomposition(triangle());
  p.edge_membership[0].clear();
  EXPECT_THROW(split_potentials(triangle(), p, {1, 1, 1}), cover_error);
  EXPECT_THROW(split_potentials(triangle(), edge_decomposition(triangle()), {1, 0, 1}), dimension_error);
}

} // namespace bethe
