#include <cmath>

#include <gtest/gtest.h>

#include "bethe_admm/datagen.hpp"
#include "bethe_admm/mrf.hpp"
#include "bethe_admm/oracles.hpp"
#include "bethe_admm/random.hpp"

namespace bethe {

namespace {

PairwiseMRF two_node()
{
  return PairwiseMRF({2, 2}, {{0, 1}}, {{1, 0}, {2, 0}}, {{0.5, 0, 0, 0}});
}

} // namespace

TEST(PairwiseMRF, CanonicalizesFlippedEdge)
{
  // Table for (1, 0) indexed [x_1 * 3 + x_0]; stored as (0, 1) indexed [x_0 * 2 + x_1].
  PairwiseMRF m({3, 2}, {{1, 0}}, {{0, 0, 0}, {0, 0}}, {{1, 2, 3, 4, 5, 6}});
  EXPECT_EQ(m.edge(0), (Edge{0, 1}));
  const table& t = m.edge_potential(0);
  for (index a = 0; a < 3; ++a)
    for (index b = 0; b < 2; ++b)
      EXPECT_EQ(t[a * 2 + b], 1.0 + static_cast<double>(b * 3 + a));
}

TEST(PairwiseMRF, RejectsBadInput)
{
  EXPECT_THROW(PairwiseMRF({2, 2}, {{0, 0}}, {{0, 0}, {0, 0}}, {{0, 0, 0, 0}}), dimension_error);
  EXPECT_THROW(PairwiseMRF({2, 2}, {{0, 1}, {1, 0}}, {{0, 0}, {0, 0}}, {{0, 0, 0, 0}, {0, 0, 0, 0}}),
               dimension_error);
  EXPECT_THROW(PairwiseMRF({2, 2}, {{0, 1}}, {{0, NAN}, {0, 0}}, {{0, 0, 0, 0}}), dimension_error);
  EXPECT_THROW(PairwiseMRF({2, 2}, {{0, 1}}, {{0, 0}, {0, 0}}, {{0, 0, 0}}), dimension_error);
  EXPECT_THROW(PairwiseMRF({2, 2}, {{0, 2}}, {{0, 0}, {0, 0}}, {{0, 0, 0, 0}}), dimension_error);
  EXPECT_THROW(PairwiseMRF({1}, {}, {{0}}, {}), dimension_error);
}

TEST(EvalAssignment, TwoNodeExample)
{
  EXPECT_DOUBLE_EQ(eval_assignment(two_node(), {0, 0}), 3.5);
}

TEST(EvalAssignment, ZeroPotentials)
{
  PairwiseMRF m({2, 3}, {{0, 1}}, {{0, 0}, {0, 0, 0}}, {table(6, 0.0)});
  EXPECT_EQ(eval_assignment(m, {1, 2}), 0.0);
}

TEST(EvalAssignment, MismatchNamesNode)
{
  try {
    eval_assignment(two_node(), {0, 5});
    FAIL();
  } catch (const dimension_error& e) {
    EXPECT_NE(std::string(e.what()).find("node 1"), std::string::npos);
  }
  EXPECT_THROW(eval_assignment(two_node(), {0}), dimension_error);
}

TEST(EvalAssignment, OracleArgmaxOnRandomTree)
{
  const PairwiseMRF m = random_tree_mrf(6, 3, 1.0, 11);
  const BruteForceMap best = brute_force_map(m);
  EXPECT_EQ(eval_assignment(m, best.labels), best.value);
}

TEST(ToCost, NegatesEntries)
{
  PairwiseMRF m({2}, {}, {{1, -2}}, {});
  EXPECT_EQ(to_cost(m).node_potential(0), (table{-1, 2}));
  PairwiseMRF z({2, 2}, {{0, 1}}, {{0, 0}, {0, 0}}, {table(4, 0.0)});
  EXPECT_EQ(eval_assignment(to_cost(z), {1, 0}), 0.0);
}

TEST(ToCost, NegatesScoreOnRandomModels)
{
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const PairwiseMRF m = random_tree_mrf({2, 3, 4, 2, 3}, 2.0, seed);
    Rng rng(seed + 1000);
    Assignment x(m.num_nodes());
    for (index u = 0; u < x.size(); ++u)
      x[u] = rng.below(m.card(u));
    EXPECT_EQ(eval_assignment(to_cost(m), x), -eval_assignment(m, x));
  }
}

TEST(LpObjective, IndicatorMatchesEval)
{
  const PairwiseMRF m = random_tree_mrf(5, 3, 1.0, 4);
  const Assignment x{2, 0, 1, 1, 0};
  EXPECT_NEAR(lp_objective(indicator_pseudomarginal(m, x), m), eval_assignment(m, x), 1e-12);
}

TEST(LpObjective, UniformOnTwoNode)
{
  EXPECT_DOUBLE_EQ(lp_objective(uniform_pseudomarginal(two_node()), two_node()), 1.625);
}

TEST(LpObjective, ShapeMismatch)
{
  Pseudomarginal mu = uniform_pseudomarginal(two_node());
  mu.edge.clear();
  EXPECT_THROW(lp_objective(mu, two_node()), dimension_error);
}

TEST(PolytopeViolation, Examples)
{
  Pseudomarginal mu = uniform_pseudomarginal(two_node());
  EXPECT_EQ(polytope_violation(mu, two_node()), 0.0);
  mu.node[0] = {0.6, 0.6};
  EXPECT_NEAR(polytope_violation(mu, two_node()), 0.2, 1e-15);
  mu = uniform_pseudomarginal(two_node());
  mu.edge[0][0] = -0.1;
  EXPECT_GE(polytope_violation(mu, two_node()), 0.1);
}

TEST(RoundSolution, ArgmaxAndTies)
{
  Pseudomarginal mu;
  mu.node = {{0.3, 0.7}, {0.5, 0.5}, {0.2, 0.4, 0.4}};
  EXPECT_EQ(round_solution(mu), (Assignment{1, 0, 1}));
  const PairwiseMRF m = random_tree_mrf(4, 3, 1.0, 2);
  const Assignment x{1, 2, 0, 2};
  EXPECT_EQ(round_solution(indicator_pseudomarginal(m, x)), x);
}

} // namespace bethe
