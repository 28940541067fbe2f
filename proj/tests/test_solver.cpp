#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include <gtest/gtest.h>

#include "bethe_admm/datagen.hpp"
#include "bethe_admm/oracles.hpp"
#include "bethe_admm/solver.hpp"

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

SolverConfig quiet(double alpha = 0.05, double beta = 0.05)
{
  SolverConfig c;
  c.alpha = alpha;
  c.beta = beta;
  c.record_wall_time = false;
  return c;
}

// Max of <f, mu> over the local polytope of a binary triangle. Every vertex
// of that polytope is half-integral, so scanning all feasible points with
// entries in {0, 1/2, 1} finds the optimum.
double triangle_lp_optimum(const PairwiseMRF& m)
{
  const double grid[3] = {0.0, 0.5, 1.0};
  double best = -std::numeric_limits<double>::infinity();
  for (double p0 : grid)
    for (double p1 : grid)
      for (double p2 : grid) {
        const double p[3] = {p0, p1, p2};
        for (double r0 : grid)
          for (double r1 : grid)
            for (double r2 : grid) {
              const double r[3] = {r0, r1, r2};
              Pseudomarginal mu;
              for (double x : p)
                mu.node.push_back({1 - x, x});
              bool ok = true;
              for (index e = 0; e < 3; ++e) {
                const double a = p[m.edge(e).u], b = p[m.edge(e).v], c = r[e];
                const table t{1 - a - b + c, a - c, b - c, c};
                for (double x : t)
                  ok = ok && x >= 0;
                mu.edge.push_back(t);
              }
              if (ok)
                best = std::max(best, lp_objective(mu, m));
            }
      }
  return best;
}

} // namespace

TEST(InitState, UniformAndFeasible)
{
  const PairwiseMRF m = potts_grid3d(2, 2, 1, 2, 1.0, 1);
  const DecompositionPlan p = tree_cover(m);
  const SolverState s = init_state(p, quiet());
  for (const table& t : s.mu.node)
    EXPECT_EQ(t, (table{0.5, 0.5}));
  for (const table& t : s.mu.edge)
    EXPECT_EQ(t, table(4, 0.25));
  for (const Pseudomarginal& mt : s.m)
    for (const table& t : mt.edge)
      EXPECT_EQ(t, table(4, 0.25));
  EXPECT_EQ(polytope_violation(s.mu, m), 0.0);
  EXPECT_EQ(zero_sum_violation(s.lambda, p), 0.0);
}

TEST(BetheStep, ZeroCostIsFixedPoint)
{
  const PairwiseMRF m = zero_model({3, 3, 3}, {{0, 1}, {1, 2}, {0, 2}});
  const DecompositionPlan p = split_potentials(to_cost(m), tree_cover(m), {1.0, 1.0});
  const SolverState s = init_state(p, quiet());
  for (const TreeSubgraph& t : p.trees) {
    const Pseudomarginal next = bethe_step_m(s, t, quiet());
    for (const table& x : next.node)
      for (double v : x)
        EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
    for (const table& x : next.edge)
      for (double v : x)
        EXPECT_DOUBLE_EQ(v, 1.0 / 9.0);
  }
}

TEST(BetheStep, MatchesGridSearchOnSingleEdge)
{
  const PairwiseMRF m({2, 2}, {{0, 1}}, {{1, 0}, {0, 0}}, {table(4, 0.0)});
  const DecompositionPlan p = split_potentials(to_cost(m), edge_decomposition(m), {1.0});
  SolverConfig cfg = quiet(10.0, 0.05);
  const SolverState s = init_state(p, cfg);
  const Pseudomarginal next = bethe_step_m(s, p.trees[0], cfg);

  // Maximize <eta, m> + H(m) with eta = grad phi(uniform) - cost / alpha,
  // over edge tables q (node marginals are its row and column sums).
  const double edge_grad = 1.0 + std::log(0.25);
  const double cost_u[2] = {-1.0, 0.0};
  auto objective = [&](const double q[4]) {
    double g = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const double x = q[2 * a + b];
        g += x * (edge_grad - cost_u[a] / cfg.alpha) - x * std::log(x);
      }
    return g;
  };
  double c[3] = {0.25, 0.25, 0.25};
  double w = 0.25;
  for (int round = 0; round < 80; ++round) {
    double best = -std::numeric_limits<double>::infinity();
    double arg[3] = {c[0], c[1], c[2]};
    for (int i = -6; i <= 6; ++i)
      for (int j = -6; j <= 6; ++j)
        for (int k = -6; k <= 6; ++k) {
          const double q[4] = {c[0] + w * i / 6, c[1] + w * j / 6, c[2] + w * k / 6,
                               1 - (c[0] + w * i / 6) - (c[1] + w * j / 6) - (c[2] + w * k / 6)};
          if (std::min({q[0], q[1], q[2], q[3]}) <= 0)
            continue;
          const double g = objective(q);
          if (g > best) {
            best = g;
            std::copy(q, q + 3, arg);
          }
        }
    std::copy(arg, arg + 3, c);
    w *= 0.6;
  }
  const double q[4] = {c[0], c[1], c[2], 1 - c[0] - c[1] - c[2]};
  for (int a = 0; a < 4; ++a)
    EXPECT_NEAR(next.edge[0][a], q[a], 1e-7);
  EXPECT_NEAR(next.node[0][0], q[0] + q[1], 1e-7);
  // Label 0 has the lower cost, so it gains mass, by O(1/alpha).
  EXPECT_GT(next.node[0][0], 0.5);
  EXPECT_LT(next.node[0][0], 0.5 + 1.0 / cfg.alpha);
  EXPECT_NEAR(next.node[1][0], 0.5, 1e-12);
  EXPECT_LT(polytope_violation(next, p.trees[0]), 1e-9);
}

TEST(UpdateMu, MeansAndPassThrough)
{
  const PairwiseMRF m = zero_model({2, 2, 2}, {{0, 1}, {1, 2}});
  const DecompositionPlan p = split_potentials(m, edge_decomposition(m), {1.0, 1.0});
  SolverState s = init_state(p, quiet());
  // Node 1 is local index 1 in tree 0 and local index 0 in tree 1.
  s.m[0].node[1] = {0.6, 0.4};
  s.m[1].node[0] = {0.8, 0.2};
  s.m[0].node[0] = {0.9, 0.1};
  const Pseudomarginal mu = update_mu(s, p);
  EXPECT_NEAR(mu.node[1][0], 0.7, 1e-15);
  EXPECT_NEAR(mu.node[1][1], 0.3, 1e-15);
  EXPECT_EQ(mu.node[0], (table{0.9, 0.1}));
}

TEST(UpdateMu, SingleTreePlanIsExact)
{
  const PairwiseMRF m = random_tree_mrf(6, 3, 1.0, 4);
  const RunResult r = run(m, tree_cover(m), quiet());
  const Residuals res = residuals(r.state, split_potentials(to_cost(m), tree_cover(m), {1.0}), m);
  EXPECT_EQ(res.primal_residual_inf, 0.0);
  EXPECT_EQ(r.state.iter, 1u);
}

TEST(UpdateLambda, Examples)
{
  const PairwiseMRF m = zero_model({2, 2, 2}, {{0, 1}, {1, 2}});
  const DecompositionPlan p = split_potentials(m, edge_decomposition(m), {1.0, 1.0});
  SolverState s = init_state(p, quiet());
  s.m[0].node[1] = {0.6, 0.4};
  s.m[1].node[0] = {0.4, 0.6};
  s.mu = update_mu(s, p);
  std::vector<Pseudomarginal> lam = update_lambda(s, p, 1.0);
  EXPECT_NEAR(lam[0].node[1][0], 0.1, 1e-15);
  EXPECT_NEAR(lam[0].node[1][1], -0.1, 1e-15);
  EXPECT_EQ(zero_sum_violation(lam, p), 0.0);

  s = init_state(p, quiet());
  lam = update_lambda(s, p, 0.05);
  for (index t = 0; t < lam.size(); ++t)
    EXPECT_EQ(lam[t], s.lambda[t]);
}

TEST(Residuals, InitialState)
{
  const PairwiseMRF m = potts_grid3d(2, 2, 2, 3, 1.0, 5);
  const DecompositionPlan p = split_potentials(to_cost(m), tree_cover(m), std::vector<double>(tree_cover(m).trees.size(), 1.0));
  const Residuals r = residuals(init_state(p, quiet()), p, m);
  EXPECT_EQ(r.primal_residual_inf, 0.0);
  EXPECT_EQ(r.max_violation, 0.0);
}

TEST(DualBound, SingleTreeWithZeroDuals)
{
  const PairwiseMRF m = random_tree_mrf(8, 3, 1.0, 6);
  const DecompositionPlan p = split_potentials(to_cost(m), tree_cover(m), {1.0});
  const double bound = dual_bound(init_state(p, quiet()), p, m);
  // The tree's own tables hold -f in BFS order; negating them is exact.
  const TreeSubgraph& t = p.trees[0];
  TreeParameters f{t.theta_node, t.theta_edge};
  for (std::vector<table>* group : {&f.node, &f.edge})
    for (table& x : *group)
      for (double& v : x)
        v = -v;
  EXPECT_EQ(bound, max_product_map(t, f).value);
  // Enumeration sums in a different order.
  EXPECT_NEAR(bound, brute_force_map(m).value, 1e-12);
}

TEST(DualBound, TriangleBoundsLpOptimum)
{
  // Frustrated couplings make the local polytope loose.
  const PairwiseMRF m({2, 2, 2}, {{0, 1}, {0, 2}, {1, 2}}, {{0.1, 0}, {0, 0.2}, {0, 0}},
                      {{0, 1, 1, 0}, {0, 1, 1, 0}, {0, 1, 1, 0}});
  const double lp_star = triangle_lp_optimum(m);
  EXPECT_GT(lp_star, brute_force_map(m).value);
  SolverConfig cfg = quiet();
  cfg.tol = 0.0;
  cfg.max_iters = 400;
  index checked = 0;
  run(m, edge_decomposition(m), cfg, [&](const SolverState& s, const DecompositionPlan& p) {
    EXPECT_GE(dual_bound(s, p, m), lp_star - 1e-12);
    ++checked;
  });
  EXPECT_EQ(checked, 400u);
}

TEST(DualBound, TightOnTreesAtConvergence)
{
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PairwiseMRF m = random_tree_mrf(6, 2, 1.0, seed);
    SolverConfig cfg = quiet();
    cfg.tol = 1e-8;
    cfg.gap_tol = 1e-6;
    cfg.max_iters = 100000;
    const RunResult r = run(m, edge_decomposition(m), cfg);
    ASSERT_EQ(r.status, RunStatus::converged);
    EXPECT_NEAR(r.trace.back().dual_bound, r.trace.back().lp_objective, 1e-6);
  }
}

TEST(Run, ZeroPotentialsStopAfterOneIteration)
{
  const PairwiseMRF m = zero_model({2, 3, 2}, {{0, 1}, {1, 2}, {0, 2}});
  const RunResult r = run(m, edge_decomposition(m), quiet());
  EXPECT_EQ(r.status, RunStatus::converged);
  EXPECT_EQ(r.state.iter, 1u);
  ASSERT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.trace[0].lp_objective, 0.0);
  EXPECT_LT(r.trace[0].primal_residual, 1e-15);
  EXPECT_LT(r.trace[0].max_violation, 1e-15);
}

TEST(Run, RecoversMapOnRandomTrees)
{
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PairwiseMRF m = random_tree_mrf(8, 3, 1.0, 40 + seed);
    SolverConfig cfg = quiet();
    cfg.max_iters = 5000;
    const RunResult r = run(m, edge_decomposition(m), cfg);
    EXPECT_EQ(r.status, RunStatus::converged);
    EXPECT_EQ(r.value, brute_force_map(m).value);
  }
}

TEST(Run, AttractiveTriangle)
{
  const PairwiseMRF m({3, 3, 3}, {{0, 1}, {0, 2}, {1, 2}}, {{0.3, 0, 0}, {0, 0.2, 0}, {0, 0, 0.1}},
                      {{1, 0, 0, 0, 1, 0, 0, 0, 1}, {0.8, 0, 0, 0, 0.8, 0, 0, 0, 0.8}, {0.5, 0, 0, 0, 0.5, 0, 0, 0, 0.5}});
  const RunResult r = run(m, edge_decomposition(m), quiet());
  EXPECT_EQ(r.assignment[0], r.assignment[1]);
  EXPECT_EQ(r.assignment[1], r.assignment[2]);
  EXPECT_EQ(r.assignment, brute_force_map(m).labels);
}

TEST(Run, MaxItersReached)
{
  const PairwiseMRF m = potts_grid3d(3, 3, 1, 3, 1.0, 2);
  SolverConfig cfg = quiet();
  cfg.max_iters = 7;
  cfg.trace_every = 3;
  const RunResult r = run(m, tree_cover(m), cfg);
  EXPECT_EQ(r.status, RunStatus::max_iters_reached);
  ASSERT_EQ(r.trace.size(), 3u);
  EXPECT_EQ(r.trace.back().iter, 7u);
}

TEST(Run, ZeroSumDualsAndPositiveIterates)
{
  const PairwiseMRF m = potts_grid3d(3, 3, 2, 3, 1.0, 8);
  SolverConfig cfg = quiet();
  cfg.max_iters = 200;
  run(m, tree_cover(m), cfg, [&](const SolverState& s, const DecompositionPlan& p) {
    EXPECT_LT(zero_sum_violation(s.lambda, p), 1e-8);
    for (const TreeSubgraph& t : p.trees) {
      EXPECT_LT(polytope_violation(s.m[t.tree_id], t), 1e-8);
      for (const table& x : s.m[t.tree_id].edge)
        EXPECT_GT(*std::min_element(x.begin(), x.end()), 0.0);
    }
  });
}

TEST(Run, ThreadCountDoesNotChangeResults)
{
  const auto inst = tree_cross_graph(6, 15, 2, 3, 1.0, 3);
  SolverConfig cfg = quiet();
  cfg.max_iters = 60;
  cfg.trace_every = 5;
  cfg.threads = 1;
  const RunResult one = run(inst.mrf, inst.plan, cfg);
  for (std::size_t threads : {2, 3, 4}) {
    cfg.threads = threads;
    const RunResult r = run(inst.mrf, inst.plan, cfg);
    ASSERT_EQ(r.trace.size(), one.trace.size());
    for (index i = 0; i < r.trace.size(); ++i)
      EXPECT_EQ(std::memcmp(&r.trace[i], &one.trace[i], sizeof(TraceRow)), 0);
    EXPECT_EQ(r.state.mu, one.state.mu);
  }
}

TEST(Config, SafeAlphaAndValidation)
{
  const PairwiseMRF m = potts_grid3d(3, 1, 1, 2, 1.0, 1);
  const DecompositionPlan p = tree_cover(m);
  SolverConfig cfg = quiet(0.05, 0.05);
  EXPECT_EQ(effective_alpha(cfg, p), 0.05);
  cfg.safe_alpha = true;
  EXPECT_DOUBLE_EQ(effective_alpha(cfg, p), 0.05 * 25);
  EXPECT_DOUBLE_EQ(step_size_bound(3, 0.05), 1.25);

  cfg = quiet(-1.0);
  EXPECT_THROW(run(m, p, cfg), dimension_error);
  DecompositionPlan broken = p;
  broken.edge_membership[0].clear();
  EXPECT_THROW(run(m, broken, quiet()), cover_error);
}

} // namespace bethe
