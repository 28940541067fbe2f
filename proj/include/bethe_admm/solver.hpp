#ifndef BETHE_ADMM_SOLVER_HPP
#define BETHE_ADMM_SOLVER_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "decomposition.hpp"
#include "mrf.hpp"
#include "parallel.hpp"
#include "tree_inference.hpp"

namespace bethe {

struct SolverConfig {
  double alpha = 0.05;         // proximal weight on the Bethe divergence
  double beta = 0.05;          // consensus penalty
  double rho = 1.0;            // weight shared by all trees
  std::size_t max_iters = 10000;
  double tol = 1e-3;           // on max(primal residual, polytope violation)
  double gap_tol = 0.0;        // if > 0, also require |dual_bound - lp_objective| <= gap_tol
  std::size_t threads = 1;
  bool safe_alpha = false;     // raise alpha to beta * max (2 n_tau - 1)^2
  std::size_t trace_every = 10;
  bool record_wall_time = true;
};

inline void check_config(const SolverConfig& c)
{
  auto positive = [](double x) { return x > 0.0 && std::isfinite(x); };
  if (!positive(c.alpha) || !positive(c.beta) || !positive(c.rho))
    throw dimension_error("alpha, beta and rho must be positive");
  if (!(c.tol >= 0.0) || !(c.gap_tol >= 0.0))
    throw dimension_error("tol and gap_tol must be nonnegative");
  if (c.trace_every == 0)
    throw dimension_error("trace_every must be at least 1");
}

/// Smallest alpha for which the Bethe divergence dominates the quadratic
/// consensus term on a tree with `tree_size` nodes.
inline double step_size_bound(index tree_size, double beta)
{
  const double w = 2.0 * static_cast<double>(tree_size) - 1.0;
  return beta * w * w;
}

inline double effective_alpha(const SolverConfig& c, const DecompositionPlan& plan)
{
  if (!c.safe_alpha)
    return c.alpha;
  double alpha = c.alpha;
  for (const TreeSubgraph& t : plan.trees)
    alpha = std::max(alpha, step_size_bound(t.size(), c.beta));
  return alpha;
}

/// Iterates of the splitting method. m and lambda are per tree in local
/// layout; mu is on the whole graph. The ergodic sums hold iterates
/// 0 .. sum_count-1.
struct SolverState {
  std::vector<Pseudomarginal> m;
  std::vector<Pseudomarginal> lambda;
  Pseudomarginal mu;
  std::size_t iter = 0;

  std::vector<Pseudomarginal> m_sum;
  Pseudomarginal mu_sum;
  std::size_t sum_count = 0;

  Assignment best;
  double best_value = -std::numeric_limits<double>::infinity();
};

struct TraceRow {
  std::size_t iter = 0;
  double seconds = 0.0;
  double lp_objective = 0.0;
  double decoded_value = 0.0;
  double max_violation = 0.0;
  double primal_residual = 0.0;
  double dual_bound = 0.0;
  double ergodic_consensus = 0.0;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

using IterationTrace = std::vector<TraceRow>;

enum class RunStatus { converged, max_iters_reached };

struct RunResult {
  SolverState state;
  IterationTrace trace;
  RunStatus status = RunStatus::max_iters_reached;
  Assignment assignment;  // best decoded over recorded iterations
  double value = 0.0;
  double alpha = 0.0;     // alpha actually used
};

namespace detail {

inline Pseudomarginal zeros_like(const Pseudomarginal& p)
{
  Pseudomarginal z = p;
  for (auto* group : {&z.node, &z.edge})
    for (table& t : *group)
      std::fill(t.begin(), t.end(), 0.0);
  return z;
}

inline void add_into(Pseudomarginal& acc, const Pseudomarginal& x)
{
  for (index i = 0; i < acc.node.size(); ++i)
    for (index a = 0; a < acc.node[i].size(); ++a)
      acc.node[i][a] += x.node[i][a];
  for (index j = 0; j < acc.edge.size(); ++j)
    for (index a = 0; a < acc.edge[j].size(); ++a)
      acc.edge[j][a] += x.edge[j][a];
}

// Global layout shapes, read off the first holder of every node and edge.
inline Pseudomarginal global_uniform(const DecompositionPlan& plan)
{
  Pseudomarginal mu;
  mu.node.resize(plan.node_membership.size());
  mu.edge.resize(plan.edge_membership.size());
  for (index u = 0; u < mu.node.size(); ++u) {
    if (plan.node_membership[u].empty())
      throw cover_error("node " + std::to_string(u) + " uncovered");
    const Membership& mb = plan.node_membership[u].front();
    const index k = plan.trees[mb.tree].cards[mb.local];
    mu.node[u].assign(k, 1.0 / static_cast<double>(k));
  }
  for (index e = 0; e < mu.edge.size(); ++e) {
    if (plan.edge_membership[e].empty())
      throw cover_error("edge " + std::to_string(e) + " uncovered");
    const Membership& mb = plan.edge_membership[e].front();
    const TreeSubgraph& t = plan.trees[mb.tree];
    const index ku = t.cards[t.local_edges[mb.local].u], kv = t.cards[t.local_edges[mb.local].v];
    mu.edge[e].assign(ku * kv, (1.0 / static_cast<double>(ku)) * (1.0 / static_cast<double>(kv)));
  }
  return mu;
}

inline double max_abs_diff(const Pseudomarginal& m, const Pseudomarginal& mu, const TreeSubgraph& t)
{
  double worst = 0.0;
  for (index i = 0; i < t.size(); ++i) {
    const table& g = mu.node[t.nodes[i]];
    for (index a = 0; a < g.size(); ++a)
      worst = std::max(worst, std::abs(m.node[i][a] - g[a]));
  }
  for (index j = 0; j < t.edges.size(); ++j) {
    const table& g = mu.edge[t.edges[j]];
    for (index a = 0; a < g.size(); ++a)
      worst = std::max(worst, std::abs(m.edge[j][a] - g[a]));
  }
  return worst;
}

} // namespace detail

/// Components of a global pseudomarginal that belong to a tree.
inline Pseudomarginal restrict_to_tree(const Pseudomarginal& mu, const TreeSubgraph& t)
{
  Pseudomarginal r;
  r.node.reserve(t.size());
  r.edge.reserve(t.edges.size());
  for (index u : t.nodes)
    r.node.push_back(mu.node[u]);
  for (index e : t.edges)
    r.edge.push_back(mu.edge[e]);
  return r;
}

/// Uniform m and mu, zero duals, empty ergodic sums.
inline SolverState init_state(const DecompositionPlan& plan, const SolverConfig& config)
{
  check_config(config);
  SolverState s;
  s.m.reserve(plan.trees.size());
  for (const TreeSubgraph& t : plan.trees)
    s.m.push_back(uniform_marginals(t));
  s.lambda.reserve(plan.trees.size());
  for (const Pseudomarginal& m : s.m)
    s.lambda.push_back(detail::zeros_like(m));
  s.mu = detail::global_uniform(plan);
  s.m_sum = s.lambda;
  s.mu_sum = detail::zeros_like(s.mu);
  return s;
}

/// Local update for one tree: with y = rho theta + lambda + beta (m - mu_tau),
/// returns the tree marginals of eta = grad phi(m) - y / alpha.
inline Pseudomarginal bethe_step_m(const SolverState& state, const TreeSubgraph& tree, const SolverConfig& config)
{
  const index id = tree.tree_id;
  if (tree.theta_node.size() != tree.size() || tree.theta_edge.size() != tree.edges.size())
    throw dimension_error("tree " + std::to_string(id) + ": potentials not split");

  const Pseudomarginal& m = state.m[id];
  const Pseudomarginal& lam = state.lambda[id];
  TreeParameters eta = bethe_gradient(tree, m);
  const double inv_alpha = 1.0 / config.alpha;
  const double beta = config.beta;

  for (index i = 0; i < tree.size(); ++i) {
    const table& mu = state.mu.node[tree.nodes[i]];
    for (index a = 0; a < mu.size(); ++a) {
      const double y = tree.rho * tree.theta_node[i][a] + lam.node[i][a] + beta * (m.node[i][a] - mu[a]);
      eta.node[i][a] -= y * inv_alpha;
    }
  }
  for (index j = 0; j < tree.edges.size(); ++j) {
    const table& mu = state.mu.edge[tree.edges[j]];
    for (index a = 0; a < mu.size(); ++a) {
      const double y = tree.rho * tree.theta_edge[j][a] + lam.edge[j][a] + beta * (m.edge[j][a] - mu[a]);
      eta.edge[j][a] -= y * inv_alpha;
    }
  }
  return sum_product_marginals(tree, eta).marginals;
}

/// Consensus average: every global entry is the mean of its tree copies,
/// summed in ascending tree id.
inline Pseudomarginal update_mu(const SolverState& state, const DecompositionPlan& plan)
{
  Pseudomarginal mu = detail::zeros_like(state.mu);
  for (index u = 0; u < mu.node.size(); ++u) {
    const auto& holders = plan.node_membership[u];
    table& out = mu.node[u];
    for (const Membership& mb : holders) {
      const table& c = state.m[mb.tree].node[mb.local];
      for (index a = 0; a < out.size(); ++a)
        out[a] += c[a];
    }
    const double inv = 1.0 / static_cast<double>(holders.size());
    for (double& x : out)
      x *= inv;
  }
  for (index e = 0; e < mu.edge.size(); ++e) {
    const auto& holders = plan.edge_membership[e];
    table& out = mu.edge[e];
    for (const Membership& mb : holders) {
      const table& c = state.m[mb.tree].edge[mb.local];
      for (index a = 0; a < out.size(); ++a)
        out[a] += c[a];
    }
    const double inv = 1.0 / static_cast<double>(holders.size());
    for (double& x : out)
      x *= inv;
  }
  return mu;
}

/// lambda_tau + beta (m_tau - mu_tau) for one tree.
inline Pseudomarginal lambda_step(const SolverState& state, const TreeSubgraph& tree, double beta)
{
  const index id = tree.tree_id;
  Pseudomarginal lam = state.lambda[id];
  const Pseudomarginal& m = state.m[id];
  for (index i = 0; i < tree.size(); ++i) {
    const table& mu = state.mu.node[tree.nodes[i]];
    for (index a = 0; a < mu.size(); ++a)
      lam.node[i][a] += beta * (m.node[i][a] - mu[a]);
  }
  for (index j = 0; j < tree.edges.size(); ++j) {
    const table& mu = state.mu.edge[tree.edges[j]];
    for (index a = 0; a < mu.size(); ++a)
      lam.edge[j][a] += beta * (m.edge[j][a] - mu[a]);
  }
  return lam;
}

inline std::vector<Pseudomarginal> update_lambda(const SolverState& state, const DecompositionPlan& plan, double beta)
{
  std::vector<Pseudomarginal> out;
  out.reserve(plan.trees.size());
  for (const TreeSubgraph& t : plan.trees)
    out.push_back(lambda_step(state, t, beta));
  return out;
}

/// Largest |sum over holders of lambda| over all nodes, edges and labels.
inline double zero_sum_violation(const std::vector<Pseudomarginal>& lambda, const DecompositionPlan& plan)
{
  double worst = 0.0;
  table acc;
  for (const auto& holders : plan.node_membership) {
    if (holders.empty())
      continue;
    acc.assign(lambda[holders.front().tree].node[holders.front().local].size(), 0.0);
    for (const Membership& mb : holders)
      for (index a = 0; a < acc.size(); ++a)
        acc[a] += lambda[mb.tree].node[mb.local][a];
    for (double x : acc)
      worst = std::max(worst, std::abs(x));
  }
  for (const auto& holders : plan.edge_membership) {
    if (holders.empty())
      continue;
    acc.assign(lambda[holders.front().tree].edge[holders.front().local].size(), 0.0);
    for (const Membership& mb : holders)
      for (index a = 0; a < acc.size(); ++a)
        acc[a] += lambda[mb.tree].edge[mb.local][a];
    for (double x : acc)
      worst = std::max(worst, std::abs(x));
  }
  return worst;
}

struct Residuals {
  double primal_residual_inf = 0.0;
  double max_violation = 0.0;
  double lp_objective = 0.0;
  double decoded_value = 0.0;
  Assignment decoded;
};

inline Residuals residuals(const SolverState& state, const DecompositionPlan& plan, const PairwiseMRF& mrf)
{
  Residuals r;
  for (const TreeSubgraph& t : plan.trees)
    r.primal_residual_inf = std::max(r.primal_residual_inf, detail::max_abs_diff(state.m[t.tree_id], state.mu, t));
  r.max_violation = polytope_violation(state.mu, mrf);
  r.lp_objective = lp_objective(state.mu, mrf);
  r.decoded = round_solution(state.mu);
  r.decoded_value = eval_assignment(mrf, r.decoded);
  return r;
}

/// Tree Lagrangian bound in score sign: sum over trees of
/// max_x <x, -(rho theta + lambda)>, an upper bound on max over L(G) of
/// <mu, f>. Duals whose copies do not sum to zero (beyond 1e-6) are
/// mean-centred first.
inline double dual_bound(const SolverState& state, const DecompositionPlan& plan, const PairwiseMRF& mrf)
{
  (void)mrf;
  std::vector<Pseudomarginal> lambda = state.lambda;
  if (zero_sum_violation(lambda, plan) > 1e-6) {
    for (const auto& holders : plan.node_membership) {
      if (holders.size() < 1)
        continue;
      table mean(lambda[holders.front().tree].node[holders.front().local].size(), 0.0);
      for (const Membership& mb : holders)
        for (index a = 0; a < mean.size(); ++a)
          mean[a] += lambda[mb.tree].node[mb.local][a];
      for (double& x : mean)
        x /= static_cast<double>(holders.size());
      for (const Membership& mb : holders)
        for (index a = 0; a < mean.size(); ++a)
          lambda[mb.tree].node[mb.local][a] -= mean[a];
    }
    for (const auto& holders : plan.edge_membership) {
      if (holders.size() < 1)
        continue;
      table mean(lambda[holders.front().tree].edge[holders.front().local].size(), 0.0);
      for (const Membership& mb : holders)
        for (index a = 0; a < mean.size(); ++a)
          mean[a] += lambda[mb.tree].edge[mb.local][a];
      for (double& x : mean)
        x /= static_cast<double>(holders.size());
      for (const Membership& mb : holders)
        for (index a = 0; a < mean.size(); ++a)
          lambda[mb.tree].edge[mb.local][a] -= mean[a];
    }
  }

  double bound = 0.0;
  for (const TreeSubgraph& t : plan.trees) {
    const Pseudomarginal& lam = lambda[t.tree_id];
    TreeParameters score;
    score.node.resize(t.size());
    score.edge.resize(t.edges.size());
    for (index i = 0; i < t.size(); ++i) {
      score.node[i].resize(t.cards[i]);
      for (index a = 0; a < t.cards[i]; ++a)
        score.node[i][a] = -(t.rho * t.theta_node[i][a] + lam.node[i][a]);
    }
    for (index j = 0; j < t.edges.size(); ++j) {
      score.edge[j].resize(t.theta_edge[j].size());
      for (index a = 0; a < score.edge[j].size(); ++a)
        score.edge[j][a] = -(t.rho * t.theta_edge[j][a] + lam.edge[j][a]);
    }
    bound += max_product_map(t, score).value;
  }
  return bound;
}

/// Sum over trees of ||mean m_tau - mean mu_tau||^2 for the ergodic averages.
inline double ergodic_consensus(const SolverState& state, const DecompositionPlan& plan)
{
  if (state.sum_count == 0)
    return 0.0;
  const double inv = 1.0 / static_cast<double>(state.sum_count);
  double total = 0.0;
  for (const TreeSubgraph& t : plan.trees) {
    const Pseudomarginal& ms = state.m_sum[t.tree_id];
    double s = 0.0;
    for (index i = 0; i < t.size(); ++i) {
      const table& g = state.mu_sum.node[t.nodes[i]];
      for (index a = 0; a < g.size(); ++a) {
        const double d = (ms.node[i][a] - g[a]) * inv;
        s += d * d;
      }
    }
    for (index j = 0; j < t.edges.size(); ++j) {
      const table& g = state.mu_sum.edge[t.edges[j]];
      for (index a = 0; a < g.size(); ++a) {
        const double d = (ms.edge[j][a] - g[a]) * inv;
        s += d * d;
      }
    }
    total += s;
  }
  return total;
}

/// Runs the iteration to convergence or max_iters.
///
/// Converged means max(primal residual, polytope violation) < tol. The primal
/// iterate often settles on an integral optimum long before the duals
/// certify it; a positive gap_tol additionally waits for the tree bound to
/// meet the LP objective.
///
/// Each iteration: all tree updates against the frozen previous state, the
/// fixed-order consensus average, the dual step. Tree work is spread over
/// `threads` workers; every reduction runs in tree or node order, so results
/// do not depend on the thread count. `observe`, when set, sees the state
/// after every completed iteration.
inline RunResult run(const PairwiseMRF& mrf, const DecompositionPlan& plan, const SolverConfig& config,
                     const std::function<void(const SolverState&, const DecompositionPlan&)>& observe = {})
{
  check_config(config);
  if (const auto defects = validate_cover(plan, mrf); !defects.empty())
    throw cover_error("invalid decomposition: " + defects.front());

  SolverConfig cfg = config;
  cfg.alpha = effective_alpha(config, plan);
  const DecompositionPlan prepared =
    split_potentials(to_cost(mrf), plan, std::vector<double>(plan.trees.size(), cfg.rho));
  const index trees = prepared.trees.size();

  RunResult result;
  result.alpha = cfg.alpha;
  SolverState& s = result.state;
  s = init_state(prepared, cfg);

  WorkerPool pool(cfg.threads);
  std::vector<Pseudomarginal> next(trees);
  std::vector<double> tree_residual(trees, 0.0);
  const auto start = std::chrono::steady_clock::now();

  auto record = [&](const Residuals& r) {
    TraceRow row;
    row.iter = s.iter;
    if (cfg.record_wall_time)
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    row.lp_objective = r.lp_objective;
    row.decoded_value = r.decoded_value;
    row.max_violation = r.max_violation;
    row.primal_residual = r.primal_residual_inf;
    row.dual_bound = dual_bound(s, prepared, mrf);
    row.ergodic_consensus = ergodic_consensus(s, prepared);
    if (r.decoded_value > s.best_value) {
      s.best_value = r.decoded_value;
      s.best = r.decoded;
    }
    result.trace.push_back(row);
  };

  while (s.iter < cfg.max_iters) {
    pool.for_each(trees, [&](index i) { detail::add_into(s.m_sum[i], s.m[i]); });
    detail::add_into(s.mu_sum, s.mu);
    ++s.sum_count;

    pool.for_each(trees, [&](index i) { next[i] = bethe_step_m(s, prepared.trees[i], cfg); });
    std::swap(s.m, next);
    s.mu = update_mu(s, prepared);
    pool.for_each(trees, [&](index i) { s.lambda[i] = lambda_step(s, prepared.trees[i], cfg.beta); });
    ++s.iter;

    pool.for_each(trees, [&](index i) { tree_residual[i] = detail::max_abs_diff(s.m[i], s.mu, prepared.trees[i]); });
    double primal = 0.0;
    for (double x : tree_residual)
      primal = std::max(primal, x);
    const double violation = polytope_violation(s.mu, mrf);
    bool converged = std::max(primal, violation) < cfg.tol;
    if (converged && cfg.gap_tol > 0.0)
      converged = std::abs(dual_bound(s, prepared, mrf) - lp_objective(s.mu, mrf)) <= cfg.gap_tol;

    if (converged || s.iter % cfg.trace_every == 0 || s.iter == cfg.max_iters) {
      Residuals r;
      r.primal_residual_inf = primal;
      r.max_violation = violation;
      r.lp_objective = lp_objective(s.mu, mrf);
      r.decoded = round_solution(s.mu);
      r.decoded_value = eval_assignment(mrf, r.decoded);
      record(r);
    }
    if (observe)
      observe(s, prepared);
    if (converged) {
      result.status = RunStatus::converged;
      break;
    }
  }

  if (result.trace.empty()) {
    s.best = round_solution(s.mu);
    s.best_value = eval_assignment(mrf, s.best);
  }
  result.assignment = s.best;
  result.value = s.best_value;
  return result;
}

} // namespace bethe

#endif
