#ifndef BETHE_ADMM_ORACLES_HPP
#define BETHE_ADMM_ORACLES_HPP

// Exhaustive reference computations for small instances. Nothing here goes
// through the message-passing code; the only shared pieces are the data
// types and bethe_divergence in check_lemma1, which is the quantity under test.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "decomposition.hpp"
#include "mrf.hpp"
#include "random.hpp"
#include "tree_inference.hpp"

namespace bethe {

inline constexpr double map_state_guard = 1e7;
inline constexpr double marginal_state_guard = 1e6;

namespace detail {

inline double state_space(const std::vector<index>& cards)
{
  double s = 1.0;
  for (index k : cards)
    s *= static_cast<double>(k);
  return s;
}

// Advances x in lexicographic order (last position fastest). False on wrap.
inline bool next_assignment(Assignment& x, const std::vector<index>& cards)
{
  for (index i = x.size(); i-- > 0;) {
    if (++x[i] < cards[i])
      return true;
    x[i] = 0;
  }
  return false;
}

inline double enumerate_score(const TreeSubgraph& tree, const TreeParameters& eta, const Assignment& x)
{
  double s = 0.0;
  for (index i = 0; i < tree.size(); ++i)
    s += eta.node[i][x[i]];
  for (index j = 0; j < tree.local_edges.size(); ++j) {
    const Edge& le = tree.local_edges[j];
    s += eta.edge[j][x[le.u] * tree.cards[le.v] + x[le.v]];
  }
  return s;
}

inline std::vector<double> enumerate_scores(const TreeSubgraph& tree, const TreeParameters& eta)
{
  if (state_space(tree.cards) > marginal_state_guard)
    throw guard_error("tree " + std::to_string(tree.tree_id) + ": state space exceeds enumeration guard");
  std::vector<double> scores;
  Assignment x(tree.size(), 0);
  do
    scores.push_back(enumerate_score(tree, eta, x));
  while (next_assignment(x, tree.cards));
  return scores;
}

} // namespace detail

struct BruteForceMap {
  Assignment labels;
  double value = 0.0;
};

/// Exact MAP by enumeration; lexicographically smallest argmax on ties.
inline BruteForceMap brute_force_map(const PairwiseMRF& mrf)
{
  if (detail::state_space(mrf.cardinalities()) > map_state_guard)
    throw guard_error("state space exceeds enumeration guard of 1e7");
  BruteForceMap best;
  best.value = -std::numeric_limits<double>::infinity();
  Assignment x(mrf.num_nodes(), 0);
  do {
    double s = 0.0;
    for (index u = 0; u < mrf.num_nodes(); ++u)
      s += mrf.node_potential(u)[x[u]];
    for (index e = 0; e < mrf.num_edges(); ++e) {
      const Edge& ed = mrf.edge(e);
      s += mrf.edge_potential(e)[x[ed.u] * mrf.card(ed.v) + x[ed.v]];
    }
    if (s > best.value) {
      best.value = s;
      best.labels = x;
    }
  } while (detail::next_assignment(x, mrf.cardinalities()));
  return best;
}

/// Exact marginals and log Z by enumeration over the tree's joint states.
inline TreeMarginals brute_force_marginals(const TreeSubgraph& tree, const TreeParameters& eta)
{
  const std::vector<double> scores = detail::enumerate_scores(tree, eta);
  double mx = -std::numeric_limits<double>::infinity();
  for (double s : scores)
    mx = std::max(mx, s);
  double z = 0.0;
  for (double s : scores)
    z += std::exp(s - mx);

  TreeMarginals out;
  out.log_partition = mx + std::log(z);
  Pseudomarginal& m = out.marginals;
  m.node.resize(tree.size());
  m.edge.resize(tree.local_edges.size());
  for (index i = 0; i < tree.size(); ++i)
    m.node[i].assign(tree.cards[i], 0.0);
  for (index j = 0; j < tree.local_edges.size(); ++j)
    m.edge[j].assign(tree.cards[tree.local_edges[j].u] * tree.cards[tree.local_edges[j].v], 0.0);

  Assignment x(tree.size(), 0);
  index k = 0;
  do {
    const double p = std::exp(scores[k++] - out.log_partition);
    for (index i = 0; i < tree.size(); ++i)
      m.node[i][x[i]] += p;
    for (index j = 0; j < tree.local_edges.size(); ++j) {
      const Edge& le = tree.local_edges[j];
      m.edge[j][x[le.u] * tree.cards[le.v] + x[le.v]] += p;
    }
  } while (detail::next_assignment(x, tree.cards));
  return out;
}

/// KL(p || q) between the tree distributions with natural parameters
/// eta_p and eta_q, by enumeration.
inline double brute_force_kl(const TreeSubgraph& tree, const TreeParameters& eta_p, const TreeParameters& eta_q)
{
  const std::vector<double> sp = detail::enumerate_scores(tree, eta_p);
  const std::vector<double> sq = detail::enumerate_scores(tree, eta_q);
  auto lse = [](const std::vector<double>& v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double s : v)
      mx = std::max(mx, s);
    double z = 0.0;
    for (double s : v)
      z += std::exp(s - mx);
    return mx + std::log(z);
  };
  const double zp = lse(sp), zq = lse(sq);
  double kl = 0.0;
  for (index i = 0; i < sp.size(); ++i) {
    const double lp = sp[i] - zp;
    kl += std::exp(lp) * (lp - (sq[i] - zq));
  }
  return kl;
}

/// Random natural parameters on a tree, entries uniform in [-scale, scale].
inline TreeParameters random_tree_parameters(const TreeSubgraph& tree, std::uint64_t seed, double scale)
{
  Rng rng(seed);
  TreeParameters eta;
  eta.node.resize(tree.size());
  eta.edge.resize(tree.local_edges.size());
  for (index i = 0; i < tree.size(); ++i) {
    eta.node[i].resize(tree.cards[i]);
    for (double& x : eta.node[i])
      x = rng.uniform(-scale, scale);
  }
  for (index j = 0; j < tree.local_edges.size(); ++j) {
    eta.edge[j].resize(tree.cards[tree.local_edges[j].u] * tree.cards[tree.local_edges[j].v]);
    for (double& x : eta.edge[j])
      x = rng.uniform(-scale, scale);
  }
  return eta;
}

/// alpha * d_phi(mu || nu) - (beta / 2) * ||mu - nu||^2 over all node and
/// edge entries. Nonnegative whenever alpha >= beta (2 n - 1)^2.
inline double check_lemma1(const TreeSubgraph& tree, const Pseudomarginal& mu, const Pseudomarginal& nu,
                           double alpha, double beta)
{
  constexpr double consistency_tol = 1e-8;
  for (const Pseudomarginal* p : {&mu, &nu}) {
    if (polytope_violation(*p, tree) > consistency_tol)
      throw dimension_error("tree " + std::to_string(tree.tree_id) + ": argument is not locally consistent");
    for (const auto* group : {&p->node, &p->edge})
      for (const table& t : *group)
        for (double x : t)
          if (!(x > 0.0))
            throw dimension_error("tree " + std::to_string(tree.tree_id) + ": argument is not strictly positive");
  }

  double sq = 0.0;
  for (index i = 0; i < tree.size(); ++i)
    for (index a = 0; a < mu.node[i].size(); ++a)
      sq += (mu.node[i][a] - nu.node[i][a]) * (mu.node[i][a] - nu.node[i][a]);
  for (index j = 0; j < tree.local_edges.size(); ++j)
    for (index a = 0; a < mu.edge[j].size(); ++a)
      sq += (mu.edge[j][a] - nu.edge[j][a]) * (mu.edge[j][a] - nu.edge[j][a]);
  return alpha * bethe_divergence(tree, mu, nu) - 0.5 * beta * sq;
}

} // namespace bethe

#endif
