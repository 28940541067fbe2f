#ifndef BETHE_ADMM_MRF_HPP
#define BETHE_ADMM_MRF_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace bethe {

using index = std::size_t;
using table = std::vector<double>;

/// Endpoints of an edge. Inside a PairwiseMRF always u < v.
struct Edge {
  index u = 0;
  index v = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Per-node label, 0-based.
using Assignment = std::vector<index>;

/// Node and edge marginal tables. Edge tables are row-major k_u x k_v in the
/// owning graph's orientation. The shape lives in the graph or tree it was
/// produced for.
struct Pseudomarginal {
  std::vector<table> node;
  std::vector<table> edge;

  friend bool operator==(const Pseudomarginal&, const Pseudomarginal&) = default;
};

namespace detail {

inline bool bitwise_equal(const std::vector<table>& a, const std::vector<table>& b)
{
  if (a.size() != b.size())
    return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size())
      return false;
    for (std::size_t j = 0; j < a[i].size(); ++j)
      if (std::bit_cast<std::uint64_t>(a[i][j]) != std::bit_cast<std::uint64_t>(b[i][j]))
        return false;
  }
  return true;
}

inline bool all_finite(const table& t)
{
  return std::all_of(t.begin(), t.end(), [](double x) { return std::isfinite(x); });
}

// Max violation of the local polytope constraints for a graph given by its
// cardinalities and edge list (endpoints index into cards).
inline double violation(std::span<const index> cards, std::span<const Edge> edges, const Pseudomarginal& mu)
{
  if (mu.node.size() != cards.size() || mu.edge.size() != edges.size())
    throw dimension_error("pseudomarginal shape does not match graph");

  double worst = 0.0;
  for (index u = 0; u < cards.size(); ++u) {
    const table& p = mu.node[u];
    if (p.size() != cards[u])
      throw dimension_error("node " + std::to_string(u) + ": marginal has wrong length");
    double s = 0.0;
    for (double x : p) {
      worst = std::max(worst, -x);
      s += x;
    }
    worst = std::max(worst, std::abs(s - 1.0));
  }

  std::vector<double> rows, cols;
  for (index e = 0; e < edges.size(); ++e) {
    const index ku = cards[edges[e].u];
    const index kv = cards[edges[e].v];
    const table& p = mu.edge[e];
    if (p.size() != ku * kv)
      throw dimension_error("edge " + std::to_string(e) + ": marginal has wrong size");
    rows.assign(ku, 0.0);
    cols.assign(kv, 0.0);
    for (index a = 0; a < ku; ++a)
      for (index b = 0; b < kv; ++b) {
        const double x = p[a * kv + b];
        worst = std::max(worst, -x);
        rows[a] += x;
        cols[b] += x;
      }
    for (index a = 0; a < ku; ++a)
      worst = std::max(worst, std::abs(rows[a] - mu.node[edges[e].u][a]));
    for (index b = 0; b < kv; ++b)
      worst = std::max(worst, std::abs(cols[b] - mu.node[edges[e].v][b]));
  }
  return worst;
}

} // namespace detail

/// Pairwise MRF with additive log-domain scores f_u and f_uv.
///
/// Edges are canonicalized on construction: an edge given as (v, u) with
/// v > u is flipped and its table transposed, so every stored table is
/// indexed [x_u * k_v + x_v] with u < v.
class PairwiseMRF {
public:
  PairwiseMRF() = default;

  PairwiseMRF(std::vector<index> cards, std::vector<Edge> edges,
              std::vector<table> node_potentials, std::vector<table> edge_potentials)
  : cards_(std::move(cards))
  , edges_(std::move(edges))
  , node_(std::move(node_potentials))
  , edge_(std::move(edge_potentials))
  {
    const index n = cards_.size();
    if (node_.size() != n)
      throw dimension_error("expected " + std::to_string(n) + " node tables, got " + std::to_string(node_.size()));
    if (edge_.size() != edges_.size())
      throw dimension_error("expected " + std::to_string(edges_.size()) + " edge tables, got " + std::to_string(edge_.size()));

    for (index u = 0; u < n; ++u) {
      if (cards_[u] < 2)
        throw dimension_error("node " + std::to_string(u) + ": cardinality must be at least 2");
      if (node_[u].size() != cards_[u])
        throw dimension_error("node " + std::to_string(u) + ": expected " + std::to_string(cards_[u]) +
                              " potential entries, got " + std::to_string(node_[u].size()));
      if (!detail::all_finite(node_[u]))
        throw dimension_error("node " + std::to_string(u) + ": non-finite potential");
    }

    for (index e = 0; e < edges_.size(); ++e) {
      Edge& ed = edges_[e];
      if (ed.u >= n || ed.v >= n)
        throw dimension_error("edge " + std::to_string(e) + ": endpoint out of range");
      if (ed.u == ed.v)
        throw dimension_error("edge " + std::to_string(e) + ": self-loop on node " + std::to_string(ed.u));
      const index ku = cards_[ed.u], kv = cards_[ed.v];
      if (edge_[e].size() != ku * kv)
        throw dimension_error("edge " + std::to_string(e) + ": expected " + std::to_string(ku * kv) +
                              " potential entries, got " + std::to_string(edge_[e].size()));
      if (!detail::all_finite(edge_[e]))
        throw dimension_error("edge " + std::to_string(e) + ": non-finite potential");
      if (ed.u > ed.v) {
        table t(ku * kv);
        for (index a = 0; a < ku; ++a)
          for (index b = 0; b < kv; ++b)
            t[b * ku + a] = edge_[e][a * kv + b];
        edge_[e] = std::move(t);
        std::swap(ed.u, ed.v);
      }
    }

    std::vector<Edge> sorted = edges_;
    std::sort(sorted.begin(), sorted.end(),
              [](const Edge& a, const Edge& b) { return std::pair(a.u, a.v) < std::pair(b.u, b.v); });
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw dimension_error("duplicate edge after canonicalization");
  }

  index num_nodes() const { return cards_.size(); }
  index num_edges() const { return edges_.size(); }
  index card(index u) const { return cards_[u]; }

  const std::vector<index>& cardinalities() const { return cards_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(index e) const { return edges_[e]; }

  const table& node_potential(index u) const { return node_[u]; }
  const table& edge_potential(index e) const { return edge_[e]; }
  const std::vector<table>& node_potentials() const { return node_; }
  const std::vector<table>& edge_potentials() const { return edge_; }

  /// Bitwise equality of structure and every potential entry.
  friend bool operator==(const PairwiseMRF& a, const PairwiseMRF& b)
  {
    return a.cards_ == b.cards_ && a.edges_ == b.edges_ &&
           detail::bitwise_equal(a.node_, b.node_) && detail::bitwise_equal(a.edge_, b.edge_);
  }

private:
  std::vector<index> cards_;
  std::vector<Edge> edges_;
  std::vector<table> node_;
  std::vector<table> edge_;
};

inline void check_assignment(const PairwiseMRF& mrf, const Assignment& x)
{
  if (x.size() != mrf.num_nodes())
    throw dimension_error("assignment has " + std::to_string(x.size()) + " labels, model has " +
                          std::to_string(mrf.num_nodes()) + " nodes");
  for (index u = 0; u < x.size(); ++u)
    if (x[u] >= mrf.card(u))
      throw dimension_error("node " + std::to_string(u) + ": label " + std::to_string(x[u]) +
                            " out of range [0, " + std::to_string(mrf.card(u)) + ")");
}

/// Score of a full assignment: nodes in index order, then edges in index order.
inline double eval_assignment(const PairwiseMRF& mrf, const Assignment& x)
{
  check_assignment(mrf, x);
  double s = 0.0;
  for (index u = 0; u < mrf.num_nodes(); ++u)
    s += mrf.node_potential(u)[x[u]];
  for (index e = 0; e < mrf.num_edges(); ++e) {
    const Edge& ed = mrf.edge(e);
    s += mrf.edge_potential(e)[x[ed.u] * mrf.card(ed.v) + x[ed.v]];
  }
  return s;
}

/// Negates every potential (score f to cost l = -f).
inline PairwiseMRF to_cost(const PairwiseMRF& mrf)
{
  auto neg = [](std::vector<table> ts) {
    for (auto& t : ts)
      for (auto& x : t)
        x = -x;
    return ts;
  };
  return PairwiseMRF(mrf.cardinalities(), mrf.edges(), neg(mrf.node_potentials()), neg(mrf.edge_potentials()));
}

inline void check_shape(const Pseudomarginal& mu, const PairwiseMRF& mrf)
{
  if (mu.node.size() != mrf.num_nodes() || mu.edge.size() != mrf.num_edges())
    throw dimension_error("pseudomarginal shape does not match model");
  for (index u = 0; u < mrf.num_nodes(); ++u)
    if (mu.node[u].size() != mrf.card(u))
      throw dimension_error("node " + std::to_string(u) + ": marginal has wrong length");
  for (index e = 0; e < mrf.num_edges(); ++e)
    if (mu.edge[e].size() != mrf.card(mrf.edge(e).u) * mrf.card(mrf.edge(e).v))
      throw dimension_error("edge " + std::to_string(e) + ": marginal has wrong size");
}

/// <mu, f> over all node and edge entries.
inline double lp_objective(const Pseudomarginal& mu, const PairwiseMRF& mrf)
{
  check_shape(mu, mrf);
  double s = 0.0;
  for (index u = 0; u < mrf.num_nodes(); ++u)
    for (index a = 0; a < mrf.card(u); ++a)
      s += mu.node[u][a] * mrf.node_potential(u)[a];
  for (index e = 0; e < mrf.num_edges(); ++e) {
    const table& f = mrf.edge_potential(e);
    for (index i = 0; i < f.size(); ++i)
      s += mu.edge[e][i] * f[i];
  }
  return s;
}

/// Largest violation of nonnegativity, normalization or local consistency.
inline double polytope_violation(const Pseudomarginal& mu, const PairwiseMRF& mrf)
{
  return detail::violation(mrf.cardinalities(), mrf.edges(), mu);
}

/// Node-based rounding; ties go to the lowest label.
inline Assignment round_solution(const Pseudomarginal& mu)
{
  Assignment x(mu.node.size(), 0);
  for (index u = 0; u < mu.node.size(); ++u) {
    const table& p = mu.node[u];
    index best = 0;
    for (index a = 1; a < p.size(); ++a)
      if (p[a] > p[best])
        best = a;
    x[u] = best;
  }
  return x;
}

/// Product-of-uniforms point of L(G).
inline Pseudomarginal uniform_pseudomarginal(const PairwiseMRF& mrf)
{
  Pseudomarginal mu;
  mu.node.resize(mrf.num_nodes());
  mu.edge.resize(mrf.num_edges());
  for (index u = 0; u < mrf.num_nodes(); ++u)
    mu.node[u].assign(mrf.card(u), 1.0 / static_cast<double>(mrf.card(u)));
  for (index e = 0; e < mrf.num_edges(); ++e) {
    const index ku = mrf.card(mrf.edge(e).u), kv = mrf.card(mrf.edge(e).v);
    mu.edge[e].assign(ku * kv, (1.0 / static_cast<double>(ku)) * (1.0 / static_cast<double>(kv)));
  }
  return mu;
}

/// Integral pseudomarginal encoding an assignment.
inline Pseudomarginal indicator_pseudomarginal(const PairwiseMRF& mrf, const Assignment& x)
{
  check_assignment(mrf, x);
  Pseudomarginal mu;
  mu.node.resize(mrf.num_nodes());
  mu.edge.resize(mrf.num_edges());
  for (index u = 0; u < mrf.num_nodes(); ++u) {
    mu.node[u].assign(mrf.card(u), 0.0);
    mu.node[u][x[u]] = 1.0;
  }
  for (index e = 0; e < mrf.num_edges(); ++e) {
    const Edge& ed = mrf.edge(e);
    mu.edge[e].assign(mrf.card(ed.u) * mrf.card(ed.v), 0.0);
    mu.edge[e][x[ed.u] * mrf.card(ed.v) + x[ed.v]] = 1.0;
  }
  return mu;
}

} // namespace bethe

#endif
