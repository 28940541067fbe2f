#ifndef BETHE_ADMM_TREE_INFERENCE_HPP
#define BETHE_ADMM_TREE_INFERENCE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "decomposition.hpp"
#include "mrf.hpp"

namespace bethe {

/// Log-domain parameters on a tree, same layout as a tree's theta tables.
struct TreeParameters {
  std::vector<table> node;
  std::vector<table> edge;
};

struct TreeMarginals {
  Pseudomarginal marginals;
  double log_partition = 0.0;
};

struct TreeMap {
  Assignment labels;  // local order
  double value = 0.0;
};

inline constexpr double zero_clamp = 1e-300;

namespace detail {

inline void check_tree(const TreeSubgraph& t)
{
  const index n = t.nodes.size();
  if (n == 0 || t.order.size() != n || t.local_edges.size() + 1 != n || t.parent.size() != n ||
      t.cards.size() != n)
    throw tree_error("tree " + std::to_string(t.tree_id) + " has no valid tree layout");
}

template<typename Tables>
void check_tables(const TreeSubgraph& t, const Tables& p)
{
  if (p.node.size() != t.size() || p.edge.size() != t.local_edges.size())
    throw dimension_error("tables do not match tree " + std::to_string(t.tree_id));
  for (index i = 0; i < t.size(); ++i)
    if (p.node[i].size() != t.cards[i])
      throw dimension_error("tree " + std::to_string(t.tree_id) + ": node table " + std::to_string(i) + " has wrong length");
  for (index j = 0; j < t.local_edges.size(); ++j)
    if (p.edge[j].size() != t.cards[t.local_edges[j].u] * t.cards[t.local_edges[j].v])
      throw dimension_error("tree " + std::to_string(t.tree_id) + ": edge table " + std::to_string(j) + " has wrong size");
}

// Offset into edge table j for (label of parent side, label of child side).
struct oriented_edge {
  index stride_parent;
  index stride_child;

  oriented_edge(const TreeSubgraph& t, index child)
  {
    const index p = t.parent[child];
    const Edge& le = t.local_edges[t.parent_edge[child]];
    if (le.u == p) {
      stride_parent = t.cards[child];
      stride_child = 1;
    } else {
      stride_parent = 1;
      stride_child = t.cards[p];
    }
  }

  index operator()(index xp, index xc) const { return xp * stride_parent + xc * stride_child; }
};

inline double log_sum_exp(const table& v)
{
  const double mx = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v)
    s += std::exp(x - mx);
  return mx + std::log(s);
}

inline double xlogx(double x) { return x < zero_clamp ? 0.0 : x * std::log(x); }

} // namespace detail

/// Exact marginals and log partition function of
/// p(x) ∝ exp(sum_u eta_u(x_u) + sum_uv eta_uv(x_u, x_v)) on a tree.
///
/// Leaf-to-root then root-to-leaf passes in log space. Upward messages are
/// shifted by their max and the shifts are accumulated into log Z.
inline TreeMarginals sum_product_marginals(const TreeSubgraph& tree, const TreeParameters& eta)
{
  detail::check_tree(tree);
  detail::check_tables(tree, eta);
  const index n = tree.size();

  std::vector<table> in = eta.node;
  std::vector<table> up(n);
  double shift = 0.0;
  table buf;

  for (index pos = n; pos-- > 1;) {
    const index c = tree.order[pos];
    const index p = tree.parent[c];
    const table& psi = eta.edge[tree.parent_edge[c]];
    const detail::oriented_edge at(tree, c);
    const index kc = tree.cards[c], kp = tree.cards[p];

    table& msg = up[c];
    msg.resize(kp);
    buf.resize(kc);
    for (index xp = 0; xp < kp; ++xp) {
      for (index xc = 0; xc < kc; ++xc)
        buf[xc] = in[c][xc] + psi[at(xp, xc)];
      msg[xp] = detail::log_sum_exp(buf);
    }
    const double mx = *std::max_element(msg.begin(), msg.end());
    for (double& x : msg)
      x -= mx;
    shift += mx;
    for (index xp = 0; xp < kp; ++xp)
      in[p][xp] += msg[xp];
  }

  TreeMarginals out;
  Pseudomarginal& mu = out.marginals;
  mu.node.resize(n);
  mu.edge.resize(tree.local_edges.size());

  const index root = tree.order.front();
  std::vector<table> full(n);
  full[root] = in[root];
  out.log_partition = detail::log_sum_exp(full[root]) + shift;

  table cavity;
  for (index pos = 1; pos < n; ++pos) {
    const index c = tree.order[pos];
    const index p = tree.parent[c];
    const index j = tree.parent_edge[c];
    const table& psi = eta.edge[j];
    const detail::oriented_edge at(tree, c);
    const index kc = tree.cards[c], kp = tree.cards[p];

    cavity.resize(kp);
    for (index xp = 0; xp < kp; ++xp)
      cavity[xp] = full[p][xp] - up[c][xp];

    table& f = full[c];
    f.resize(kc);
    buf.resize(kp);
    for (index xc = 0; xc < kc; ++xc) {
      for (index xp = 0; xp < kp; ++xp)
        buf[xp] = cavity[xp] + psi[at(xp, xc)];
      f[xc] = detail::log_sum_exp(buf);
    }
    const double mx = *std::max_element(f.begin(), f.end());
    for (index xc = 0; xc < kc; ++xc)
      f[xc] += in[c][xc] - mx;

    table& pe = mu.edge[j];
    pe.resize(kp * kc);
    double emax = -std::numeric_limits<double>::infinity();
    for (index xp = 0; xp < kp; ++xp)
      for (index xc = 0; xc < kc; ++xc) {
        const double w = cavity[xp] + psi[at(xp, xc)] + in[c][xc];
        pe[at(xp, xc)] = w;
        emax = std::max(emax, w);
      }
    double z = 0.0;
    for (double& w : pe) {
      w = std::exp(w - emax);
      z += w;
    }
    for (double& w : pe)
      w /= z;
  }

  for (index i = 0; i < n; ++i) {
    const table& f = full[i];
    const double mx = *std::max_element(f.begin(), f.end());
    table& p = mu.node[i];
    p.resize(f.size());
    double z = 0.0;
    for (index a = 0; a < f.size(); ++a) {
      p[a] = std::exp(f[a] - mx);
      z += p[a];
    }
    for (double& x : p)
      x /= z;
  }
  return out;
}

/// Score of a local assignment on a tree: nodes in local order, then edges.
inline double tree_score(const TreeSubgraph& tree, const TreeParameters& score, const Assignment& x)
{
  double s = 0.0;
  for (index i = 0; i < tree.size(); ++i)
    s += score.node[i][x[i]];
  for (index j = 0; j < tree.local_edges.size(); ++j) {
    const Edge& le = tree.local_edges[j];
    s += score.edge[j][x[le.u] * tree.cards[le.v] + x[le.v]];
  }
  return s;
}

/// Exact maximizer of the tree score. Backtracking picks the lowest label
/// among ties at every node.
inline TreeMap max_product_map(const TreeSubgraph& tree, const TreeParameters& score)
{
  detail::check_tree(tree);
  detail::check_tables(tree, score);
  const index n = tree.size();

  std::vector<table> in = score.node;
  for (index pos = n; pos-- > 1;) {
    const index c = tree.order[pos];
    const index p = tree.parent[c];
    const table& psi = score.edge[tree.parent_edge[c]];
    const detail::oriented_edge at(tree, c);
    for (index xp = 0; xp < tree.cards[p]; ++xp) {
      double best = -std::numeric_limits<double>::infinity();
      for (index xc = 0; xc < tree.cards[c]; ++xc)
        best = std::max(best, in[c][xc] + psi[at(xp, xc)]);
      in[p][xp] += best;
    }
  }

  TreeMap out;
  out.labels.assign(n, 0);
  const index root = tree.order.front();
  const auto argmax = [](auto&& value, index k) {
    index best = 0;
    double bv = value(0);
    for (index a = 1; a < k; ++a) {
      const double v = value(a);
      if (v > bv) {
        bv = v;
        best = a;
      }
    }
    return best;
  };
  out.labels[root] = argmax([&](index a) { return in[root][a]; }, tree.cards[root]);
  for (index pos = 1; pos < n; ++pos) {
    const index c = tree.order[pos];
    const index xp = out.labels[tree.parent[c]];
    const table& psi = score.edge[tree.parent_edge[c]];
    const detail::oriented_edge at(tree, c);
    out.labels[c] = argmax([&](index xc) { return in[c][xc] + psi[at(xp, xc)]; }, tree.cards[c]);
  }
  out.value = tree_score(tree, score, out.labels);
  return out;
}

/// Largest local-polytope violation of tree marginals.
inline double polytope_violation(const Pseudomarginal& m, const TreeSubgraph& tree)
{
  return detail::violation(tree.cards, tree.local_edges, m);
}

/// H_Bethe = sum_uv H_uv - sum_u (d_u - 1) H_u, with every entry treated as
/// an independent coordinate. Entries below 1e-300 count as exact zeros.
inline double bethe_entropy(const TreeSubgraph& tree, const Pseudomarginal& m)
{
  detail::check_tables(tree, m);
  double h = 0.0;
  for (index j = 0; j < tree.local_edges.size(); ++j)
    for (double x : m.edge[j])
      h -= detail::xlogx(x);
  for (index i = 0; i < tree.size(); ++i) {
    const double w = static_cast<double>(tree.degree[i]) - 1.0;
    if (w == 0.0)
      continue;
    double hu = 0.0;
    for (double x : m.node[i])
      hu -= detail::xlogx(x);
    h -= w * hu;
  }
  return h;
}

/// Gradient of phi = -H_Bethe: 1 + ln m_uv on edges and
/// -(d_u - 1)(1 + ln m_u) on nodes. Zeros are clamped to 1e-300; negative
/// or NaN entries throw.
inline TreeParameters bethe_gradient(const TreeSubgraph& tree, const Pseudomarginal& m)
{
  detail::check_tables(tree, m);
  auto log_clamped = [&](double x) {
    if (!(x >= 0.0))
      throw dimension_error("tree " + std::to_string(tree.tree_id) + ": negative marginal entry");
    return std::log(std::max(x, zero_clamp));
  };

  TreeParameters g;
  g.node.resize(tree.size());
  g.edge.resize(tree.local_edges.size());
  for (index i = 0; i < tree.size(); ++i) {
    const double w = -(static_cast<double>(tree.degree[i]) - 1.0);
    g.node[i].resize(m.node[i].size());
    for (index a = 0; a < m.node[i].size(); ++a)
      g.node[i][a] = w * (1.0 + log_clamped(m.node[i][a]));
  }
  for (index j = 0; j < tree.local_edges.size(); ++j) {
    g.edge[j].resize(m.edge[j].size());
    for (index a = 0; a < m.edge[j].size(); ++a)
      g.edge[j][a] = 1.0 + log_clamped(m.edge[j][a]);
  }
  return g;
}

/// Bregman divergence of phi = -H_Bethe. Equals KL between the induced tree
/// distributions when both arguments are locally consistent.
inline double bethe_divergence(const TreeSubgraph& tree, const Pseudomarginal& m, const Pseudomarginal& ref)
{
  detail::check_tables(tree, m);
  const TreeParameters g = bethe_gradient(tree, ref);
  double inner = 0.0;
  for (index i = 0; i < tree.size(); ++i)
    for (index a = 0; a < m.node[i].size(); ++a)
      inner += g.node[i][a] * (m.node[i][a] - ref.node[i][a]);
  for (index j = 0; j < tree.local_edges.size(); ++j)
    for (index a = 0; a < m.edge[j].size(); ++a)
      inner += g.edge[j][a] * (m.edge[j][a] - ref.edge[j][a]);
  return -bethe_entropy(tree, m) + bethe_entropy(tree, ref) - inner;
}

/// Product of uniforms on the tree.
inline Pseudomarginal uniform_marginals(const TreeSubgraph& tree)
{
  Pseudomarginal m;
  m.node.resize(tree.size());
  m.edge.resize(tree.local_edges.size());
  for (index i = 0; i < tree.size(); ++i)
    m.node[i].assign(tree.cards[i], 1.0 / static_cast<double>(tree.cards[i]));
  for (index j = 0; j < tree.local_edges.size(); ++j) {
    const index ku = tree.cards[tree.local_edges[j].u], kv = tree.cards[tree.local_edges[j].v];
    m.edge[j].assign(ku * kv, (1.0 / static_cast<double>(ku)) * (1.0 / static_cast<double>(kv)));
  }
  return m;
}

} // namespace bethe

#endif
