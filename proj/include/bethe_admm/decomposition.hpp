#ifndef BETHE_ADMM_DECOMPOSITION_HPP
#define BETHE_ADMM_DECOMPOSITION_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mrf.hpp"

namespace bethe {

inline constexpr index npos = std::numeric_limits<index>::max();

/// One tree of a cover. Node and edge lists hold global ids; everything
/// else is indexed by local position in those lists. Edge tables keep the
/// global (lower id first) orientation.
struct TreeSubgraph {
  index tree_id = 0;
  std::vector<index> nodes;
  std::vector<index> edges;

  std::vector<index> cards;
  std::vector<Edge> local_edges;
  std::vector<index> degree;

  // Breadth-first traversal from the node with the lowest global id.
  std::vector<index> order;
  std::vector<index> parent;
  std::vector<index> parent_edge;

  std::vector<table> theta_node;
  std::vector<table> theta_edge;
  double rho = 1.0;

  index size() const { return nodes.size(); }
};

struct Membership {
  index tree = 0;
  index local = 0;

  friend bool operator==(const Membership&, const Membership&) = default;
};

/// Tree cover plus, for every global node and edge, the trees holding it
/// (sorted by tree id).
struct DecompositionPlan {
  std::vector<TreeSubgraph> trees;
  std::vector<std::vector<Membership>> node_membership;
  std::vector<std::vector<Membership>> edge_membership;
};

/// Builds the local layout of a tree over `nodes`/`edges` of `mrf`.
/// Throws tree_error if the pair is not a connected acyclic subgraph.
inline TreeSubgraph make_tree(const PairwiseMRF& mrf, index tree_id, std::vector<index> nodes, std::vector<index> edges)
{
  TreeSubgraph t;
  t.tree_id = tree_id;
  t.nodes = std::move(nodes);
  t.edges = std::move(edges);
  const index n = t.nodes.size();
  const std::string name = "tree " + std::to_string(tree_id);

  if (n == 0)
    throw tree_error(name + " is empty");
  if (t.edges.size() + 1 != n)
    throw tree_error(name + ": " + std::to_string(n) + " nodes but " + std::to_string(t.edges.size()) + " edges");

  std::vector<std::pair<index, index>> lookup(n);
  for (index i = 0; i < n; ++i) {
    if (t.nodes[i] >= mrf.num_nodes())
      throw tree_error(name + ": node " + std::to_string(t.nodes[i]) + " not in model");
    lookup[i] = {t.nodes[i], i};
  }
  std::sort(lookup.begin(), lookup.end());
  for (index i = 1; i < n; ++i)
    if (lookup[i].first == lookup[i - 1].first)
      throw tree_error(name + ": node " + std::to_string(lookup[i].first) + " listed twice");
  auto local_of = [&](index g) {
    auto it = std::lower_bound(lookup.begin(), lookup.end(), std::pair(g, index{0}));
    if (it == lookup.end() || it->first != g)
      throw tree_error(name + ": edge endpoint " + std::to_string(g) + " not among tree nodes");
    return it->second;
  };

  t.cards.resize(n);
  for (index i = 0; i < n; ++i)
    t.cards[i] = mrf.card(t.nodes[i]);

  t.degree.assign(n, 0);
  std::vector<std::vector<std::pair<index, index>>> adj(n);
  t.local_edges.resize(t.edges.size());
  for (index j = 0; j < t.edges.size(); ++j) {
    if (t.edges[j] >= mrf.num_edges())
      throw tree_error(name + ": edge " + std::to_string(t.edges[j]) + " not in model");
    const Edge& g = mrf.edge(t.edges[j]);
    const Edge loc{local_of(g.u), local_of(g.v)};
    t.local_edges[j] = loc;
    ++t.degree[loc.u];
    ++t.degree[loc.v];
    adj[loc.u].push_back({loc.v, j});
    adj[loc.v].push_back({loc.u, j});
  }

  const index root = lookup.front().second;
  t.parent.assign(n, npos);
  t.parent_edge.assign(n, npos);
  std::vector<char> seen(n, 0);
  t.order.reserve(n);
  t.order.push_back(root);
  seen[root] = 1;
  for (index head = 0; head < t.order.size(); ++head) {
    const index a = t.order[head];
    for (auto [b, j] : adj[a]) {
      if (seen[b])
        continue;
      seen[b] = 1;
      t.parent[b] = a;
      t.parent_edge[b] = j;
      t.order.push_back(b);
    }
  }
  if (t.order.size() != n)
    throw tree_error(name + " is not connected");

  return t;
}

/// Whole model as one tree (throws if the model is not a tree).
inline TreeSubgraph whole_tree(const PairwiseMRF& mrf)
{
  std::vector<index> nodes(mrf.num_nodes()), edges(mrf.num_edges());
  std::iota(nodes.begin(), nodes.end(), index{0});
  std::iota(edges.begin(), edges.end(), index{0});
  return make_tree(mrf, 0, std::move(nodes), std::move(edges));
}

struct TreeSpec {
  std::vector<index> nodes;
  std::vector<index> edges;
};

/// Lays out every tree and fills the membership lists.
inline DecompositionPlan make_plan(const PairwiseMRF& mrf, std::vector<TreeSpec> specs)
{
  DecompositionPlan plan;
  plan.node_membership.resize(mrf.num_nodes());
  plan.edge_membership.resize(mrf.num_edges());
  plan.trees.reserve(specs.size());
  for (index id = 0; id < specs.size(); ++id) {
    plan.trees.push_back(make_tree(mrf, id, std::move(specs[id].nodes), std::move(specs[id].edges)));
    const TreeSubgraph& t = plan.trees.back();
    for (index i = 0; i < t.nodes.size(); ++i)
      plan.node_membership[t.nodes[i]].push_back({id, i});
    for (index j = 0; j < t.edges.size(); ++j)
      plan.edge_membership[t.edges[j]].push_back({id, j});
  }
  return plan;
}

/// One 2-node tree per edge. Isolated nodes get a single-node tree each,
/// appended after the edge trees.
inline DecompositionPlan edge_decomposition(const PairwiseMRF& mrf)
{
  if (mrf.num_edges() == 0)
    throw cover_error("edge decomposition of an edgeless graph is undefined");
  std::vector<TreeSpec> specs;
  specs.reserve(mrf.num_edges());
  std::vector<char> touched(mrf.num_nodes(), 0);
  for (index e = 0; e < mrf.num_edges(); ++e) {
    const Edge& ed = mrf.edge(e);
    specs.push_back({{ed.u, ed.v}, {e}});
    touched[ed.u] = touched[ed.v] = 1;
  }
  for (index u = 0; u < mrf.num_nodes(); ++u)
    if (!touched[u])
      specs.push_back({{u}, {}});
  return make_plan(mrf, std::move(specs));
}

/// Greedy cover by breadth-first spanning trees of the still-uncovered edges.
///
/// Components are handled in order of their lowest node. Within a component
/// each round starts at the lowest node that still has an uncovered edge and
/// grows a BFS tree over uncovered edges only. seed == 0 visits neighbours in
/// ascending id order; any other seed shuffles each adjacency list once.
inline DecompositionPlan tree_cover(const PairwiseMRF& mrf, std::uint64_t seed = 0)
{
  const index n = mrf.num_nodes();
  std::vector<std::vector<std::pair<index, index>>> adj(n);
  for (index e = 0; e < mrf.num_edges(); ++e) {
    adj[mrf.edge(e).u].push_back({mrf.edge(e).v, e});
    adj[mrf.edge(e).v].push_back({mrf.edge(e).u, e});
  }
  std::mt19937_64 gen(seed);
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    if (seed != 0)
      std::shuffle(a.begin(), a.end(), gen);
  }

  std::vector<index> component(n, npos);
  std::vector<std::vector<index>> members;
  for (index s = 0; s < n; ++s) {
    if (component[s] != npos)
      continue;
    const index c = members.size();
    members.emplace_back();
    std::vector<index> queue{s};
    component[s] = c;
    for (index h = 0; h < queue.size(); ++h)
      for (auto [b, e] : adj[queue[h]])
        if (component[b] == npos) {
          component[b] = c;
          queue.push_back(b);
        }
    std::sort(queue.begin(), queue.end());
    members.back() = std::move(queue);
  }

  std::vector<char> covered(mrf.num_edges(), 0);
  std::vector<index> stamp(n, npos);
  std::vector<TreeSpec> specs;
  for (const auto& comp : members) {
    if (comp.size() == 1) {
      specs.push_back({{comp.front()}, {}});
      continue;
    }
    for (;;) {
      index root = npos;
      for (index u : comp) {
        for (auto [b, e] : adj[u])
          if (!covered[e]) {
            root = u;
            break;
          }
        if (root != npos)
          break;
      }
      if (root == npos)
        break;

      const index id = specs.size();
      TreeSpec spec;
      spec.nodes.push_back(root);
      stamp[root] = id;
      for (index h = 0; h < spec.nodes.size(); ++h)
        for (auto [b, e] : adj[spec.nodes[h]]) {
          if (covered[e] || stamp[b] == id)
            continue;
          stamp[b] = id;
          covered[e] = 1;
          spec.nodes.push_back(b);
          spec.edges.push_back(e);
        }
      specs.push_back(std::move(spec));
    }
  }
  return make_plan(mrf, std::move(specs));
}

/// Structural check of a plan against a model. Returns defect descriptions;
/// an empty list means the plan is a valid tree cover.
inline std::vector<std::string> validate_cover(const DecompositionPlan& plan, const PairwiseMRF& mrf)
{
  std::vector<std::string> defects;
  const index n = mrf.num_nodes(), m = mrf.num_edges();
  std::vector<std::vector<Membership>> nodes_seen(n), edges_seen(m);

  std::vector<index> uf_parent(n);
  std::iota(uf_parent.begin(), uf_parent.end(), index{0});
  auto find = [&](index x) {
    while (uf_parent[x] != x)
      x = uf_parent[x] = uf_parent[uf_parent[x]];
    return x;
  };

  std::vector<char> in_tree(n, 0);
  for (index id = 0; id < plan.trees.size(); ++id) {
    const TreeSubgraph& t = plan.trees[id];
    const std::string name = "tree " + std::to_string(id);
    if (t.tree_id != id)
      defects.push_back(name + " has tree_id " + std::to_string(t.tree_id));
    if (t.nodes.empty()) {
      defects.push_back(name + " empty");
      continue;
    }

    bool ok = true;
    for (index i = 0; i < t.nodes.size(); ++i) {
      const index u = t.nodes[i];
      if (u >= n) {
        defects.push_back(name + " references nonexistent node " + std::to_string(u));
        ok = false;
        continue;
      }
      if (in_tree[u]) {
        defects.push_back(name + " lists node " + std::to_string(u) + " twice");
        ok = false;
      }
      in_tree[u] = 1;
      nodes_seen[u].push_back({id, i});
    }
    for (index j = 0; j < t.edges.size(); ++j) {
      const index e = t.edges[j];
      if (e >= m) {
        defects.push_back(name + " references nonexistent edge " + std::to_string(e));
        ok = false;
        continue;
      }
      edges_seen[e].push_back({id, j});
      const Edge& ed = mrf.edge(e);
      if (!in_tree[ed.u] || !in_tree[ed.v]) {
        defects.push_back(name + ": edge " + std::to_string(e) + " endpoint outside tree");
        ok = false;
      }
    }

    if (ok) {
      bool cyclic = false;
      for (index u : t.nodes)
        uf_parent[u] = u;
      for (index e : t.edges) {
        const index a = find(mrf.edge(e).u), b = find(mrf.edge(e).v);
        if (a == b)
          cyclic = true;
        else
          uf_parent[a] = b;
      }
      if (cyclic)
        defects.push_back(name + " cyclic");
      else if (t.edges.size() + 1 != t.nodes.size())
        defects.push_back(name + " disconnected");
      for (index u : t.nodes)
        uf_parent[u] = u;
    }
    for (index u : t.nodes)
      if (u < n)
        in_tree[u] = 0;
  }

  auto check = [&](const char* kind, index count, const std::vector<std::vector<Membership>>& seen,
                   const std::vector<std::vector<Membership>>& stored) {
    if (stored.size() != count) {
      defects.push_back(std::string(kind) + " membership table has wrong size");
      return;
    }
    for (index x = 0; x < count; ++x) {
      if (stored[x].empty())
        defects.push_back(std::string(kind) + " " + std::to_string(x) + " uncovered");
      if (!std::is_sorted(stored[x].begin(), stored[x].end(),
                          [](const Membership& a, const Membership& b) { return a.tree < b.tree; }))
        defects.push_back(std::string(kind) + " " + std::to_string(x) + " membership not sorted by tree");
      if (stored[x] != seen[x])
        defects.push_back(std::string(kind) + " " + std::to_string(x) + " membership inconsistent with trees");
    }
  };
  check("node", n, nodes_seen, plan.node_membership);
  check("edge", m, edges_seen, plan.edge_membership);
  return defects;
}

/// Fills theta so that sum over trees of rho_t * theta_t reproduces the
/// cost potentials exactly (each copy gets l / sum of rho over its holders).
inline DecompositionPlan split_potentials(const PairwiseMRF& cost_mrf, DecompositionPlan plan, const std::vector<double>& rho)
{
  if (rho.size() != plan.trees.size())
    throw dimension_error("expected " + std::to_string(plan.trees.size()) + " tree weights, got " + std::to_string(rho.size()));
  for (index id = 0; id < rho.size(); ++id) {
    if (!(rho[id] > 0.0) || !std::isfinite(rho[id]))
      throw dimension_error("tree " + std::to_string(id) + ": weight must be positive");
    plan.trees[id].rho = rho[id];
  }

  std::vector<double> node_weight(cost_mrf.num_nodes(), 0.0), edge_weight(cost_mrf.num_edges(), 0.0);
  for (index u = 0; u < cost_mrf.num_nodes(); ++u) {
    for (const Membership& mb : plan.node_membership[u])
      node_weight[u] += rho[mb.tree];
    if (!(node_weight[u] > 0.0))
      throw cover_error("node " + std::to_string(u) + " has zero replication weight");
  }
  for (index e = 0; e < cost_mrf.num_edges(); ++e) {
    for (const Membership& mb : plan.edge_membership[e])
      edge_weight[e] += rho[mb.tree];
    if (!(edge_weight[e] > 0.0))
      throw cover_error("edge " + std::to_string(e) + " has zero replication weight");
  }

  for (TreeSubgraph& t : plan.trees) {
    t.theta_node.resize(t.nodes.size());
    for (index i = 0; i < t.nodes.size(); ++i) {
      const table& l = cost_mrf.node_potential(t.nodes[i]);
      table& th = t.theta_node[i];
      th.resize(l.size());
      for (index a = 0; a < l.size(); ++a)
        th[a] = l[a] / node_weight[t.nodes[i]];
    }
    t.theta_edge.resize(t.edges.size());
    for (index j = 0; j < t.edges.size(); ++j) {
      const table& l = cost_mrf.edge_potential(t.edges[j]);
      table& th = t.theta_edge[j];
      th.resize(l.size());
      for (index a = 0; a < l.size(); ++a)
        th[a] = l[a] / edge_weight[t.edges[j]];
    }
  }
  return plan;
}

/// Number of scalar consensus equalities: sum over shared nodes of
/// |S_u| k_u plus sum over shared edges of |S_uv| k_u k_v.
inline index consensus_constraint_count(const DecompositionPlan& plan, const PairwiseMRF& mrf)
{
  index count = 0;
  for (index u = 0; u < mrf.num_nodes(); ++u)
    if (plan.node_membership[u].size() > 1)
      count += plan.node_membership[u].size() * mrf.card(u);
  for (index e = 0; e < mrf.num_edges(); ++e)
    if (plan.edge_membership[e].size() > 1)
      count += plan.edge_membership[e].size() * mrf.card(mrf.edge(e).u) * mrf.card(mrf.edge(e).v);
  return count;
}

} // namespace bethe

#endif
