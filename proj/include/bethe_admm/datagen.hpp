#ifndef BETHE_ADMM_DATAGEN_HPP
#define BETHE_ADMM_DATAGEN_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "decomposition.hpp"
#include "mrf.hpp"
#include "random.hpp"

namespace bethe {

namespace detail {

// Stream tags. Every node and edge draws from its own stream, so adding or
// removing edges never shifts the unary draws.
enum : std::uint64_t { tag_unary = 1, tag_potts = 2, tag_cross = 3, tag_prufer = 4, tag_pair = 5 };

inline table uniform_unary(std::uint64_t seed, index node, index k, double a)
{
  Rng rng = Rng::stream(seed, tag_unary, node);
  table t(k);
  for (double& x : t)
    x = rng.uniform(-a, a);
  return t;
}

inline table potts_table(std::uint64_t seed, index num_nodes, const Edge& e, index k)
{
  Rng rng = Rng::stream(seed, tag_potts, e.u * num_nodes + e.v);
  const double b = rng.uniform(-1.0, 1.0);
  table t(k * k, 0.0);
  for (index a = 0; a < k; ++a)
    t[a * k + a] = b;
  return t;
}

} // namespace detail

/// m x n x t grid with 6-neighbourhood. Node (x, y, z) has id
/// x + m (y + n z); unaries uniform in [-a, a]; Potts edges with b_uv on the
/// diagonal, b_uv uniform in [-1, 1].
inline PairwiseMRF potts_grid3d(index m, index n, index t, index k, double a, std::uint64_t seed)
{
  if (m < 1 || n < 1 || t < 1)
    throw dimension_error("grid dimensions must be at least 1");
  if (k < 2)
    throw dimension_error("grid needs at least 2 labels");
  if (!(a > 0.0))
    throw dimension_error("unary range must be positive");

  const index count = m * n * t;
  auto id = [&](index x, index y, index z) { return x + m * (y + n * z); };

  std::vector<Edge> edges;
  for (index z = 0; z < t; ++z)
    for (index y = 0; y < n; ++y)
      for (index x = 0; x < m; ++x) {
        const index u = id(x, y, z);
        if (x + 1 < m)
          edges.push_back({u, id(x + 1, y, z)});
        if (y + 1 < n)
          edges.push_back({u, id(x, y + 1, z)});
        if (z + 1 < t)
          edges.push_back({u, id(x, y, z + 1)});
      }
  std::sort(edges.begin(), edges.end(),
            [](const Edge& p, const Edge& q) { return std::pair(p.u, p.v) < std::pair(q.u, q.v); });

  std::vector<table> unary(count), pair(edges.size());
  for (index u = 0; u < count; ++u)
    unary[u] = detail::uniform_unary(seed, u, k, a);
  for (index e = 0; e < edges.size(); ++e)
    pair[e] = detail::potts_table(seed, count, edges[e], k);
  return PairwiseMRF(std::vector<index>(count, k), std::move(edges), std::move(unary), std::move(pair));
}

struct TreeCrossInstance {
  PairwiseMRF mrf;
  DecompositionPlan plan;
};

/// `trees` complete-binary trees of `size` nodes, joined by cross edges.
///
/// Tree i owns nodes [i*size, (i+1)*size); node j's parent is (j-1)/2. For
/// every ordered pair (i, j), `cross` source nodes are drawn from tree i with
/// replacement and `cross` distinct targets from tree j, and paired up. The
/// plan's tree i is the original tree i plus all its targets in other trees
/// and the connecting edges. A cross edge drawn for both (i, j) and (j, i)
/// is stored once and shared by both augmented trees.
inline TreeCrossInstance tree_cross_graph(index trees, index size, index cross, index k, double a, std::uint64_t seed)
{
  if (trees < 2)
    throw dimension_error("tree-cross graph needs at least 2 trees");
  if (size < 1)
    throw dimension_error("trees need at least one node");
  if (cross > size)
    throw dimension_error("cross sample count " + std::to_string(cross) + " exceeds tree size " + std::to_string(size));
  if (k < 2)
    throw dimension_error("need at least 2 labels");
  if (!(a > 0.0))
    throw dimension_error("unary range must be positive");

  const index count = trees * size;
  std::vector<Edge> edges;
  std::vector<TreeSpec> specs(trees);
  for (index i = 0; i < trees; ++i) {
    for (index j = 0; j < size; ++j)
      specs[i].nodes.push_back(i * size + j);
    for (index j = 1; j < size; ++j) {
      specs[i].edges.push_back(edges.size());
      edges.push_back({i * size + (j - 1) / 2, i * size + j});
    }
  }

  std::map<std::pair<index, index>, index> cross_ids;
  std::vector<index> pool(size);
  for (index i = 0; i < trees; ++i)
    for (index j = 0; j < trees; ++j) {
      if (i == j)
        continue;
      Rng rng = Rng::stream(seed, detail::tag_cross, i * trees + j);
      std::vector<index> src(cross);
      for (index& s : src)
        s = static_cast<index>(rng.below(size));
      std::iota(pool.begin(), pool.end(), index{0});
      for (index r = 0; r < cross; ++r)
        std::swap(pool[r], pool[r + static_cast<index>(rng.below(size - r))]);

      for (index r = 0; r < cross; ++r) {
        const index from = i * size + src[r];
        const index to = j * size + pool[r];
        const std::pair key(std::min(from, to), std::max(from, to));
        auto [it, fresh] = cross_ids.try_emplace(key, edges.size());
        if (fresh)
          edges.push_back({key.first, key.second});
        specs[i].nodes.push_back(to);
        specs[i].edges.push_back(it->second);
      }
    }

  std::vector<table> unary(count), pair(edges.size());
  for (index u = 0; u < count; ++u)
    unary[u] = detail::uniform_unary(seed, u, k, a);
  for (index e = 0; e < edges.size(); ++e)
    pair[e] = detail::potts_table(seed, count, edges[e], k);

  TreeCrossInstance out{PairwiseMRF(std::vector<index>(count, k), std::move(edges), std::move(unary), std::move(pair)), {}};
  out.plan = make_plan(out.mrf, std::move(specs));
  return out;
}

/// Uniform random spanning tree (random Prüfer sequence) over nodes with the
/// given cardinalities; every potential entry uniform in [-a, a].
inline PairwiseMRF random_tree_mrf(const std::vector<index>& cards, double a, std::uint64_t seed)
{
  const index n = cards.size();
  if (n < 1)
    throw dimension_error("random tree needs at least one node");

  std::vector<Edge> edges;
  if (n == 2) {
    edges.push_back({0, 1});
  } else if (n > 2) {
    Rng rng = Rng::stream(seed, detail::tag_prufer, 0);
    std::vector<index> code(n - 2);
    for (index& c : code)
      c = static_cast<index>(rng.below(n));
    std::vector<index> remaining(n, 1);
    for (index c : code)
      ++remaining[c];
    std::set<index> leaves;
    for (index u = 0; u < n; ++u)
      if (remaining[u] == 1)
        leaves.insert(u);
    for (index c : code) {
      const index leaf = *leaves.begin();
      leaves.erase(leaves.begin());
      edges.push_back({std::min(leaf, c), std::max(leaf, c)});
      if (--remaining[c] == 1)
        leaves.insert(c);
    }
    const index u = *leaves.begin(), v = *std::next(leaves.begin());
    edges.push_back({u, v});
  }

  std::vector<table> unary(n), pair(edges.size());
  for (index u = 0; u < n; ++u)
    unary[u] = detail::uniform_unary(seed, u, cards[u], a);
  for (index e = 0; e < edges.size(); ++e) {
    Rng rng = Rng::stream(seed, detail::tag_pair, edges[e].u * n + edges[e].v);
    pair[e].resize(cards[edges[e].u] * cards[edges[e].v]);
    for (double& x : pair[e])
      x = rng.uniform(-a, a);
  }
  return PairwiseMRF(cards, std::move(edges), std::move(unary), std::move(pair));
}

inline PairwiseMRF random_tree_mrf(index n, index k, double a, std::uint64_t seed)
{
  return random_tree_mrf(std::vector<index>(n, k), a, seed);
}

} // namespace bethe

#endif
