#ifndef BETHE_ADMM_IO_HPP
#define BETHE_ADMM_IO_HPP

// Text formats. All are line based, whitespace delimited and independent of
// the C++ locale (numbers go through std::to_chars / std::from_chars).
//
// Model ("PMRF"):
//   PMRF
//   <num nodes>
//   <k_0> <k_1> ...
//   <num edges>
//   <u> <v>                one line per edge
//   <f_u(0)> ...           one line per node
//   <f_uv(0,0)> ...        one line per edge, row-major
//
// Plan ("PLAN"):
//   PLAN
//   <num trees>
//   TREE <id>
//   <global node ids>
//   <global edge ids>      (empty line for a single-node tree)
//
// UAI "MARKOV" files with unary and pairwise factors are also accepted by
// read_model; tables are converted to natural logs.

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "decomposition.hpp"
#include "mrf.hpp"
#include "solver.hpp"

namespace bethe {

namespace detail {

inline std::string format_double(double x)
{
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string format_double17(double x)
{
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string_view> split(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
      ++i;
    const std::size_t start = i;
    while (i < line.size() && !(line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
      ++i;
    if (i > start)
      out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline bool parse_number(std::string_view tok, double& out)
{
  if (!tok.empty() && tok.front() == '+')
    tok.remove_prefix(1);
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

inline bool parse_number(std::string_view tok, index& out)
{
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

class line_reader {
public:
  explicit line_reader(std::istream& in) : in_(in) {}

  std::size_t line() const { return line_; }

  std::vector<std::string_view> next(const std::string& what)
  {
    if (!std::getline(in_, buf_))
      throw parse_error(line_ + 1, "unexpected end of file, expected " + what);
    ++line_;
    return split(buf_);
  }

  template<typename T>
  std::vector<T> numbers(const std::string& what, std::size_t expected)
  {
    const auto toks = next(what);
    if (toks.size() != expected)
      throw parse_error(line_, what + ": expected " + std::to_string(expected) + " values, got " + std::to_string(toks.size()));
    std::vector<T> out(expected);
    for (std::size_t i = 0; i < expected; ++i)
      if (!parse_number(toks[i], out[i]))
        throw parse_error(line_, what + ": cannot parse '" + std::string(toks[i]) + "'");
    return out;
  }

  index count(const std::string& what) { return numbers<index>(what, 1).front(); }

private:
  std::istream& in_;
  std::string buf_;
  std::size_t line_ = 0;
};

// Whitespace tokens with the line each came from.
class token_reader {
public:
  explicit token_reader(std::istream& in)
  {
    std::string buf;
    std::size_t line = 0;
    while (std::getline(in, buf)) {
      ++line;
      for (auto tok : split(buf))
        toks_.push_back({std::string(tok), line});
    }
    last_line_ = line;
  }

  bool done() const { return pos_ >= toks_.size(); }
  std::size_t line() const { return done() ? last_line_ : toks_[pos_].second; }
  std::size_t remaining() const { return toks_.size() - pos_; }

  const std::string& next(const std::string& what)
  {
    if (done())
      throw parse_error(last_line_, "unexpected end of file, expected " + what);
    return toks_[pos_++].first;
  }

  template<typename T>
  T number(const std::string& what)
  {
    const std::size_t at = line();
    const std::string& tok = next(what);
    T out{};
    if (!parse_number(tok, out))
      throw parse_error(at, what + ": cannot parse '" + tok + "'");
    return out;
  }

private:
  std::vector<std::pair<std::string, std::size_t>> toks_;
  std::size_t pos_ = 0;
  std::size_t last_line_ = 0;
};

inline void write_row(std::ostream& out, const table& t)
{
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i)
      out << ' ';
    out << format_double(t[i]);
  }
  out << '\n';
}

inline std::ifstream open_in(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw error("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw error("cannot open '" + path + "' for writing");
  return out;
}

inline void finish(std::ofstream& out, const std::string& path)
{
  out.flush();
  if (!out)
    throw error("write to '" + path + "' failed");
}

} // namespace detail

inline void format_model(std::ostream& out, const PairwiseMRF& mrf)
{
  out << "PMRF\n" << mrf.num_nodes() << '\n';
  for (index u = 0; u < mrf.num_nodes(); ++u)
    out << (u ? " " : "") << mrf.card(u);
  out << '\n' << mrf.num_edges() << '\n';
  for (const Edge& e : mrf.edges())
    out << e.u << ' ' << e.v << '\n';
  for (const table& t : mrf.node_potentials())
    detail::write_row(out, t);
  for (const table& t : mrf.edge_potentials())
    detail::write_row(out, t);
}

inline PairwiseMRF parse_native_model(std::istream& in)
{
  detail::line_reader r(in);
  const auto head = r.next("header");
  if (head.size() != 1 || head.front() != "PMRF")
    throw parse_error(r.line(), "malformed header, expected 'PMRF'");
  const index n = r.count("node count");
  std::vector<index> cards = r.numbers<index>("cardinalities", n);
  const index m = r.count("edge count");
  std::vector<Edge> edges(m);
  for (index e = 0; e < m; ++e) {
    const auto uv = r.numbers<index>("edge " + std::to_string(e), 2);
    if (uv[0] >= n || uv[1] >= n)
      throw parse_error(r.line(), "edge " + std::to_string(e) + ": endpoint out of range");
    edges[e] = {uv[0], uv[1]};
  }
  std::vector<table> node(n), pair(m);
  for (index u = 0; u < n; ++u)
    node[u] = r.numbers<double>("table for node " + std::to_string(u), cards[u]);
  for (index e = 0; e < m; ++e)
    pair[e] = r.numbers<double>("table for edge " + std::to_string(e), cards[edges[e].u] * cards[edges[e].v]);
  try {
    return PairwiseMRF(std::move(cards), std::move(edges), std::move(node), std::move(pair));
  } catch (const dimension_error& ex) {
    throw parse_error(r.line(), ex.what());
  }
}

/// UAI MARKOV network with factors of one or two variables. Factors on the
/// same scope are multiplied (their logs added).
inline PairwiseMRF parse_uai_model(std::istream& in)
{
  detail::token_reader r(in);
  if (r.next("header") != "MARKOV")
    throw parse_error(1, "malformed header, expected 'MARKOV'");
  const index n = r.number<index>("variable count");
  std::vector<index> cards(n);
  for (index u = 0; u < n; ++u)
    cards[u] = r.number<index>("cardinality of variable " + std::to_string(u));
  const index c = r.number<index>("clique count");

  std::vector<std::vector<index>> scopes(c);
  for (index i = 0; i < c; ++i) {
    const std::size_t at = r.line();
    const index size = r.number<index>("size of clique " + std::to_string(i));
    if (size < 1 || size > 2)
      throw parse_error(at, "clique " + std::to_string(i) + " has " + std::to_string(size) +
                            " variables; only unary and pairwise factors are supported");
    for (index j = 0; j < size; ++j) {
      const index v = r.number<index>("variable of clique " + std::to_string(i));
      if (v >= n)
        throw parse_error(at, "clique " + std::to_string(i) + ": variable " + std::to_string(v) + " out of range");
      scopes[i].push_back(v);
    }
    if (size == 2 && scopes[i][0] == scopes[i][1])
      throw parse_error(at, "clique " + std::to_string(i) + ": repeated variable");
  }

  std::vector<table> node(n);
  for (index u = 0; u < n; ++u)
    node[u].assign(cards[u], 0.0);
  std::map<std::pair<index, index>, table> pairs;

  for (index i = 0; i < c; ++i) {
    const std::string what = "table for clique " + std::to_string(i);
    const std::size_t at = r.line();
    const index expected = scopes[i].size() == 1 ? cards[scopes[i][0]] : cards[scopes[i][0]] * cards[scopes[i][1]];
    const index declared = r.number<index>(what);
    if (declared != expected)
      throw parse_error(at, what + ": expected " + std::to_string(expected) + " values, got " + std::to_string(declared));
    if (r.remaining() < expected)
      throw parse_error(r.line(), what + ": expected " + std::to_string(expected) + " values, got " + std::to_string(r.remaining()));
    table logs(expected);
    for (index a = 0; a < expected; ++a) {
      const std::size_t line = r.line();
      const double p = r.number<double>(what);
      if (!(p > 0.0) || !std::isfinite(p))
        throw parse_error(line, what + ": entry " + std::to_string(a) + " is not positive");
      logs[a] = std::log(p);
    }

    if (scopes[i].size() == 1) {
      for (index a = 0; a < expected; ++a)
        node[scopes[i][0]][a] += logs[a];
      continue;
    }
    index u = scopes[i][0], v = scopes[i][1];
    if (u > v) {
      table t(expected);
      for (index a = 0; a < cards[u]; ++a)
        for (index b = 0; b < cards[v]; ++b)
          t[b * cards[u] + a] = logs[a * cards[v] + b];
      logs = std::move(t);
      std::swap(u, v);
    }
    auto [it, fresh] = pairs.try_emplace({u, v}, std::move(logs));
    if (!fresh)
      for (index a = 0; a < expected; ++a)
        it->second[a] += logs[a];
  }

  std::vector<Edge> edges;
  std::vector<table> pair;
  for (auto& [key, t] : pairs) {
    edges.push_back({key.first, key.second});
    pair.push_back(std::move(t));
  }
  try {
    return PairwiseMRF(std::move(cards), std::move(edges), std::move(node), std::move(pair));
  } catch (const dimension_error& ex) {
    throw parse_error(r.line(), ex.what());
  }
}

/// Dispatches on the first token: PMRF (native) or MARKOV (UAI).
inline PairwiseMRF parse_model(std::istream& in)
{
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::istringstream first(text);
  std::string head;
  first >> head;
  std::istringstream body(text);
  if (head == "PMRF")
    return parse_native_model(body);
  if (head == "MARKOV")
    return parse_uai_model(body);
  throw parse_error(1, "malformed header, expected 'PMRF' or 'MARKOV'");
}

inline PairwiseMRF read_model(const std::string& path)
{
  auto in = detail::open_in(path);
  return parse_model(in);
}

inline void write_model(const PairwiseMRF& mrf, const std::string& path)
{
  auto out = detail::open_out(path);
  format_model(out, mrf);
  detail::finish(out, path);
}

inline void format_plan(std::ostream& out, const DecompositionPlan& plan)
{
  out << "PLAN\n" << plan.trees.size() << '\n';
  for (const TreeSubgraph& t : plan.trees) {
    out << "TREE " << t.tree_id << '\n';
    for (index i = 0; i < t.nodes.size(); ++i)
      out << (i ? " " : "") << t.nodes[i];
    out << '\n';
    for (index j = 0; j < t.edges.size(); ++j)
      out << (j ? " " : "") << t.edges[j];
    out << '\n';
  }
}

/// Parses a plan and checks it against `mrf`; cover defects are reported
/// verbatim in the thrown cover_error.
inline DecompositionPlan parse_plan(std::istream& in, const PairwiseMRF& mrf)
{
  detail::line_reader r(in);
  const auto head = r.next("header");
  if (head.size() != 1 || head.front() != "PLAN")
    throw parse_error(r.line(), "malformed header, expected 'PLAN'");
  const index count = r.count("tree count");

  std::vector<TreeSpec> specs(count);
  DecompositionPlan raw;
  raw.trees.resize(count);
  for (index id = 0; id < count; ++id) {
    const auto tag = r.next("tree header");
    index got = 0;
    if (tag.size() != 2 || tag[0] != "TREE" || !detail::parse_number(tag[1], got) || got != id)
      throw parse_error(r.line(), "expected 'TREE " + std::to_string(id) + "'");
    for (auto tok : r.next("node ids of tree " + std::to_string(id))) {
      index v = 0;
      if (!detail::parse_number(tok, v))
        throw parse_error(r.line(), "tree " + std::to_string(id) + ": bad node id '" + std::string(tok) + "'");
      specs[id].nodes.push_back(v);
    }
    for (auto tok : r.next("edge ids of tree " + std::to_string(id))) {
      index e = 0;
      if (!detail::parse_number(tok, e))
        throw parse_error(r.line(), "tree " + std::to_string(id) + ": bad edge id '" + std::string(tok) + "'");
      specs[id].edges.push_back(e);
    }
    raw.trees[id].tree_id = id;
    raw.trees[id].nodes = specs[id].nodes;
    raw.trees[id].edges = specs[id].edges;
  }

  raw.node_membership.resize(mrf.num_nodes());
  raw.edge_membership.resize(mrf.num_edges());
  for (index id = 0; id < count; ++id) {
    for (index i = 0; i < specs[id].nodes.size(); ++i)
      if (specs[id].nodes[i] < mrf.num_nodes())
        raw.node_membership[specs[id].nodes[i]].push_back({id, i});
    for (index j = 0; j < specs[id].edges.size(); ++j)
      if (specs[id].edges[j] < mrf.num_edges())
        raw.edge_membership[specs[id].edges[j]].push_back({id, j});
  }
  if (const auto defects = validate_cover(raw, mrf); !defects.empty()) {
    std::string msg = "invalid plan:";
    for (const auto& d : defects)
      msg += "\n  " + d;
    throw cover_error(msg);
  }
  return make_plan(mrf, std::move(specs));
}

inline DecompositionPlan read_plan(const std::string& path, const PairwiseMRF& mrf)
{
  auto in = detail::open_in(path);
  return parse_plan(in, mrf);
}

inline void write_plan(const DecompositionPlan& plan, const std::string& path)
{
  auto out = detail::open_out(path);
  format_plan(out, plan);
  detail::finish(out, path);
}

inline constexpr std::string_view trace_header =
  "iter,seconds,lp_obj,decoded_value,max_violation,primal_residual,dual_bound,ergodic_consensus";

inline void format_trace(std::ostream& out, const IterationTrace& trace)
{
  out << trace_header << '\n';
  for (const TraceRow& r : trace) {
    out << r.iter;
    for (double x : {r.seconds, r.lp_objective, r.decoded_value, r.max_violation, r.primal_residual, r.dual_bound,
                     r.ergodic_consensus})
      out << ',' << detail::format_double17(x);
    out << '\n';
  }
}

inline void write_trace(const IterationTrace& trace, const std::string& path)
{
  auto out = detail::open_out(path);
  format_trace(out, trace);
  detail::finish(out, path);
}

inline void write_assignment(const Assignment& x, const std::string& path)
{
  auto out = detail::open_out(path);
  for (index a : x)
    out << a << '\n';
  detail::finish(out, path);
}

inline Assignment read_assignment(const std::string& path)
{
  auto in = detail::open_in(path);
  Assignment x;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto toks = detail::split(line);
    if (toks.empty())
      continue;
    index a = 0;
    if (toks.size() != 1 || !detail::parse_number(toks[0], a))
      throw parse_error(no, "expected one label per line");
    x.push_back(a);
  }
  return x;
}

} // namespace bethe

#endif
