// Command-line front end: generate instances, solve, brute-force, evaluate.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bethe_admm/bethe_admm.hpp"

namespace {

struct GenPotts {
  std::size_t m = 4, n = 4, t = 4, k = 3;
  double a = 1.0;
  std::uint64_t seed = 1;
  std::string out;
};

struct GenCross {
  std::size_t trees = 4, size = 15, cross = 3, k = 3;
  double a = 1.0;
  std::uint64_t seed = 1;
  std::string out, plan;
};

struct Solve {
  std::string model;
  std::string decomp = "cover";
  std::uint64_t cover_seed = 0;
  bethe::SolverConfig config;
  bool no_timing = false;
  std::string trace, out;
};

int do_solve(const Solve& opt)
{
  const bethe::PairwiseMRF mrf = bethe::read_model(opt.model);
  bethe::DecompositionPlan plan;
  if (opt.decomp == "edge")
    plan = bethe::edge_decomposition(mrf);
  else if (opt.decomp == "cover")
    plan = bethe::tree_cover(mrf, opt.cover_seed);
  else
    plan = bethe::read_plan(opt.decomp, mrf);

  bethe::SolverConfig config = opt.config;
  config.record_wall_time = !opt.no_timing;
  const bethe::RunResult r = bethe::run(mrf, plan, config);

  if (!opt.trace.empty())
    bethe::write_trace(r.trace, opt.trace);
  if (!opt.out.empty())
    bethe::write_assignment(r.assignment, opt.out);

  const bool converged = r.status == bethe::RunStatus::converged;
  std::cout << "status " << (converged ? "converged" : "max_iters_reached") << '\n'
            << "iterations " << r.state.iter << '\n'
            << "trees " << plan.trees.size() << '\n'
            << "alpha " << bethe::detail::format_double(r.alpha) << '\n'
            << "value " << bethe::detail::format_double(r.value) << '\n';
  if (!r.trace.empty()) {
    const bethe::TraceRow& last = r.trace.back();
    std::cout << "lp_obj " << bethe::detail::format_double(last.lp_objective) << '\n'
              << "dual_bound " << bethe::detail::format_double(last.dual_bound) << '\n'
              << "max_violation " << bethe::detail::format_double(last.max_violation) << '\n'
              << "primal_residual " << bethe::detail::format_double(last.primal_residual) << '\n';
  }
  if (opt.out.empty())
    for (std::size_t u = 0; u < r.assignment.size(); ++u)
      std::cout << r.assignment[u] << '\n';
  return converged ? 0 : 2;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"MAP inference for pairwise MRFs by Bethe-ADMM"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "generate a synthetic instance");
  gen->require_subcommand(1);

  GenPotts potts;
  auto* gp = gen->add_subcommand("potts3d", "3-D grid with Potts edges");
  gp->add_option("--m", potts.m, "grid extent along x")->capture_default_str();
  gp->add_option("--n", potts.n, "grid extent along y")->capture_default_str();
  gp->add_option("--t", potts.t, "grid extent along z")->capture_default_str();
  gp->add_option("--k", potts.k, "labels per node")->capture_default_str();
  gp->add_option("--a", potts.a, "unary range [-a, a]")->capture_default_str();
  gp->add_option("--seed", potts.seed)->capture_default_str();
  gp->add_option("-o,--out", potts.out, "model file")->required();

  GenCross cross;
  auto* gc = gen->add_subcommand("treecross", "binary trees joined by random cross edges");
  gc->add_option("--trees", cross.trees, "number of trees")->capture_default_str();
  gc->add_option("--size", cross.size, "nodes per tree")->capture_default_str();
  gc->add_option("--cross", cross.cross, "cross edges per ordered tree pair")->capture_default_str();
  gc->add_option("--k", cross.k, "labels per node")->capture_default_str();
  gc->add_option("--a", cross.a, "unary range [-a, a]")->capture_default_str();
  gc->add_option("--seed", cross.seed)->capture_default_str();
  gc->add_option("-o,--out", cross.out, "model file")->required();
  gc->add_option("--plan", cross.plan, "plan file for the augmented trees");

  Solve solve;
  auto* sv = app.add_subcommand("solve", "run the solver");
  sv->add_option("model", solve.model, "model file (PMRF or UAI MARKOV)")->required();
  sv->add_option("--decomp", solve.decomp, "edge, cover, or a plan file")->capture_default_str();
  sv->add_option("--cover-seed", solve.cover_seed, "neighbour shuffling seed for --decomp cover")->capture_default_str();
  sv->add_option("--alpha", solve.config.alpha)->capture_default_str();
  sv->add_option("--beta", solve.config.beta)->capture_default_str();
  sv->add_option("--rho", solve.config.rho)->capture_default_str();
  sv->add_option("--tol", solve.config.tol)->capture_default_str();
  sv->add_option("--gap-tol", solve.config.gap_tol, "also require |dual_bound - lp_objective| <= this before stopping")
    ->capture_default_str();
  sv->add_option("--max-iters", solve.config.max_iters)->capture_default_str();
  sv->add_option("--threads", solve.config.threads)->capture_default_str();
  sv->add_option("--trace-every", solve.config.trace_every)->capture_default_str();
  sv->add_flag("--safe-alpha", solve.config.safe_alpha, "raise alpha to the per-tree step-size bound");
  sv->add_flag("--no-timing", solve.no_timing, "write 0 in the trace seconds column");
  sv->add_option("--trace", solve.trace, "trace CSV");
  sv->add_option("--out", solve.out, "assignment file");

  std::string oracle_model;
  auto* orc = app.add_subcommand("oracle", "exact MAP by enumeration");
  orc->add_option("model", oracle_model)->required();

  std::string eval_model, eval_assignment;
  auto* ev = app.add_subcommand("eval", "score an assignment");
  ev->add_option("model", eval_model)->required();
  ev->add_option("assignment", eval_assignment)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gp->parsed()) {
      bethe::write_model(bethe::potts_grid3d(potts.m, potts.n, potts.t, potts.k, potts.a, potts.seed), potts.out);
      return 0;
    }
    if (gc->parsed()) {
      const auto inst = bethe::tree_cross_graph(cross.trees, cross.size, cross.cross, cross.k, cross.a, cross.seed);
      bethe::write_model(inst.mrf, cross.out);
      if (!cross.plan.empty())
        bethe::write_plan(inst.plan, cross.plan);
      return 0;
    }
    if (sv->parsed())
      return do_solve(solve);
    if (orc->parsed()) {
      const auto best = bethe::brute_force_map(bethe::read_model(oracle_model));
      std::cout << "value " << bethe::detail::format_double(best.value) << '\n';
      for (auto x : best.labels)
        std::cout << x << '\n';
      return 0;
    }
    if (ev->parsed()) {
      const auto mrf = bethe::read_model(eval_model);
      std::cout << bethe::detail::format_double(bethe::eval_assignment(mrf, bethe::read_assignment(eval_assignment)))
                << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
