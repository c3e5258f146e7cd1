#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cocyclelab/commands.hpp"
#include "cocyclelab/errors.hpp"

namespace {

void add_common(CLI::App* cmd, cocyclelab::CommandOptions& opts, bool needs_scenario = true) {
  auto* scenario = cmd->add_option("--scenario", opts.scenario, "scenario file (JSON)");
  if (needs_scenario) scenario->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", opts.out, "CSV output path");
  cmd->add_option("--horizon", opts.horizon, "number of iterates");
  cmd->add_option("--tol", opts.tol, "decay tolerance");
  cmd->add_option("--seed-override", opts.seed_override, "replace every seed in the scenario");
  cmd->add_option("--workers", opts.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--omegas", opts.omegas, "environment points sampled for infinite driving");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixing, exactness and asymptotic periodicity of random Markov operator cocycles"};
  app.require_subcommand(1);
  cocyclelab::CommandOptions opts;

  auto* mixing = app.add_subcommand("run-mixing", "correlation curves under the four mixing notions");
  add_common(mixing, opts);
  mixing->add_option("--notion", opts.notion, "prior-hom, post-hom, prior-inhom, post-inhom or all");

  add_common(app.add_subcommand("run-exactness", "norm, dual-ball and tail-partition exactness tests"), opts);

  auto* asymp = app.add_subcommand("run-asymp", "asymptotic periodicity decomposition");
  add_common(asymp, opts);
  asymp->add_option("--rmax", opts.r_max, "largest number of components searched");

  auto* qc = app.add_subcommand("run-qc", "quasi-constrictivity probe");
  add_common(qc, opts);
  qc->add_option("--eps", opts.eps, "comma-separated eps values")->delimiter(',');

  auto* skew = app.add_subcommand("run-skew", "skew-product mixing discrepancy");
  add_common(skew, opts);
  skew->add_option("--sets", opts.sets, "set-pair file (JSON)")->check(CLI::ExistingFile);

  auto* ce = app.add_subcommand("run-counterexample", "inhomogeneous correlation along a permutation orbit");
  add_common(ce, opts, false);
  ce->add_option("--k", opts.k, "half the bit count; 2^(2k) cells")->check(CLI::Range(2, 12));

  add_common(app.add_subcommand("report", "all verdicts plus the cross-consistency checks"), opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cocyclelab::kExitUsage;
  }

  try {
    return cocyclelab::run_command(app.get_subcommands().front()->get_name(), opts, std::cout);
  } catch (const cocyclelab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cocyclelab::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cocyclelab::kExitUsage;
  }
}
