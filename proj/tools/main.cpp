#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace agefire;
using namespace agefire::cli;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> init, out, traj, sim, lightning, suite;
  std::optional<double> dt, t_max, merge_eps, lambda_drift_budget, truncation;
  std::optional<std::size_t> n, seeds;
  std::optional<std::uint64_t> seed;
  std::optional<int> atoms;
  std::vector<double> checkpoints, window;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "JSON config file; flags override its keys");
  app->add_option("--out", o.out, "output directory");
}

void add_solver(CLI::App* app, Overrides& o) {
  app->add_option("--init", o.init, "initial measure: twoatom:<p>, threeatom:<n>, dirac:<a>, fixedpoint[:<atoms>[:<T>]], csv:<path>");
  app->add_option("--t-max", o.t_max, "final time");
  app->add_option("--dt", o.dt, "time step");
  app->add_option("--checkpoints", o.checkpoints, "checkpoint times (default: ten equal intervals)")->delimiter(',');
  app->add_option("--merge-eps", o.merge_eps, "atom merging W1 budget per unit time");
  app->add_option("--lambda-drift-budget", o.lambda_drift_budget, "largest tolerated |lambda - 1|");
}

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.init) c.init = *o.init;
  if (o.out) c.out = *o.out;
  if (o.traj) c.traj = *o.traj;
  if (o.sim) c.sim = *o.sim;
  if (o.suite) c.suite = *o.suite;
  if (o.dt) c.dt = *o.dt;
  if (o.t_max) c.t_max = *o.t_max;
  if (o.merge_eps) c.merge_eps = *o.merge_eps;
  if (o.lambda_drift_budget) c.lambda_drift_budget = *o.lambda_drift_budget;
  if (o.truncation) c.truncation = *o.truncation;
  if (o.atoms) c.atoms = *o.atoms;
  if (o.n) c.n = *o.n;
  if (!o.checkpoints.empty()) c.checkpoints = o.checkpoints;
  if (!o.window.empty()) c.window = o.window;
  if (o.lightning) {
    if (*o.lightning == "auto") {
      c.lambda_n.reset();
    } else {
      try {
        c.lambda_n = std::stod(*o.lightning);
      } catch (const std::exception&) {
        throw InputError("--lightning expects a rate or 'auto'");
      }
    }
  }
  if (o.seeds) {
    const std::uint64_t first = o.seed.value_or(1);
    c.seeds.clear();
    for (std::uint64_t s = 0; s < *o.seeds; ++s) c.seeds.push_back(first + s);
  } else if (o.seed) {
    c.seeds = {*o.seed};
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Age-structured forest fire: critical age evolution solver and graph simulator"};
  app.require_subcommand(1);
  Overrides o;

  auto* solve_cmd = app.add_subcommand("solve", "integrate the age evolution and write a trajectory");
  add_common(solve_cmd, o);
  add_solver(solve_cmd, o);

  auto* sim_cmd = app.add_subcommand("simulate", "run the forest fire graph process over seeds");
  add_common(sim_cmd, o);
  sim_cmd->add_option("--init", o.init, "initial age distribution (preset name)");
  sim_cmd->add_option("--n", o.n, "vertex count");
  sim_cmd->add_option("--lightning", o.lightning, "lightning rate per vertex, or 'auto' for n^-1/2");
  sim_cmd->add_option("--t-max", o.t_max, "final time");
  sim_cmd->add_option("--seeds", o.seeds, "number of replicas");
  sim_cmd->add_option("--seed", o.seed, "first seed (default 1)");
  sim_cmd->add_option("--checkpoints", o.checkpoints, "checkpoint times")->delimiter(',');

  auto* cmp_cmd = app.add_subcommand("compare", "compare simulation snapshots with a solved trajectory");
  add_common(cmp_cmd, o);
  cmp_cmd->add_option("--traj", o.traj, "directory written by solve");
  cmp_cmd->add_option("--sim", o.sim, "directory written by simulate");
  cmp_cmd->add_option("--window", o.window, "averaging window t0,t1 for the burning rate")->delimiter(',');

  auto* val_cmd = app.add_subcommand("validate", "run invariant suites");
  val_cmd->add_option("suite", o.suite, "spectral | metric | roundtrip | evolution | all");
  val_cmd->add_option("--config", o.config, "JSON config file");

  auto* gel_cmd = app.add_subcommand("gel", "print the gelation time of an initial measure");
  gel_cmd->add_option("--init", o.init, "initial measure");
  gel_cmd->add_option("--config", o.config, "JSON config file");

  auto* fp_cmd = app.add_subcommand("fixedpoint", "write the discretized stationary measure and its eigenpair");
  add_common(fp_cmd, o);
  fp_cmd->add_option("--atoms", o.atoms, "atom count");
  fp_cmd->add_option("--truncation", o.truncation, "truncation point");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInputError;
  }

  try {
    const RunConfig c = resolve(o);
    if (*solve_cmd) return cmd_solve(c, std::cout);
    if (*sim_cmd) return cmd_simulate(c, std::cout);
    if (*cmp_cmd) return cmd_compare(c, std::cout);
    if (*val_cmd) return cmd_validate(c, std::cout);
    if (*gel_cmd) return cmd_gel(c, std::cout);
    if (*fp_cmd) return cmd_fixedpoint(c, std::cout);
  } catch (const AccuracyError& e) {
    std::cerr << "accuracy error: " << e.what() << '\n';
    return kAccuracyError;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}
