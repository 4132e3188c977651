#pragma once

// Subcommand implementations for the agefire command-line tool. Each command
// takes a resolved RunConfig and an output stream and returns an exit code.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "agefire/errors.hpp"
#include "agefire/evolution.hpp"
#include "agefire/fire_sim.hpp"
#include "agefire/fixed_point.hpp"
#include "agefire/io.hpp"
#include "agefire/presets.hpp"
#include "agefire/spectral.hpp"
#include "agefire/validation.hpp"

namespace agefire::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum ExitCode : int { kOk = 0, kInputError = 2, kAccuracyError = 3, kValidationFailure = 4 };

struct RunConfig {
  std::string init = "dirac:0";
  double dt = 1e-3;
  double t_max = 1.0;
  std::vector<double> checkpoints;  // empty: ten equal intervals of [0, t_max]
  double merge_eps = 1e-6;
  double lambda_drift_budget = 1e-3;
  std::size_t n = 2000;
  std::optional<double> lambda_n;  // empty: n^-1/2
  std::vector<std::uint64_t> seeds{1};
  std::string out;
  // fixedpoint
  int atoms = kFixedPointAtoms;
  double truncation = kFixedPointTruncation;
  // compare
  std::string traj;
  std::string sim;
  std::vector<double> window;  // [t0, t1] or empty
  // validate
  std::string suite = "all";
};

inline double resolved_lambda_n(const RunConfig& c) {
  return c.lambda_n ? *c.lambda_n : 1.0 / std::sqrt(static_cast<double>(c.n));
}

inline std::vector<double> resolved_checkpoints(const RunConfig& c) {
  if (!c.checkpoints.empty()) return c.checkpoints;
  std::vector<double> out;
  for (int k = 1; k <= 10; ++k) out.push_back(c.t_max * k / 10.0);
  return out;
}

inline json to_json(const RunConfig& c) {
  json j;
  j["init"] = c.init;
  j["dt"] = c.dt;
  j["t_max"] = c.t_max;
  j["checkpoints"] = resolved_checkpoints(c);
  j["merge_eps"] = c.merge_eps;
  j["lambda_drift_budget"] = c.lambda_drift_budget;
  j["n"] = c.n;
  j["lambda_n"] = resolved_lambda_n(c);
  j["seeds"] = c.seeds;
  j["atoms"] = c.atoms;
  j["truncation"] = c.truncation;
  if (!c.traj.empty()) j["traj"] = c.traj;
  if (!c.sim.empty()) j["sim"] = c.sim;
  if (!c.window.empty()) j["window"] = c.window;
  j["suite"] = c.suite;
  return j;
}

/// Reads a flat JSON config; unknown keys and wrong types are input errors.
/// "seeds" may be a count k (seeds 1..k) or a list; "lambda_n" may be "auto".
inline RunConfig config_from_json(const json& j, RunConfig c = {}) {
  if (!j.is_object()) throw InputError("config: expected a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "init") c.init = v.get<std::string>();
      else if (key == "dt") c.dt = v.get<double>();
      else if (key == "t_max") c.t_max = v.get<double>();
      else if (key == "checkpoints") c.checkpoints = v.get<std::vector<double>>();
      else if (key == "merge_eps") c.merge_eps = v.get<double>();
      else if (key == "lambda_drift_budget") c.lambda_drift_budget = v.get<double>();
      else if (key == "n") c.n = v.get<std::size_t>();
      else if (key == "lambda_n") {
        if (v.is_string() && v.get<std::string>() == "auto") c.lambda_n.reset();
        else c.lambda_n = v.get<double>();
      } else if (key == "seeds") {
        if (v.is_number_integer()) {
          c.seeds.clear();
          for (std::uint64_t s = 1; s <= v.get<std::uint64_t>(); ++s) c.seeds.push_back(s);
        } else {
          c.seeds = v.get<std::vector<std::uint64_t>>();
        }
      } else if (key == "out") c.out = v.get<std::string>();
      else if (key == "atoms") c.atoms = v.get<int>();
      else if (key == "truncation") c.truncation = v.get<double>();
      else if (key == "traj") c.traj = v.get<std::string>();
      else if (key == "sim") c.sim = v.get<std::string>();
      else if (key == "window") c.window = v.get<std::vector<double>>();
      else if (key == "suite") c.suite = v.get<std::string>();
      else throw InputError("config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return c;
}

inline RunConfig load_config(const fs::path& p, RunConfig base = {}) {
  std::ifstream f(p);
  if (!f) throw InputError("cannot read config " + p.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw InputError("config " + p.string() + ": " + e.what());
  }
  return config_from_json(j, std::move(base));
}

inline void validate_config(const RunConfig& c) {
  if (!(c.dt > 0.0)) throw InputError("dt must be positive");
  if (!(c.t_max >= 0.0) || !std::isfinite(c.t_max)) throw InputError("t_max must be finite and >= 0");
  if (!(c.merge_eps >= 0.0)) throw InputError("merge_eps must be >= 0");
  if (!(c.lambda_drift_budget > 0.0)) throw InputError("lambda_drift_budget must be positive");
  if (c.n < 1) throw InputError("n must be >= 1");
  if (c.lambda_n && !(*c.lambda_n >= 0.0)) throw InputError("lambda_n must be >= 0");
  if (c.seeds.empty()) throw InputError("at least one seed is required");
  for (double t : c.checkpoints)
    if (!(t >= 0.0)) throw InputError("checkpoints must be >= 0");
  if (!c.window.empty() && (c.window.size() != 2 || !(c.window[1] > c.window[0])))
    throw InputError("window must be two increasing times");
}

inline fs::path require_out(const RunConfig& c) {
  if (c.out.empty()) throw InputError("--out <dir> is required");
  fs::create_directories(c.out);
  return c.out;
}

inline void echo_config(const RunConfig& c, const fs::path& dir) {
  std::ofstream f(dir / "config.json");
  f << to_json(c).dump(2) << '\n';
}

/// Initial measure from a preset name, or a measure CSV given as csv:<path>.
inline ProbabilityMeasure load_initial(const std::string& init) {
  if (init.rfind("csv:", 0) == 0) return ProbabilityMeasure(io::read_measure(init.substr(4)), 1e-9);
  return from_named(init);
}

inline SolverOptions solver_options(const RunConfig& c) {
  SolverOptions o;
  o.dt = c.dt;
  o.checkpoints = resolved_checkpoints(c);
  o.merge_eps = c.merge_eps;
  o.lambda_drift_budget = c.lambda_drift_budget;
  return o;
}

// Commands ---------------------------------------------------------------------

inline int cmd_solve(const RunConfig& c, std::ostream& os) {
  validate_config(c);
  const fs::path out = require_out(c);
  const ProbabilityMeasure pi0 = load_initial(c.init);
  const Trajectory traj = solve(pi0, c.t_max, solver_options(c));
  io::write_trajectory(out, traj);
  echo_config(c, out);
  double max_w1 = 0.0;
  for (const auto& s : traj.checkpoints) max_w1 = std::max(max_w1, fixed_point::w1_to_fixed_point(s.pi));
  os << std::fixed << std::setprecision(6);
  if (traj.t_gel) os << "t_gel = " << *traj.t_gel << '\n';
  else os << "t_gel = none (critical start)\n";
  os << std::scientific << std::setprecision(3);
  os << "max lambda drift = " << traj.max_lambda_drift << '\n';
  os << "max w1 to fixed point = " << max_w1 << '\n';
  os << std::fixed << std::setprecision(6);
  os << "initial phi = " << traj.checkpoints.front().phi << '\n';
  os << "final phi = " << traj.checkpoints.back().phi << '\n';
  os << "checkpoints = " << traj.checkpoints.size() << ", atoms at t_max = " << traj.checkpoints.back().pi.size()
     << '\n';
  return kOk;
}

/// Initial ages for a replica: deterministic for a single atom, otherwise
/// i.i.d. draws from the preset.
inline std::vector<double> initial_ages(const ProbabilityMeasure& pi0, std::size_t n, std::uint64_t seed) {
  if (pi0.size() == 1) return std::vector<double>(n, pi0[0].location);
  std::mt19937_64 rng(seed * 0x2545f4914f6cdd1dULL + 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> cum;
  double s = 0.0;
  for (const auto& a : pi0.atoms()) cum.push_back(s += a.mass);
  std::vector<double> ages(n);
  for (auto& a : ages) {
    const double u = unit(rng) * s;
    const auto k = std::min<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin(), cum.size() - 1);
    a = pi0[k].location;
  }
  return ages;
}

inline int cmd_simulate(const RunConfig& c, std::ostream& os) {
  validate_config(c);
  const fs::path out = require_out(c);
  const ProbabilityMeasure pi0 = load_initial(c.init);
  sim::RunOptions base;
  base.lambda_n = resolved_lambda_n(c);
  base.t_max = c.t_max;
  base.checkpoints = resolved_checkpoints(c);

  std::vector<std::future<std::vector<sim::SimRecord>>> jobs;
  for (std::uint64_t seed : c.seeds)
    jobs.push_back(std::async(std::launch::async, [&, seed] {
      sim::FireGraph g = sim::sample_irg(initial_ages(pi0, c.n, seed), seed ^ 0x9e3779b97f4a7c15ULL);
      sim::RunOptions o = base;
      o.seed = seed;
      return sim::run(g, o);
    }));
  std::vector<std::vector<sim::SimRecord>> reps;
  for (auto& j : jobs) reps.push_back(j.get());

  for (std::size_t i = 0; i < reps.size(); ++i) io::write_sim_records(out / ("seed_" + std::to_string(c.seeds[i])), reps[i]);

  // Aggregate: mean over replicas, row by row.
  std::ofstream agg = io::open_out(out / "aggregate.csv");
  agg << "t,burned_cum,largest_cluster,n_clusters,phi_hat_window\n";
  const std::size_t rows = reps.front().size();
  const double k = static_cast<double>(reps.size());
  for (std::size_t r = 0; r < rows; ++r) {
    double burned = 0, largest = 0, clusters = 0, phi_hat = 0;
    for (const auto& rep : reps) {
      burned += static_cast<double>(rep[r].burned_vertices) / k;
      largest += static_cast<double>(rep[r].largest_cluster()) / k;
      clusters += static_cast<double>(rep[r].cluster_count()) / k;
      phi_hat += io::window_burn_rate(rep, r) / k;
    }
    agg << reps.front()[r].t << ',' << burned << ',' << largest << ',' << clusters << ',' << phi_hat << '\n';
  }
  echo_config(c, out);

  std::uint64_t burns = 0;
  for (const auto& rep : reps) burns += rep.back().burn_events;
  os << "replicas = " << reps.size() << ", n = " << c.n << ", lambda_n = " << base.lambda_n << '\n';
  os << "burn events (all replicas) = " << burns << '\n';
  const double rate_all = [&] {
    double s = 0.0;
    for (const auto& rep : reps)
      s += c.t_max > 0.0 ? sim::burn_rate_estimate(rep, rep.front().t, rep.back().t) : 0.0;
    return s / k;
  }();
  os << std::fixed << std::setprecision(6) << "mean burn rate over [0, t_max] = " << rate_all << '\n';
  return kOk;
}

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Replica directories of a simulation output, or the directory itself.
inline std::vector<fs::path> replica_dirs(const fs::path& sim) {
  if (!fs::is_directory(sim)) throw InputError("not a directory: " + sim.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(sim))
    if (e.is_directory() && e.path().filename().string().rfind("seed_", 0) == 0) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) out.push_back(sim);
  return out;
}

inline bool same_time(double a, double b) { return std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(a)); }

}  // namespace detail

inline int cmd_compare(const RunConfig& c, std::ostream& os) {
  validate_config(c);
  if (c.traj.empty() || c.sim.empty()) throw InputError("compare needs --traj <dir> and --sim <dir>");
  const fs::path out = require_out(c);
  const auto traj_rows = io::read_trajectory(c.traj);
  const auto traj_snaps = io::list_snapshots(c.traj);
  const auto replicas = detail::replica_dirs(c.sim);

  struct Replica {
    std::map<double, fs::path> snaps;
    std::vector<io::SimRow> rows;  // empty when no records.csv
  };
  std::vector<Replica> reps;
  for (const auto& d : replicas) {
    Replica r;
    r.snaps = io::list_snapshots(d);
    if (fs::exists(d / "records.csv")) r.rows = io::read_sim_records(d);
    if (r.snaps.size() != traj_snaps.size()) throw InputError("checkpoint grids differ: " + d.string());
    auto it = traj_snaps.begin();
    for (const auto& [t, p] : r.snaps) {
      if (!detail::same_time(t, it->first)) throw InputError("checkpoint grids differ at t = " + io::time_tag(t));
      ++it;
    }
    reps.push_back(std::move(r));
  }

  auto traj_phi = [&](double t) {
    for (const auto& r : traj_rows)
      if (detail::same_time(r.t, t)) return r.phi;
    throw InputError("trajectory.csv has no row at t = " + io::time_tag(t));
  };

  std::ofstream f = io::open_out(out / "comparison.csv");
  f << "t,w1_empirical_vs_pde,phi_hat,phi_pde\n";
  for (const auto& [t, path] : traj_snaps) {
    const AgeMeasure pde = io::read_measure(path);
    std::vector<double> dist, phis;
    for (const auto& r : reps) {
      auto it = std::find_if(r.snaps.begin(), r.snaps.end(), [&](const auto& kv) { return detail::same_time(kv.first, t); });
      dist.push_back(w1(io::read_measure(it->second), pde));
      for (const auto& row : r.rows)
        if (detail::same_time(row.t, t)) phis.push_back(row.phi_hat_window);
    }
    f << t << ',' << detail::median(dist) << ',' << detail::median(phis) << ',' << traj_phi(t) << '\n';
  }
  echo_config(c, out);
  os << "compared " << traj_snaps.size() << " checkpoints over " << reps.size() << " replicas\n";

  if (!c.window.empty()) {
    const double t0 = c.window[0], t1 = c.window[1];
    // Time average of the solver's phi: trapezoid over checkpoint rows in the window.
    double integral = 0.0;
    for (std::size_t i = 1; i < traj_rows.size(); ++i) {
      const double a = std::max(t0, traj_rows[i - 1].t), b = std::min(t1, traj_rows[i].t);
      if (b > a) integral += 0.5 * (traj_rows[i - 1].phi + traj_rows[i].phi) * (b - a);
    }
    const double phi_pde = integral / (t1 - t0);
    // Vertex count from the simulation's config echo.
    double sim_n = 0.0;
    if (fs::exists(fs::path(c.sim) / "config.json")) {
      std::ifstream cf(fs::path(c.sim) / "config.json");
      const json cj = json::parse(cf, nullptr, false);
      if (cj.is_object() && cj.contains("n") && cj["n"].is_number()) sim_n = cj["n"].get<double>();
    }
    std::vector<double> rates;
    for (const auto& r : reps) {
      if (r.rows.empty() || !(sim_n > 0.0)) continue;
      const io::SimRow *a = nullptr, *b = nullptr;
      for (const auto& row : r.rows) {
        if (detail::same_time(row.t, t0)) a = &row;
        if (detail::same_time(row.t, t1)) b = &row;
      }
      if (!a || !b) throw InputError("window ends must be checkpoint times");
      rates.push_back((b->burned_cum - a->burned_cum) / (sim_n * (t1 - t0)));
    }
    os << std::fixed << std::setprecision(6) << "window [" << t0 << ", " << t1 << "]: phi_pde_mean = " << phi_pde;
    if (!rates.empty()) os << ", phi_hat_median = " << detail::median(rates) << ", |difference| = " << std::abs(detail::median(rates) - phi_pde);
    os << '\n';
  }
  return kOk;
}

inline int cmd_validate(const RunConfig& c, std::ostream& os) {
  std::vector<std::string> names;
  if (c.suite == "all") names = validation::suite_names();
  else names = {c.suite};
  bool ok = true;
  for (const auto& name : names) {
    const auto report = validation::run_suite(name);
    os << "[" << report.suite << "]\n";
    for (const auto& ch : report.checks) {
      os << "  " << (ch.pass ? "PASS " : "FAIL ") << std::left << std::setw(44) << ch.name << std::right
         << " cases=" << std::setw(5) << ch.cases << std::scientific << std::setprecision(2) << "  worst=" << ch.worst
         << "  limit=" << ch.limit << std::defaultfloat << '\n';
    }
    ok = ok && report.pass();
  }
  os << (ok ? "all checks passed\n" : "validation FAILED\n");
  return ok ? kOk : kValidationFailure;
}

inline int cmd_gel(const RunConfig& c, std::ostream& os) {
  const ProbabilityMeasure pi0 = load_initial(c.init);
  const double lambda0 = pi0.supported_at_zero() ? 0.0 : leading_pair(pi0).lambda;
  if (lambda0 > 1.0 + 1e-9) throw SupercriticalError(lambda0);
  os << std::fixed << std::setprecision(9) << "lambda(pi0) = " << lambda0 << '\n'
     << "t_gel = " << gelation_time(pi0) << '\n';
  return kOk;
}

inline int cmd_fixedpoint(const RunConfig& c, std::ostream& os) {
  const fs::path out = require_out(c);
  const ProbabilityMeasure pi = fixed_point_preset(c.atoms, c.truncation);
  const SpectralPair p = leading_pair(pi);
  io::write_measure(out / "fixed_point.csv", pi);
  io::write_theta(out / "theta.csv", p);
  echo_config(c, out);
  os << std::setprecision(12) << "atoms = " << pi.size() << '\n'
     << "lambda = " << p.lambda << '\n'
     << "phi = " << phi(p) << '\n'
     << "theta_sup = " << theta_sup(p) << '\n'
     << "mean = " << first_moment(pi) << '\n'
     << "w1 to continuous fixed point = " << fixed_point::w1_to_fixed_point(pi) << '\n';
  return kOk;
}

}  // namespace agefire::cli
