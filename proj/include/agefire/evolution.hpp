#pragma once

// Time integration of the self-organized-critical age evolution
//   d/dt pi_t = -delta_0' * pi_t - phi(t) (mu_t - delta_0),   dmu_t/dpi_t = theta_t,
//   phi(t) = (int theta_t^3 dpi_t)^-1,
// by a particle scheme: exact transport, exponential per-atom decay at rate
// phi theta, and rebirth of the lost mass at age 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <vector>

#include "agefire/errors.hpp"
#include "agefire/fixed_point.hpp"
#include "agefire/measures.hpp"
#include "agefire/spectral.hpp"

namespace agefire {

struct SolverOptions {
  double dt = 1e-3;
  // Extra checkpoint times in (0, t_max); 0 and t_max are always recorded.
  std::vector<double> checkpoints;
  // Per-step W1 budget for atom merging is merge_eps * dt.
  double merge_eps = 1e-6;
  double lambda_drift_budget = 1e-3;
  // |lambda - 1| <= crit_tol counts as critical.
  double crit_tol = 1e-9;
  // Target |lambda(t_gel) - 1| for the gelation root.
  double gel_tol = 1e-12;
  EigenOptions eigen;
};

enum class Phase { subcritical, critical };

struct EvolutionState {
  double t = 0.0;
  ProbabilityMeasure pi;
  std::optional<SpectralPair> pair;  // empty only for delta_0
  double lambda = 0.0;
  double phi = 0.0;  // 0 before gelation
  Phase phase = Phase::critical;
  double lambda_drift = 0.0;  // |lambda - 1| in the critical phase
  double mass_defect = 0.0;   // total_mass(pi) - 1
  // Running totals since t = 0, used by the trajectory audits.
  double speed_budget = 0.0;   // sum over steps of a W1 bound on the step
  double merge_spent = 0.0;    // W1 moved by atom merging
  double mean_budget = 0.0;    // integral of phi * int s theta dpi
};

/// One record per integration step; enough to audit phi and lambda in time.
struct StepSample {
  double t;
  double lambda;
  double phi;
  double mean_age;
  std::size_t atom_count;
};

struct Trajectory {
  std::vector<EvolutionState> checkpoints;
  std::vector<StepSample> samples;
  std::optional<double> t_gel;  // set when a transport-only phase occurred
  double lambda_jump = 0.0;     // |lambda - 1| at the switch to critical stepping
  double max_lambda_drift = 0.0;
  double max_phi_theta_sup = 0.0;  // max over steps of phi * theta(inf)
};

namespace detail {

inline EvolutionState make_state(double t, ProbabilityMeasure pi, Phase phase, const EigenOptions& eig,
                                 std::span<const double> warm = {}) {
  EvolutionState s;
  s.t = t;
  s.phase = phase;
  if (!pi.supported_at_zero()) {
    s.pair = leading_pair(pi, eig, warm);
    s.lambda = s.pair->lambda;
    s.phi = phase == Phase::critical ? phi(*s.pair) : 0.0;
  }
  s.mass_defect = total_mass(pi) - 1.0;
  s.lambda_drift = phase == Phase::critical ? std::abs(s.lambda - 1.0) : 0.0;
  s.pi = std::move(pi);
  return s;
}

inline double lambda_of(const AgeMeasure& pi, const EigenOptions& eig) {
  return pi.supported_at_zero() ? 0.0 : leading_pair(pi, eig).lambda;
}

}  // namespace detail

/// Builds the state for a critical measure (phi = Phi(pi)).
inline EvolutionState critical_state(ProbabilityMeasure pi, double t = 0.0, const EigenOptions& eig = {}) {
  return detail::make_state(t, std::move(pi), Phase::critical, eig);
}

/// One explicit splitting step of size dt from a critical state:
/// (1) every atom moves right by dt; (2) masses decay by exp(-phi theta dt)
/// with phi and theta frozen at the start of the step; (3) one atom at 0
/// receives exactly the lost mass. Then atoms are merged within a W1 budget
/// of merge_eps * dt and the spectral pair is recomputed.
inline EvolutionState step(const EvolutionState& state, double dt, const SolverOptions& opts) {
  if (!(dt > 0.0)) throw InputError("step: dt must be positive");
  if (!state.pair) throw DegenerateOperatorError();
  const auto atoms = state.pi.atoms();
  const auto& theta = state.pair->theta;
  const double rate = state.phi;

  std::vector<Atom> next;
  next.reserve(atoms.size() + 1);
  next.push_back({0.0, 0.0});
  double lost = 0.0, relocation = 0.0, tilted_moment = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const double x = atoms[i].location + dt;
    const double gone = -atoms[i].mass * std::expm1(-rate * theta[i] * dt);
    lost += gone;
    relocation += x * gone;
    tilted_moment += atoms[i].location * theta[i] * atoms[i].mass;
    next.push_back({x, atoms[i].mass - gone});
  }
  next.front().mass = lost;
  AgeMeasure moved = AgeMeasure::from_atoms(std::move(next));

  double spent = 0.0;
  AgeMeasure merged = merge_atoms(moved, opts.merge_eps * dt, &spent);

  // Warm start from the previous eigenfunction, shifted with the atoms.
  std::vector<double> points;
  points.reserve(merged.size());
  for (const auto& a : merged.atoms()) points.push_back(std::max(a.location - dt, 0.0));
  const std::vector<double> warm = theta_at_sorted(*state.pair, points);

  EvolutionState out = detail::make_state(state.t + dt, ProbabilityMeasure(std::move(merged), 1e-9),
                                          Phase::critical, opts.eigen, warm);
  out.speed_budget = state.speed_budget + dt + relocation + spent;
  out.merge_spent = state.merge_spent + spent;
  out.mean_budget = state.mean_budget + rate * tilted_moment * dt;
  if (out.lambda_drift > opts.lambda_drift_budget) {
    std::ostringstream os;
    os << "step: |lambda - 1| = " << out.lambda_drift << " at t = " << out.t << " exceeds the drift budget "
       << opts.lambda_drift_budget << "; reduce dt";
    throw AccuracyError(os.str());
  }
  return out;
}

/// Root t* of lambda(translate(pi0, t)) = 1. Returns 0 for critical data.
inline double gelation_time(const AgeMeasure& pi0, double tol = 1e-12, double crit_tol = 1e-9,
                            const EigenOptions& eig = {}) {
  auto lam = [&](double t) { return detail::lambda_of(translate(pi0, t), eig); };
  const double l0 = lam(0.0);
  if (l0 > 1.0 + crit_tol) throw SupercriticalError(l0);
  if (l0 >= 1.0 - crit_tol) return 0.0;

  // lambda(translate(pi, t)) >= t pi([0, inf)) so a finite bracket exists.
  double lo = 0.0, hi = 1.0 / std::max(total_mass(pi0), 1e-300);
  double lhi = lam(hi);
  while (lhi < 1.0) {
    lo = hi;
    hi *= 2.0;
    lhi = lam(hi);
  }
  double llo = l0;
  auto bisect = [&](double a, double b) {
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (a + b);
      const double lm = lam(mid);
      if (std::abs(lm - 1.0) <= tol || b - a <= 1e-15 * std::max(1.0, b)) return std::optional<double>(mid);
      if (lm < llo - 1e-12 || lm > lhi + 1e-12) return std::optional<double>();  // non-monotone
      if (lm < 1.0) {
        a = mid;
        llo = lm;
      } else {
        b = mid;
        lhi = lm;
      }
    }
    return std::optional<double>(0.5 * (a + b));
  };
  if (auto r = bisect(lo, hi)) return *r;

  // Fallback: first grid crossing, then bisection inside that cell.
  const int cells = 1000;
  double prev = 0.0;
  llo = l0;
  for (int k = 1; k <= cells; ++k) {
    const double t = hi * k / cells;
    const double l = lam(t);
    if (l >= 1.0) {
      lhi = l;
      if (auto r = bisect(prev, t)) return *r;
      return t;
    }
    prev = t;
    llo = l;
  }
  return hi;
}

/// Subcritical data translated to the gelation time, hence critical.
inline ProbabilityMeasure recriticalize(const ProbabilityMeasure& pi, double tol = 1e-12, const EigenOptions& eig = {}) {
  return ProbabilityMeasure(translate(pi, gelation_time(pi, tol, 1e-9, eig)), 1e-9);
}

namespace detail {

inline std::vector<double> checkpoint_grid(double t_max, std::vector<double> extra) {
  extra.push_back(0.0);
  extra.push_back(t_max);
  std::erase_if(extra, [&](double t) { return !(t >= 0.0 && t <= t_max); });
  std::sort(extra.begin(), extra.end());
  std::vector<double> out;
  for (double t : extra)
    if (out.empty() || t - out.back() > 1e-12) out.push_back(t);
  return out;
}

inline void record_sample(Trajectory& traj, const EvolutionState& s) {
  traj.samples.push_back({s.t, s.lambda, s.phi, first_moment(s.pi), s.pi.size()});
}

}  // namespace detail

/// Solves from pi0 over [0, t_max]. Subcritical data are transported until
/// the gelation time and then stepped critically; supercritical data are
/// rejected.
inline Trajectory solve(const ProbabilityMeasure& pi0, double t_max, const SolverOptions& opts = {}) {
  if (!(t_max >= 0.0)) throw InputError("solve: t_max must be >= 0");
  if (!(opts.dt > 0.0)) throw InputError("solve: dt must be positive");
  const double lambda0 = detail::lambda_of(pi0, opts.eigen);
  if (lambda0 > 1.0 + opts.crit_tol) throw SupercriticalError(lambda0);

  Trajectory traj;
  const std::vector<double> grid = detail::checkpoint_grid(t_max, opts.checkpoints);
  std::size_t next_cp = 0;

  double t_start = 0.0;
  if (lambda0 < 1.0 - opts.crit_tol) {
    const double t_gel = gelation_time(pi0, opts.gel_tol, opts.crit_tol, opts.eigen);
    traj.t_gel = t_gel;
    // Pure transport: the measure moves at unit W1 speed.
    while (next_cp < grid.size() && grid[next_cp] < t_gel) {
      const double t = grid[next_cp++];
      auto s = detail::make_state(t, ProbabilityMeasure(translate(pi0, t), 1e-9), Phase::subcritical, opts.eigen);
      s.speed_budget = t;
      traj.checkpoints.push_back(s);
      detail::record_sample(traj, s);
    }
    if (t_gel >= t_max) return traj;
    t_start = t_gel;
  }

  EvolutionState state = detail::make_state(t_start, ProbabilityMeasure(translate(pi0, t_start), 1e-9),
                                            Phase::critical, opts.eigen);
  state.speed_budget = t_start;
  traj.lambda_jump = std::abs(state.lambda - 1.0);
  traj.max_lambda_drift = state.lambda_drift;
  auto track = [&](const EvolutionState& s) {
    traj.max_lambda_drift = std::max(traj.max_lambda_drift, s.lambda_drift);
    traj.max_phi_theta_sup = std::max(traj.max_phi_theta_sup, s.phi * theta_sup(*s.pair));
    detail::record_sample(traj, s);
  };
  track(state);
  if (next_cp < grid.size() && std::abs(grid[next_cp] - state.t) <= 1e-12) {
    traj.checkpoints.push_back(state);
    ++next_cp;
  }

  while (next_cp < grid.size()) {
    const double target = grid[next_cp];
    double h = std::min(opts.dt, target - state.t);
    // Avoid a sliver step just before a checkpoint.
    if (target - state.t - h < 1e-9 * opts.dt) h = target - state.t;
    state = step(state, h, opts);
    if (std::abs(target - state.t) <= 1e-9 * opts.dt) {
      state.t = target;
      traj.checkpoints.push_back(state);
      ++next_cp;
    }
    track(state);
  }
  return traj;
}

// Audits ---------------------------------------------------------------------

struct IntervalCheck {
  double u, v;
  double measured;  // left-hand side
  double bound;     // right-hand side including slack
  bool pass;
};

struct AuditReport {
  std::vector<IntervalCheck> intervals;
  bool pass = true;
  double min_slack = std::numeric_limits<double>::infinity();
};

/// W1(pi_u, pi_v) <= (v - u) + the accumulated rebirth and merge displacement
/// between consecutive checkpoints (the discrete form of
/// int_u^v phi int s theta dpi dt), plus `slack`.
inline AuditReport check_speed_bound(const Trajectory& traj, double slack = 1e-6) {
  if (traj.checkpoints.size() < 2) throw InputError("check_speed_bound: need at least 2 checkpoints");
  AuditReport rep;
  for (std::size_t k = 1; k < traj.checkpoints.size(); ++k) {
    const auto& a = traj.checkpoints[k - 1];
    const auto& b = traj.checkpoints[k];
    const double d = w1(a.pi, b.pi);
    const double bound = (b.speed_budget - a.speed_budget) + slack;
    const bool ok = d <= bound;
    rep.intervals.push_back({a.t, b.t, d, bound, ok});
    rep.pass = rep.pass && ok;
    rep.min_slack = std::min(rep.min_slack, bound - d);
  }
  return rep;
}

/// Mean growth int x dpi_t <= t + int x dpi_0 and tail domination
/// pi_t([x + t, inf)) <= pi_0([x, inf)) on an x grid, each within `slack`.
inline AuditReport check_mean_growth(const Trajectory& traj, double slack = 1e-9, int grid_points = 200) {
  if (traj.checkpoints.size() < 2) throw InputError("check_mean_growth: need at least 2 checkpoints");
  AuditReport rep;
  const auto& first = traj.checkpoints.front();
  const double m0 = first_moment(first.pi);
  double x_hi = 0.0;
  for (const auto& s : traj.checkpoints) x_hi = std::max(x_hi, s.pi.atoms().back().location);
  for (std::size_t k = 1; k < traj.checkpoints.size(); ++k) {
    const auto& s = traj.checkpoints[k];
    const double dt = s.t - first.t;
    const double mean = first_moment(s.pi);
    // Merging moves mass by at most the recorded W1 budget.
    const double merge_allow = s.merge_spent - first.merge_spent;
    double worst = (dt + m0 + slack + merge_allow) - mean;
    for (int g = 0; g <= grid_points; ++g) {
      const double x = x_hi * g / grid_points;
      const double lhs = tail_mass(s.pi, x + dt);
      const double rhs = tail_mass(first.pi, x) + slack;
      worst = std::min(worst, rhs - lhs);
    }
    const bool ok = worst >= 0.0;
    rep.intervals.push_back({first.t, s.t, mean, dt + m0, ok});
    rep.pass = rep.pass && ok;
    rep.min_slack = std::min(rep.min_slack, worst);
  }
  return rep;
}

// Experiments ----------------------------------------------------------------

struct StabilityPoint {
  double t;
  double distance;
  double ratio;
};

struct StabilityResult {
  std::vector<StabilityPoint> series;
  double initial_distance = 0.0;
  // Smallest C with ratio(t) <= exp(C t) over the whole series.
  double fitted_c1 = 0.0;
  // Least-squares slope of log ratio against t over the whole series.
  double slope = 0.0;
  // Whether ratio(t) <= exp(fitted_c1 t) (1 + 1e-6) holds; fails only on non-finite ratios.
  bool bound_holds = true;
};

/// Solves from two nearby critical measures with shared options and tracks
/// W1(pi_t, pi~_t) / W1(pi_0, pi~_0) on the checkpoint grid.
inline StabilityResult stability_experiment(const ProbabilityMeasure& a, const ProbabilityMeasure& b, double t_max,
                                            const SolverOptions& opts) {
  const double d0 = w1(a, b);
  if (!(d0 > 0.0)) throw InputError("stability_experiment: initial measures coincide");
  for (const auto* pi : {&a, &b}) {
    const double l = detail::lambda_of(*pi, opts.eigen);
    if (std::abs(l - 1.0) > opts.crit_tol)
      throw InputError("stability_experiment: initial measures must be critical (lambda = " + std::to_string(l) + ")");
  }
  const Trajectory ta = solve(a, t_max, opts);
  const Trajectory tb = solve(b, t_max, opts);
  if (ta.checkpoints.size() != tb.checkpoints.size()) throw AccuracyError("stability_experiment: grid mismatch");

  StabilityResult res;
  res.initial_distance = d0;
  for (std::size_t k = 0; k < ta.checkpoints.size(); ++k) {
    const double d = w1(ta.checkpoints[k].pi, tb.checkpoints[k].pi);
    res.series.push_back({ta.checkpoints[k].t, d, d / d0});
  }
  double c1 = -std::numeric_limits<double>::infinity();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (const auto& p : res.series) {
    if (p.t <= 0.0) continue;
    const double ly = std::log(p.ratio);
    c1 = std::max(c1, ly / p.t);
    sx += p.t;
    sy += ly;
    sxx += p.t * p.t;
    sxy += p.t * ly;
    ++cnt;
  }
  res.fitted_c1 = std::isfinite(c1) ? c1 : 0.0;
  res.slope = cnt > 1 ? (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx) : 0.0;
  for (const auto& p : res.series)
    res.bound_holds = res.bound_holds && p.ratio <= std::exp(res.fitted_c1 * p.t) * (1.0 + 1e-6);
  return res;
}

struct LyapunovResult {
  std::vector<std::pair<double, double>> series;  // (t, W1 to the fixed point)
  std::size_t violations = 0;                     // increases beyond the slack
  double largest_increase = 0.0;
};

/// Distance from the stationary solution along a trajectory. With no
/// reference the exact continuous fixed point is used. Increases beyond
/// `slack` are counted, not treated as errors.
inline LyapunovResult lyapunov_experiment(const ProbabilityMeasure& pi0, double t_max, const SolverOptions& opts,
                                          const AgeMeasure* reference = nullptr, double slack = 1e-4) {
  const Trajectory traj = solve(pi0, t_max, opts);
  LyapunovResult res;
  for (const auto& s : traj.checkpoints) {
    const double d = reference ? w1(s.pi, *reference) : fixed_point::w1_to_fixed_point(s.pi);
    if (!res.series.empty()) {
      const double inc = d - res.series.back().second;
      res.largest_increase = std::max(res.largest_increase, inc);
      if (inc > slack) ++res.violations;
    }
    res.series.emplace_back(s.t, d);
  }
  return res;
}

}  // namespace agefire
