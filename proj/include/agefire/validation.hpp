#pragma once

// Invariant suites over random measures and short trajectories. Each check
// records the worst measured value against its limit.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "agefire/evolution.hpp"
#include "agefire/measures.hpp"
#include "agefire/presets.hpp"
#include "agefire/spectral.hpp"

namespace agefire::validation {

struct Check {
  std::string name;
  std::size_t cases = 0;
  double worst = 0.0;  // largest observed excess over the reference quantity
  double limit = 0.0;
  bool pass = true;

  // Records one case: `excess` must not exceed `limit`.
  void record(double excess) {
    ++cases;
    if (!(excess <= limit)) pass = false;
    if (!(excess <= worst)) worst = excess;  // NaN also lands here
  }
};

struct SuiteReport {
  std::string suite;
  std::vector<Check> checks;
  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
};

struct RandomMeasureSpec {
  std::size_t min_atoms = 1;
  std::size_t max_atoms = 20;
  double zero_atom_probability = 0.3;  // chance of an extra atom at 0
  double max_location = 10.0;
};

/// Probability measure with a random number of positive atoms at
/// log-uniform locations and random masses, optionally plus an atom at 0.
inline ProbabilityMeasure random_measure(std::mt19937_64& rng, const RandomMeasureSpec& spec = {}) {
  std::uniform_int_distribution<std::size_t> count(spec.min_atoms, spec.max_atoms);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double log_lo = std::log(1e-2 * spec.max_location), log_hi = std::log(spec.max_location);
  const std::size_t k = count(rng);
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < k; ++i)
    atoms.push_back({std::exp(log_lo + (log_hi - log_lo) * unit(rng)), 0.05 + unit(rng)});
  if (unit(rng) < spec.zero_atom_probability) atoms.push_back({0.0, 0.05 + unit(rng)});
  double total = 0.0;
  for (const auto& a : atoms) total += a.mass;
  for (auto& a : atoms) a.mass /= total;
  AgeMeasure m = AgeMeasure::from_atoms(std::move(atoms));
  // Renormalize after canonicalization so the mass is 1 to rounding.
  const double s = total_mass(m);
  return ProbabilityMeasure(
      map_canonical(m, [s](std::size_t, const Atom& a) { return Atom{a.location, a.mass / s}; }), 1e-12);
}

/// A measure near pi: every location jittered by a relative amount up to
/// `scale`, masses perturbed likewise and renormalized.
inline ProbabilityMeasure perturb(const AgeMeasure& pi, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> jitter(-scale, scale);
  std::vector<Atom> atoms;
  double total = 0.0;
  for (const auto& a : pi.atoms()) {
    atoms.push_back({a.location * (1.0 + jitter(rng)), a.mass * (1.0 + jitter(rng))});
    total += atoms.back().mass;
  }
  for (auto& a : atoms) a.mass /= total;
  AgeMeasure m = AgeMeasure::from_atoms(std::move(atoms));
  const double s = total_mass(m);
  return ProbabilityMeasure(map_canonical(m, [s](std::size_t, const Atom& a) { return Atom{a.location, a.mass / s}; }));
}

/// The part of pi away from the origin.
inline AgeMeasure positive_part(const AgeMeasure& pi) {
  std::vector<Atom> atoms;
  for (const auto& a : pi.atoms())
    if (a.location > 0.0) atoms.push_back(a);
  return AgeMeasure::from_atoms(std::move(atoms));
}

// Suites ---------------------------------------------------------------------

/// Eigenpair residual, bound ordering, theta bounds, Phi <= 1, Lipschitz
/// dependence of lambda, kernel monotonicity and invariance under mass at 0.
inline SuiteReport spectral_suite(std::uint64_t seed = 1, std::size_t measures = 100, std::size_t pairs = 500) {
  std::mt19937_64 rng(seed);
  Check residual{"eigen residual / lambda", 0, 0, 1e-10};
  Check lower{"lower bound - lambda", 0, 0, 1e-12};
  Check hs{"lambda - hs bound", 0, 0, 1e-12};
  Check mean{"hs bound - mean bound", 0, 0, 1e-12};
  Check theta_lin{"theta(y) - y / lambda", 0, 0, 1e-12};
  Check phi_max{"Phi - 1", 0, 0, 1e-12};
  Check concave{"theta slope increase", 0, 0, 1e-12};
  Check explicit_bound{"theta_sup - explicit bound", 0, 0, 1e-12};
  Check zero_mass{"theta change under mass at 0", 0, 0, 1e-9};
  Check monotone{"lambda decrease when an atom moves right", 0, 0, 1e-12};
  Check lipschitz{"|dlambda| - 2 W1", 0, 0, 1e-9};

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < measures; ++i) {
    const ProbabilityMeasure pi = random_measure(rng);
    const SpectralPair p = leading_pair(pi);
    const double scale = std::max(1.0, p.lambda);
    residual.record(eigen_residual(p) / p.lambda);
    const auto ub = lambda_upper_bounds(pi);
    lower.record((lambda_lower_bound(pi) - p.lambda) / scale);
    hs.record((p.lambda - ub.hs_bound) / scale);
    mean.record((ub.hs_bound - ub.mean_bound) / scale);
    const auto atoms = pi.atoms();
    double prev_x = 0.0, prev_t = 0.0, prev_slope = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      theta_lin.record((p.theta[j] - atoms[j].location / p.lambda) / std::max(1.0, p.theta[j]));
      if (atoms[j].location > 0.0) {
        const double slope = (p.theta[j] - prev_t) / (atoms[j].location - prev_x);
        if (std::isfinite(prev_slope)) concave.record((slope - prev_slope) / std::max(1.0, prev_slope));
        prev_slope = slope;
        prev_x = atoms[j].location;
        prev_t = p.theta[j];
      }
    }
    phi_max.record(phi(p) - 1.0);
    explicit_bound.record((theta_sup(p) - explicit_theta_bound(p, 0.5)) / std::max(1.0, theta_sup(p)));

    // Extra mass at 0: L is unchanged on the positive part, so is (lambda, theta).
    const double m0 = 0.1 + unit(rng);
    std::vector<Atom> with_zero(atoms.begin(), atoms.end());
    with_zero.push_back({0.0, m0});
    const AgeMeasure heavier = AgeMeasure::from_atoms(std::move(with_zero));
    const SpectralPair q = leading_pair(heavier);
    zero_mass.record(std::abs(q.lambda - p.lambda) / scale);
    const auto qa = heavier.atoms();
    for (std::size_t j = 0, k = 0; j < qa.size() && k < atoms.size(); ++j) {
      while (k < atoms.size() && atoms[k].location < qa[j].location) ++k;
      if (k < atoms.size() && atoms[k].location == qa[j].location && qa[j].location > 0.0)
        zero_mass.record(std::abs(q.theta[j] - p.theta[k]) / std::max(1.0, p.theta[k]));
    }

    // Move the largest atom further out: kernel entries only grow.
    std::vector<Atom> moved(atoms.begin(), atoms.end());
    moved.back().location *= 1.0 + unit(rng);
    const double lm = leading_pair(AgeMeasure::from_atoms(std::move(moved))).lambda;
    monotone.record((p.lambda - lm) / scale);
  }

  for (std::size_t i = 0; i < pairs; ++i) {
    const ProbabilityMeasure a = random_measure(rng);
    const ProbabilityMeasure b = i % 2 == 0 ? perturb(a, rng, 0.05) : random_measure(rng);
    const double d = std::abs(leading_pair(a).lambda - leading_pair(b).lambda);
    lipschitz.record(d - 2.0 * w1(a, b));
  }
  return {"spectral",
          {residual, lower, hs, mean, theta_lin, phi_max, concave, explicit_bound, zero_mass, monotone, lipschitz}};
}

/// Metric axioms of W1, the mean identity, translation invariance, tail
/// moment monotonicity and the closed form for two-atom critical measures.
inline SuiteReport metric_suite(std::uint64_t seed = 2, std::size_t measures = 200) {
  std::mt19937_64 rng(seed);
  Check symmetry{"|W1(a,b) - W1(b,a)|", 0, 0, 1e-14};
  Check identity{"W1(a,a)", 0, 0, 0.0};
  Check separation{"distinct measures at distance 0", 0, 0, 0.0};
  Check triangle{"W1(a,c) - W1(a,b) - W1(b,c)", 0, 0, 1e-12};
  Check mean_identity{"|mean - W1(pi, delta_0)|", 0, 0, 1e-12};
  Check translation{"|W1(a+r, b+r) - W1(a,b)|", 0, 0, 1e-12};
  Check shift{"|W1(pi, pi+r) - r|", 0, 0, 1e-12};
  Check tail{"tail first moment increase", 0, 0, 0.0};
  Check two_atom_form{"two-atom closed form error", 0, 0, 1e-12};

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const ProbabilityMeasure origin = dirac(0.0);
  for (std::size_t i = 0; i < measures; ++i) {
    const ProbabilityMeasure a = random_measure(rng), b = random_measure(rng), c = random_measure(rng);
    const double ab = w1(a, b), ba = w1(b, a), bc = w1(b, c), ac = w1(a, c);
    symmetry.record(std::abs(ab - ba));
    identity.record(w1(a, a));
    separation.record(!(a == b) && ab == 0.0 ? 1.0 : 0.0);
    triangle.record((ac - ab - bc) / std::max(1.0, ac));
    mean_identity.record(std::abs(first_moment(a) - w1(a, origin)) / std::max(1.0, first_moment(a)));
    const double r = 5.0 * unit(rng);
    translation.record(std::abs(w1(translate(a, r), translate(b, r)) - ab) / std::max(1.0, ab));
    shift.record(std::abs(w1(a, translate(a, r)) - r) / std::max(1.0, r));
    double prev = tail_first_moment(a, 0.0);
    tail.record(std::abs(prev - first_moment(a)) > 1e-12 * std::max(1.0, prev) ? 1.0 : 0.0);
    for (const auto& atom : a.atoms()) {
      const double v = tail_first_moment(a, atom.location);
      tail.record(v - prev);
      prev = v;
    }
  }
  const double ps[] = {0.1, 0.2, 0.25, 0.3, 0.5, 0.6, 0.75, 0.9, 1.0};
  for (std::size_t i = 0; i < std::size(ps); ++i)
    for (std::size_t j = i + 1; j < std::size(ps); ++j) {
      const double p = ps[i], q = ps[j];
      two_atom_form.record(std::abs(w1(two_atom(p), two_atom(q)) - 2.0 * (1.0 - std::min(p, q) / std::max(p, q))));
    }
  return {"metric", {symmetry, identity, separation, triangle, mean_identity, translation, shift, tail, two_atom_form}};
}

/// pi -> (lambda, theta) -> pi on the positive part.
inline SuiteReport roundtrip_suite(std::uint64_t seed = 3, std::size_t measures = 100) {
  std::mt19937_64 rng(seed);
  Check err{"W1 round-trip error", 0, 0, 1e-8};
  Check mass{"total mass error", 0, 0, 1e-8};
  RandomMeasureSpec spec{2, 50, 0.5, 10.0};
  for (std::size_t i = 0; i < measures; ++i) {
    const ProbabilityMeasure pi = random_measure(rng, spec);
    const SpectralPair p = leading_pair(pi);
    const AgeMeasure back = theta_to_pi(p.lambda, theta_profile(p));
    const AgeMeasure plus = positive_part(pi);
    mass.record(std::abs(total_mass(back) - total_mass(plus)));
    // W1 is defined between equal masses; compare after matching totals.
    const double scale = total_mass(plus) / total_mass(back);
    err.record(w1(plus, map_canonical(back, [scale](std::size_t, const Atom& a) { return Atom{a.location, a.mass * scale}; })));
  }
  return {"roundtrip", {err, mass}};
}

/// Short trajectories: gelation, conservation, criticality, speed and mean
/// audits.
inline SuiteReport evolution_suite(double dt = 1e-3) {
  Check gel{"|t_gel(delta_0) - 1|", 0, 0, 1e-6};
  Check conserve{"mass defect", 0, 0, 1e-12};
  Check drift{"max |lambda - 1|", 0, 0, 1e-3};
  Check phi_range{"phi outside (0, 1]", 0, 0, 0.0};
  Check speed{"speed bound violations", 0, 0, 0.0};
  Check mean_growth{"mean growth violations", 0, 0, 0.0};
  Check stationary{"max W1 to the fixed point", 0, 0, 5e-3};

  SolverOptions opts;
  opts.dt = dt;
  opts.checkpoints = {0.25, 0.5, 0.75, 1.0, 1.25, 1.5};
  struct Case {
    ProbabilityMeasure pi0;
    double t_max;
  };
  const ProbabilityMeasure fix = fixed_point_preset();
  const std::vector<Case> cases = {{dirac(0.0), 1.5}, {two_atom(0.5), 1.0}, {three_atom(10), 1.0}, {fix, 0.5}};
  for (const auto& c : cases) {
    const Trajectory traj = solve(c.pi0, c.t_max, opts);
    if (c.pi0.size() == 1 && c.pi0[0].location == 0.0) gel.record(std::abs(traj.t_gel.value_or(-1.0) - 1.0));
    for (const auto& s : traj.checkpoints) {
      conserve.record(std::abs(total_mass(s.pi) - 1.0));
      if (s.phase == Phase::critical) phi_range.record(s.phi > 0.0 && s.phi <= 1.0 ? 0.0 : 1.0);
    }
    drift.record(traj.max_lambda_drift);
    speed.record(check_speed_bound(traj).pass ? 0.0 : 1.0);
    mean_growth.record(check_mean_growth(traj).pass ? 0.0 : 1.0);
    if (&c == &cases.back())
      for (const auto& s : traj.checkpoints) stationary.record(w1(s.pi, fix));
  }
  return {"evolution", {gel, conserve, drift, phi_range, speed, mean_growth, stationary}};
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"spectral", "metric", "roundtrip", "evolution"};
  return names;
}

inline SuiteReport run_suite(const std::string& name) {
  if (name == "spectral") return spectral_suite();
  if (name == "metric") return metric_suite();
  if (name == "roundtrip") return roundtrip_suite();
  if (name == "evolution") return evolution_suite();
  throw InputError("unknown validation suite '" + name + "'");
}

}  // namespace agefire::validation
