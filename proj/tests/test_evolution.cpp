#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "agefire/evolution.hpp"
#include "agefire/fixed_point.hpp"
#include "agefire/measures.hpp"
#include "agefire/presets.hpp"
#include "oracles.hpp"

using namespace agefire;

namespace {

const ProbabilityMeasure& fix() {
  static const ProbabilityMeasure m = fixed_point_preset();
  return m;
}

double max_gap(const Trajectory& a, const Trajectory& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.checkpoints.size(); ++k) m = std::max(m, w1(a.checkpoints[k].pi, b.checkpoints[k].pi));
  return m;
}

}  // namespace

TEST(Step, FixedPointIsNearlyStationary) {
  SolverOptions o;
  const auto s0 = critical_state(fix());
  const auto s1 = step(s0, 1e-3, o);
  EXPECT_LE(w1(s1.pi, fix()), 5e-3);
  EXPECT_LE(s1.lambda_drift, 1e-3);
  EXPECT_NEAR(total_mass(s1.pi), 1.0, 1e-12);
  EXPECT_NEAR(s1.t, 1e-3, 1e-18);
}

TEST(Step, ConservesMassAndSparesTheZeroAtom) {
  SolverOptions o;
  o.merge_eps = 0.0;
  auto s = critical_state(two_atom(0.5));
  const double dt = 1e-3;
  const auto next = step(s, dt, o);
  EXPECT_NEAR(total_mass(next.pi), 1.0, 1e-15);
  // The atom that sat at 0 carries its full mass to dt.
  bool found = false;
  for (const auto& a : next.pi.atoms())
    if (a.location == dt) {
      EXPECT_EQ(a.mass, 0.5);
      found = true;
    }
  EXPECT_TRUE(found);
  // Birth atom holds exactly the decayed mass of the atom at 2.
  const double lost = 0.5 * -std::expm1(-0.25 * 2.0 * dt);
  EXPECT_NEAR(next.pi[0].mass, lost, 1e-16);
  EXPECT_EQ(next.pi[0].location, 0.0);
}

TEST(Step, RejectsBadInput) {
  SolverOptions o;
  EXPECT_THROW(step(critical_state(two_atom(0.5)), 0.0, o), InputError);
  o.lambda_drift_budget = 1e-9;
  EXPECT_THROW(step(critical_state(three_atom(10)), 1e-2, o), AccuracyError);
}

TEST(GelationTime, Examples) {
  EXPECT_NEAR(gelation_time(dirac(0.0)), 1.0, 1e-12);
  EXPECT_EQ(gelation_time(two_atom(0.5)), 0.0);
  EXPECT_NEAR(gelation_time(dirac(0.25)), 0.75, 1e-12);
  EXPECT_THROW(gelation_time(dirac(2.0)), SupercriticalError);
}

TEST(GelationTime, AgreesWithDenseGridScan) {
  const auto pi0 = AgeMeasure::from_pairs({{0, 0.5}, {1, 0.5}});
  auto lam = [&](double t) { return oracle::dense_spectrum(translate(pi0, t)).lambda; };
  // Grid scan for the first crossing, then bisection with the dense solver.
  double lo = 0.0, hi = 0.0;
  for (int k = 1; k <= 4000; ++k) {
    const double t = 2.0 * k / 4000;
    if (lam(t) >= 1.0) {
      hi = t;
      lo = t - 2.0 / 4000;
      break;
    }
  }
  ASSERT_GT(hi, 0.0);
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (lam(mid) < 1.0 ? lo : hi) = mid;
  }
  const double t_ref = 0.5 * (lo + hi);
  EXPECT_NEAR(gelation_time(pi0), t_ref, 1e-9);
  // lambda = (2t + 1 + sqrt(4t^2 + 1)) / 4 for atoms t, 1 + t of mass 1/2, so t* = 2/3.
  EXPECT_NEAR(gelation_time(pi0), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(lam(gelation_time(pi0)), 1.0, 1e-10);
}

TEST(Solve, MonodisperseGelatesAtOne) {
  SolverOptions o;
  o.checkpoints = {0.5, 1.5};
  const auto traj = solve(dirac(0.0), 2.0, o);
  ASSERT_TRUE(traj.t_gel);
  EXPECT_NEAR(*traj.t_gel, 1.0, 1e-6);
  ASSERT_EQ(traj.checkpoints.size(), 4u);
  EXPECT_EQ(traj.checkpoints[0].t, 0.0);
  EXPECT_EQ(traj.checkpoints[1].pi, AgeMeasure(dirac(0.5)));
  EXPECT_EQ(traj.checkpoints[1].phi, 0.0);
  EXPECT_EQ(traj.checkpoints[1].phase, Phase::subcritical);
  EXPECT_EQ(traj.checkpoints[2].phase, Phase::critical);
  EXPECT_LE(traj.lambda_jump, 1e-9);
  for (const auto& s : traj.checkpoints) EXPECT_NEAR(total_mass(s.pi), 1.0, 1e-12);
}

TEST(Solve, FixedPointStaysClose) {
  SolverOptions o;
  o.checkpoints = {0.25, 0.5, 0.75};
  const auto traj = solve(fix(), 1.0, o);
  for (const auto& s : traj.checkpoints) {
    EXPECT_LE(w1(s.pi, fix()), 5e-3);
    EXPECT_NEAR(s.lambda, 1.0, 1e-3);
    EXPECT_NEAR(s.phi, 0.5, 5e-3);
    EXPECT_NEAR(first_moment(s.pi), 2.0 * std::numbers::ln2, 5e-3);
  }
  EXPECT_FALSE(traj.t_gel);
}

TEST(Solve, ZeroHorizon) {
  const auto traj = solve(two_atom(0.5), 0.0);
  ASSERT_EQ(traj.checkpoints.size(), 1u);
  EXPECT_NEAR(traj.checkpoints[0].phi, 0.25, 1e-12);
}

TEST(Solve, RejectsSupercriticalData) {
  EXPECT_THROW(solve(dirac(1.5), 1.0), SupercriticalError);
}

TEST(Solve, DriftIsFirstOrderInDt) {
  std::vector<double> drift;
  for (double dt : {2e-3, 1e-3, 5e-4}) {
    SolverOptions o;
    o.dt = dt;
    drift.push_back(solve(three_atom(10), 0.3, o).max_lambda_drift);
  }
  EXPECT_GE(drift[0] / drift[1], 1.8);
  EXPECT_GE(drift[1] / drift[2], 1.8);
}

TEST(Solve, RichardsonDifferencesHalve) {
  std::vector<Trajectory> tr;
  for (double dt : {2e-3, 1e-3, 5e-4}) {
    SolverOptions o;
    o.dt = dt;
    o.checkpoints = {0.25, 0.5};
    tr.push_back(solve(two_atom(0.5), 0.5, o));
  }
  const double d1 = max_gap(tr[0], tr[1]), d2 = max_gap(tr[1], tr[2]);
  EXPECT_GE(d1 / d2, 1.8);
  EXPECT_LE(d1, 1.0 * 2e-3);  // K dt with K = 1
}

TEST(Solve, WeightDecayFloor) {
  SolverOptions o;
  o.merge_eps = 0.0;
  o.checkpoints = {0.25};
  const auto traj = solve(two_atom(0.5), 0.5, o);
  const double c = traj.max_phi_theta_sup;
  const auto& end = traj.checkpoints.back();
  // The atom initially at 2 is now at 2.5.
  const auto a = std::find_if(end.pi.atoms().begin(), end.pi.atoms().end(),
                               [](const Atom& x) { return std::abs(x.location - 2.5) < 1e-9; });
  ASSERT_NE(a, end.pi.atoms().end());
  EXPECT_GE(a->mass / 0.5, std::exp(-c * 0.5) * (1 - 1e-12));
  EXPECT_LE(c, 1.0 + 1e-3);
}

TEST(Audits, SpeedBound) {
  SolverOptions o;
  o.checkpoints = {0.1, 0.2, 0.3, 0.4};
  const auto fixed = solve(fix(), 0.5, o);
  const auto r1 = check_speed_bound(fixed);
  EXPECT_TRUE(r1.pass);
  for (const auto& iv : r1.intervals) EXPECT_LT(iv.measured, 5e-3);

  const auto mono = solve(dirac(0.0), 0.5, o);
  const auto r2 = check_speed_bound(mono);
  EXPECT_TRUE(r2.pass);
  for (const auto& iv : r2.intervals) EXPECT_NEAR(iv.measured, iv.v - iv.u, 1e-12);

  EXPECT_TRUE(check_speed_bound(solve(two_atom(0.5), 0.5, o)).pass);
}

TEST(Audits, MeanGrowth) {
  SolverOptions o;
  o.checkpoints = {0.25, 0.5, 0.75, 1.25};
  const auto mono = solve(dirac(0.0), 1.5, o);
  EXPECT_TRUE(check_mean_growth(mono).pass);
  for (const auto& s : mono.checkpoints)
    if (s.t < 1.0) EXPECT_NEAR(first_moment(s.pi), s.t, 1e-14);
  EXPECT_TRUE(check_mean_growth(solve(three_atom(10), 1.0, o)).pass);
  const auto fixed = solve(fix(), 1.0, o);
  EXPECT_TRUE(check_mean_growth(fixed).pass);
  for (const auto& s : fixed.checkpoints) {
    EXPECT_NEAR(first_moment(s.pi), 2.0 * std::numbers::ln2, 5e-3);
    if (s.t > 0) EXPECT_LT(first_moment(s.pi), s.t + first_moment(fix()));
  }
}

TEST(Experiments, StabilityLinearResponse) {
  SolverOptions o;
  o.checkpoints = {0.5, 1.0};
  EXPECT_THROW(stability_experiment(fix(), fix(), 1.0, o), InputError);
  const auto small = recriticalize(ProbabilityMeasure(scale_locations(fix(), 0.99)));
  const auto large = recriticalize(ProbabilityMeasure(scale_locations(fix(), 0.98)));
  EXPECT_NEAR(leading_pair(small).lambda, 1.0, 1e-9);
  const auto a = stability_experiment(fix(), small, 1.0, o);
  const auto b = stability_experiment(fix(), large, 1.0, o);
  EXPECT_TRUE(a.bound_holds);
  EXPECT_NEAR(b.series.back().distance / a.series.back().distance, 2.0, 0.4);
}

TEST(Experiments, LyapunovAtFixedPoint) {
  SolverOptions o;
  o.checkpoints = {0.25, 0.5};
  const auto r = lyapunov_experiment(fix(), 0.5, o, &fix());
  for (auto [t, d] : r.series) EXPECT_LE(d, 5e-3);
  const auto cont = lyapunov_experiment(fix(), 0.5, o);
  for (auto [t, d] : cont.series) EXPECT_LE(d, 5e-3);
}
