#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "agefire/fixed_point.hpp"
#include "agefire/measures.hpp"
#include "agefire/presets.hpp"
#include "agefire/spectral.hpp"
#include "agefire/validation.hpp"
#include "oracles.hpp"

using namespace agefire;

TEST(LeadingPair, DiracAtOne) {
  const auto p = leading_pair(dirac(1.0));
  EXPECT_NEAR(p.lambda, 1.0, 1e-14);
  EXPECT_NEAR(p.theta[0], 1.0, 1e-14);
}

TEST(LeadingPair, TwoAtomFamily) {
  for (double q : {0.1, 0.25, 0.5, 1.0}) {
    const auto pi = two_atom(q);
    const auto p = leading_pair(pi);
    EXPECT_NEAR(p.lambda, 1.0, 1e-12);
    for (std::size_t i = 0; i < pi.size(); ++i) EXPECT_NEAR(p.theta[i], std::min(pi[i].location, 1.0 / q), 1e-12);
  }
}

TEST(LeadingPair, ThreeAtomFamily) {
  for (int n : {5, 10, 50}) {
    const auto pi = three_atom(n);
    const auto p = leading_pair(pi);
    EXPECT_NEAR(p.lambda, 1.0, 1e-12);
    EXPECT_EQ(p.theta[0], 0.0);
    EXPECT_NEAR(p.theta[1], 1.0, 1e-10);
    EXPECT_NEAR(p.theta[2], n + 1.0 - 1.0 / n, 1e-9);
  }
  EXPECT_NEAR(leading_pair(three_atom(10)).theta[2], 10.9, 1e-9);
}

TEST(LeadingPair, DegenerateMeasureThrows) {
  EXPECT_THROW(leading_pair(dirac(0.0)), DegenerateOperatorError);
  EXPECT_THROW(phi(dirac(0.0)), DegenerateOperatorError);
}

TEST(LeadingPair, NormalizationAndMonotonicity) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 100; ++i) {
    const auto pi = validation::random_measure(rng);
    const auto p = leading_pair(pi);
    double norm = 0.0;
    for (std::size_t j = 0; j < pi.size(); ++j) {
      norm += p.theta[j] * pi[j].mass;
      if (j > 0) EXPECT_GE(p.theta[j], p.theta[j - 1]);
      if (pi[j].location == 0.0) EXPECT_EQ(p.theta[j], 0.0);
    }
    EXPECT_NEAR(norm, 1.0, 1e-12);
    EXPECT_LE(eigen_residual(p), 1e-10 * p.lambda);
  }
}

TEST(LeadingPair, AgreesWithDenseEigensolver) {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 100; ++i) {
    const auto pi = validation::random_measure(rng, {1, 40, 0.3, 10.0});
    const auto p = leading_pair(pi);
    const auto ref = oracle::dense_spectrum(pi);
    EXPECT_NEAR(p.lambda, ref.lambda, 1e-11 * ref.lambda);
    for (std::size_t j = 0; j < pi.size(); ++j)
      EXPECT_NEAR(p.theta[j], ref.theta[j], 1e-7 * std::max(1.0, ref.theta[j]));
  }
}

TEST(LeadingPair, TraceIdentity) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 100; ++i) {
    const auto pi = validation::random_measure(rng, {1, 50, 0.3, 10.0});
    const auto ref = oracle::dense_spectrum(pi);
    double sum = 0.0;
    for (double e : ref.eigenvalues) sum += e;
    EXPECT_NEAR(sum, first_moment(pi), 1e-9);
  }
}

TEST(LeadingPair, DiscretizedFixedPoint) {
  const auto raw = fixed_point::discretize(2000, 40.0);
  const auto p = leading_pair(raw);
  EXPECT_NEAR(p.lambda, 1.0, 1e-5);
  EXPECT_NEAR(theta_sup(p), 2.0, 1e-3);
  EXPECT_NEAR(phi(p), 0.5, 2e-3);
  // theta tracks 2 tanh(x/2) at the atoms.
  double worst = 0.0;
  for (std::size_t j = 0; j < raw.size(); j += 50) worst = std::max(worst, std::abs(p.theta[j] - fixed_point::theta(raw[j].location)));
  EXPECT_LT(worst, 2e-3);
  EXPECT_NEAR(leading_pair(fixed_point_preset()).lambda, 1.0, 1e-12);
}

TEST(ThetaAt, Examples) {
  const auto p = leading_pair(two_atom(0.5));
  EXPECT_NEAR(theta_at(p, 1.0), 1.0, 1e-12);
  EXPECT_EQ(theta_at(p, 0.0), 0.0);
  EXPECT_NEAR(theta_at(p, 10.0), 2.0, 1e-12);
  EXPECT_THROW(theta_at(p, -1.0), InputError);
}

TEST(ThetaAt, ConcaveAndMatchesAtoms) {
  std::mt19937_64 rng(24);
  for (int i = 0; i < 30; ++i) {
    const auto pi = validation::random_measure(rng);
    const auto p = leading_pair(pi);
    for (std::size_t j = 0; j < pi.size(); ++j) EXPECT_NEAR(theta_at(p, pi[j].location), p.theta[j], 1e-12 * std::max(1.0, p.theta[j]));
    std::vector<double> grid;
    for (double s = 0.0; s <= 15.0; s += 0.05) grid.push_back(s);
    const auto vals = theta_at_sorted(p, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_NEAR(vals[k], theta_at(p, grid[k]), 1e-12 * std::max(1.0, vals[k]));
    for (std::size_t k = 2; k < grid.size(); ++k) {
      EXPECT_GE(vals[k] - vals[k - 1], -1e-14);
      EXPECT_LE((vals[k] - vals[k - 1]) - (vals[k - 1] - vals[k - 2]), 1e-12 * std::max(1.0, vals[k]));
    }
    EXPECT_NEAR(theta_at(p, 1e9), theta_sup(p), 1e-12 * theta_sup(p));
  }
}

TEST(ThetaSup, Examples) {
  for (double q : {0.1, 0.25, 0.5, 1.0}) EXPECT_NEAR(theta_sup(leading_pair(two_atom(q))), 1.0 / q, 1e-11);
  EXPECT_NEAR(theta_sup(leading_pair(dirac(1.0))), 1.0, 1e-14);
}

TEST(Phi, Examples) {
  EXPECT_NEAR(phi(dirac(1.0)), 1.0, 1e-14);
  for (double q : {0.1, 0.25, 0.5, 1.0}) EXPECT_NEAR(phi(two_atom(q)), q * q, 1e-12);
  EXPECT_NEAR(phi(fixed_point_preset()), 0.5, 2e-3);
  // Phi(pi_n) ~ 1/n.
  EXPECT_NEAR(phi(three_atom(50)) * 50, 1.0, 0.1);
}

TEST(ThetaToPi, Examples) {
  PiecewiseLinear f{{{0, 0}, {2, 2}}, 0.0};
  const auto m = theta_to_pi(1.0, f);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_DOUBLE_EQ(m[0].location, 2.0);
  EXPECT_DOUBLE_EQ(m[0].mass, 0.5);
  PiecewiseLinear linear{{{0, 0}, {1, 1}, {3, 3}}, 1.0};
  EXPECT_TRUE(theta_to_pi(1.0, linear).empty());
  PiecewiseLinear convex{{{0, 0}, {1, 1}, {2, 3}}, 0.0};
  EXPECT_THROW(theta_to_pi(1.0, convex), InputError);
}

TEST(ThetaToPi, RoundTripOnRandomMeasures) {
  std::mt19937_64 rng(25);
  for (int i = 0; i < 100; ++i) {
    const auto pi = validation::random_measure(rng, {5, 5, 0.5, 10.0});
    const auto p = leading_pair(pi);
    const auto back = theta_to_pi(p.lambda, theta_profile(p));
    const auto plus = validation::positive_part(pi);
    ASSERT_EQ(back.size(), plus.size());
    for (std::size_t j = 0; j < back.size(); ++j) {
      EXPECT_DOUBLE_EQ(back[j].location, plus[j].location);
      EXPECT_NEAR(back[j].mass, plus[j].mass, 1e-10);
    }
  }
}

TEST(LambdaBounds, Examples) {
  for (double q : {0.1, 0.5, 1.0}) EXPECT_NEAR(lambda_lower_bound(two_atom(q)), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(lambda_lower_bound(dirac(3.0)), 3.0);
  EXPECT_DOUBLE_EQ(lambda_lower_bound(dirac(0.0)), 0.0);
  const auto d = lambda_upper_bounds(dirac(3.0));
  EXPECT_DOUBLE_EQ(d.mean_bound, 3.0);
  EXPECT_DOUBLE_EQ(d.hs_bound, 3.0);
  const auto h = lambda_upper_bounds(two_atom(0.5));
  EXPECT_DOUBLE_EQ(h.mean_bound, 1.0);
  EXPECT_DOUBLE_EQ(h.hs_bound, 1.0);
}

TEST(LambdaBounds, HilbertSchmidtMatchesDenseNorm) {
  std::mt19937_64 rng(26);
  for (int i = 0; i < 50; ++i) {
    const auto pi = validation::random_measure(rng, {1, 5, 0.3, 10.0});
    const auto ref = oracle::dense_spectrum(pi);
    double fro = 0.0;
    for (double e : ref.eigenvalues) fro += e * e;
    const auto ub = lambda_upper_bounds(pi);
    EXPECT_NEAR(ub.hs_bound, std::sqrt(fro), 1e-12 * std::max(1.0, ub.hs_bound));
    EXPECT_LE(lambda_lower_bound(pi), ref.lambda + 1e-13);
    EXPECT_LE(ref.lambda, ub.hs_bound + 1e-13);
    EXPECT_LE(ub.hs_bound, ub.mean_bound + 1e-13);
  }
}

TEST(ExplicitThetaBound, Examples) {
  EXPECT_GE(explicit_theta_bound(two_atom(0.5), 0.5), 2.0);
  EXPECT_NEAR(explicit_theta_bound(dirac(1.0), 0.5), std::numbers::e, 1e-14);
  EXPECT_THROW(explicit_theta_bound(dirac(1.0), 1.0), InputError);
  std::mt19937_64 rng(27);
  for (int i = 0; i < 100; ++i) {
    const auto pi = validation::random_measure(rng);
    const auto p = leading_pair(pi);
    for (double c : {0.1, 0.5, 0.9}) EXPECT_GE(explicit_theta_bound(p, c), theta_sup(p) - 1e-13);
  }
}

TEST(SpectralProperties, LipschitzAndMonotone) {
  std::mt19937_64 rng(28);
  for (int i = 0; i < 200; ++i) {
    const auto a = validation::random_measure(rng);
    const auto b = validation::perturb(a, rng, 0.1);
    EXPECT_LE(std::abs(leading_pair(a).lambda - leading_pair(b).lambda), 2.0 * w1(a, b) + 1e-9);
    std::vector<Atom> moved(a.atoms().begin(), a.atoms().end());
    moved[moved.size() / 2].location += 0.5;
    EXPECT_GE(leading_pair(AgeMeasure::from_atoms(moved)).lambda, leading_pair(a).lambda - 1e-12);
  }
}

TEST(SpectralProperties, MassAtZeroIsInvisible) {
  const auto base = AgeMeasure::from_pairs({{1, 0.3}, {2, 0.2}, {5, 0.1}});
  const auto with_zero = AgeMeasure::from_pairs({{0, 0.4}, {1, 0.3}, {2, 0.2}, {5, 0.1}});
  const auto p = leading_pair(base), q = leading_pair(with_zero);
  EXPECT_NEAR(p.lambda, q.lambda, 1e-14);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(p.theta[j], q.theta[j + 1], 1e-13);
}
