#pragma once

// The stationary age distribution with density (1/2) sech^2(x/2).
// Closed forms used below:
//   F(x)            = tanh(x/2)
//   int_0^x s dF(s) = x tanh(x/2) - 2 log cosh(x/2)
//   int_0^x F(s) ds = 2 log cosh(x/2)
//   theta(x)        = 2 tanh(x/2),  phi = 1/2,  mean = 2 log 2

#include <cmath>
#include <numbers>
#include <vector>

#include "agefire/measures.hpp"

namespace agefire::fixed_point {

inline constexpr double kMean = 2.0 * std::numbers::ln2;
inline constexpr double kPhi = 0.5;
inline constexpr double kThetaSup = 2.0;

inline double density(double x) {
  const double c = std::cosh(0.5 * x);
  return 0.5 / (c * c);
}

inline double cdf(double x) { return x <= 0.0 ? 0.0 : std::tanh(0.5 * x); }

// 1 - F(x) = 2 / (1 + e^x), without cancellation
inline double survival(double x) { return x <= 0.0 ? 1.0 : 2.0 * std::exp(-x) / (1.0 + std::exp(-x)); }

inline double quantile(double u) { return 2.0 * std::atanh(u); }

inline double theta(double x) { return 2.0 * std::tanh(0.5 * x); }

// 2 log cosh(x/2) = x + 2 log1p(e^-x) - 2 log 2
inline double log_cosh_term(double x) { return x + 2.0 * std::log1p(std::exp(-x)) - 2.0 * std::numbers::ln2; }

// int_0^x s dF(s)
inline double partial_mean(double x) { return x * std::tanh(0.5 * x) - log_cosh_term(x); }

// int_x^inf s dF(s) = x (1 - F(x)) + 2 log1p(e^-x)
inline double tail_mean_integral(double x) { return x * survival(x) + 2.0 * std::log1p(std::exp(-x)); }

/// Discretization by equal-probability quantile cells on [0, truncation]:
/// n_atoms - 1 cells, each replaced by one atom at its conditional mean, plus
/// one atom at the conditional mean of the tail beyond the truncation point.
inline ProbabilityMeasure discretize(int n_atoms, double truncation) {
  if (n_atoms < 2) throw InputError("fixed_point: need at least 2 atoms");
  if (!(truncation > 0.0) || !std::isfinite(truncation)) throw InputError("fixed_point: truncation must be positive");
  const double covered = cdf(truncation);
  if (covered < 1.0 - 1e-6)
    throw InputError("fixed_point: truncation " + std::to_string(truncation) + " holds less than 1 - 1e-6 of the mass");
  const int cells = n_atoms - 1;
  const double cell_mass = covered / cells;
  std::vector<Atom> atoms;
  atoms.reserve(static_cast<std::size_t>(n_atoms));
  double left_mean = 0.0;
  for (int k = 1; k <= cells; ++k) {
    const double right = k == cells ? truncation : quantile(k * cell_mass);
    const double right_mean = partial_mean(right);
    atoms.push_back({(right_mean - left_mean) / cell_mass, cell_mass});
    left_mean = right_mean;
  }
  const double tail = survival(truncation);
  atoms.push_back({tail_mean_integral(truncation) / tail, tail});
  return ProbabilityMeasure(AgeMeasure::from_atoms(std::move(atoms)));
}

namespace detail {

// int_a^b |c - F(x)| dx for a constant level c
inline double abs_gap_integral(double a, double b, double c) {
  if (b <= a) return 0.0;
  // int_a^b F = (b - a) + 2 (log1p(e^-b) - log1p(e^-a))
  auto integral_f = [](double lo, double hi) {
    return (hi - lo) + 2.0 * (std::log1p(std::exp(-hi)) - std::log1p(std::exp(-lo)));
  };
  const double fa = cdf(a), fb = cdf(b);
  if (c <= fa) return integral_f(a, b) - c * (b - a);
  if (c >= fb) return c * (b - a) - integral_f(a, b);
  const double x = quantile(c);
  return (c * (x - a) - integral_f(a, x)) + (integral_f(x, b) - c * (b - x));
}

}  // namespace detail

/// Exact W1 between a probability measure and the continuous fixed point.
inline double w1_to_fixed_point(const AgeMeasure& pi) {
  double acc = 0.0, level = 0.0, x = 0.0;
  for (const auto& a : pi.atoms()) {
    acc += detail::abs_gap_integral(x, a.location, level);
    level += a.mass;
    x = a.location;
  }
  // Beyond the last atom the level is the total mass (1): int_x^inf 1 - F.
  acc += 2.0 * std::log1p(std::exp(-x));
  return acc;
}

}  // namespace agefire::fixed_point
