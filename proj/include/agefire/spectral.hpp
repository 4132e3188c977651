#pragma once

// Principal eigenpair of the min-kernel operator
//   (L_pi f)(s) = int (x ^ s) f(x) dpi(x)
// on an atomic measure, the burning-rate functional Phi, the reconstruction
// of pi from (lambda, theta), and the explicit bounds on lambda and theta.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "agefire/errors.hpp"
#include "agefire/measures.hpp"

namespace agefire {

struct EigenOptions {
  // Stop once successive Rayleigh quotients differ by less than this (relative).
  double eigen_tol = 1e-13;
  // ... and the eigen-residual max_i |lambda theta_i - (L theta)_i| is below
  // residual_tol * lambda * max_i theta_i.
  double residual_tol = 1e-12;
  // Residual accepted when the iteration budget runs out.
  double fallback_residual_tol = 1e-10;
  std::size_t max_iters = 100000;
};

/// Leading eigenvalue and the L1(pi)-normalized eigenfunction at the atoms.
struct SpectralPair {
  double lambda = 0.0;
  std::vector<double> theta;  // aligned with source.atoms()
  double residual = 0.0;      // max_i |lambda theta_i - (L theta)_i|
  std::size_t iterations = 0;
  AgeMeasure source;
};

namespace detail {

// out_i = sum_j (x_i ^ x_j) v_j w_j for sorted x, in O(n).
inline void apply_min_kernel(std::span<const Atom> atoms, std::span<const double> v, std::span<double> out) {
  const std::size_t n = atoms.size();
  double suffix = 0.0;  // sum_{j >= i} v_j w_j, accumulated from the right
  for (std::size_t i = n; i-- > 0;) {
    suffix += v[i] * atoms[i].mass;
    out[i] = atoms[i].location * suffix;
  }
  double prefix = 0.0;  // sum_{j < i} x_j v_j w_j
  for (std::size_t i = 0; i < n; ++i) {
    out[i] += prefix;
    prefix += atoms[i].location * v[i] * atoms[i].mass;
  }
}

inline double weighted_dot(std::span<const Atom> atoms, std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) s += a[i] * b[i] * atoms[i].mass;
  return s;
}

// One step of inverse iteration: solves (K W - sigma I) y = v for positive
// sorted x, with K_ij = x_i ^ x_j. K^-1 is tridiagonal, so multiplying through
// by it gives the tridiagonal system (W - sigma K^-1) y = K^-1 v. For sigma
// above the top eigenvalue that matrix is negative definite and the Thomas
// sweep needs no pivoting. Returns false if the sweep breaks down.
inline bool inverse_iteration_step(std::span<const Atom> atoms, double sigma, std::span<const double> v,
                                   std::span<double> y) {
  const std::size_t n = atoms.size();
  std::vector<double> inv_d(n), diag(n), off(n, 0.0), rhs(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double d = atoms[k].location - (k ? atoms[k - 1].location : 0.0);
    if (!(d > 0.0)) return false;
    inv_d[k] = 1.0 / d;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double t_kk = inv_d[k] + (k + 1 < n ? inv_d[k + 1] : 0.0);
    diag[k] = atoms[k].mass - sigma * t_kk;
    if (k + 1 < n) off[k] = sigma * inv_d[k + 1];
    rhs[k] = t_kk * v[k] - (k ? inv_d[k] * v[k - 1] : 0.0) - (k + 1 < n ? inv_d[k + 1] * v[k + 1] : 0.0);
  }
  for (std::size_t k = 1; k < n; ++k) {
    if (diag[k - 1] == 0.0) return false;
    const double m = off[k - 1] / diag[k - 1];
    diag[k] -= m * off[k - 1];
    rhs[k] -= m * rhs[k - 1];
  }
  if (diag[n - 1] == 0.0) return false;
  y[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t k = n - 1; k-- > 0;) y[k] = (rhs[k] - off[k] * y[k + 1]) / diag[k];
  double ymax = 0.0;
  for (double x : y) ymax = std::abs(x) > std::abs(ymax) ? x : ymax;
  if (!std::isfinite(ymax) || ymax == 0.0) return false;
  for (double& x : y) x /= ymax;
  return true;
}

}  // namespace detail

/// Eigen-residual max_i |lambda theta_i - (L theta)_i| recomputed from scratch.
inline double eigen_residual(const SpectralPair& pair) {
  const auto atoms = pair.source.atoms();
  std::vector<double> k(atoms.size());
  detail::apply_min_kernel(atoms, pair.theta, k);
  double r = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) r = std::max(r, std::abs(pair.lambda * pair.theta[i] - k[i]));
  return r;
}

/// Power iteration for the Perron pair of L_pi. The iterate lives in theta
/// coordinates; the Rayleigh quotient is taken in L2(pi), which is the same
/// sequence as iterating the symmetrized matrix sqrt(w_i) (x_i ^ x_j) sqrt(w_j).
/// Atoms at the origin stay in the measure with theta = 0.
///
/// `warm_start`, when given, must be aligned with the atoms of `pi` and
/// replaces the all-ones start vector.
inline SpectralPair leading_pair(const AgeMeasure& pi, const EigenOptions& opts = {},
                                 std::span<const double> warm_start = {}) {
  if (pi.supported_at_zero()) throw DegenerateOperatorError();
  const auto all = pi.atoms();
  const std::size_t offset = all.front().location == 0.0 ? 1 : 0;
  const auto atoms = all.subspan(offset);
  const std::size_t n = atoms.size();

  std::vector<double> v(n, 1.0), kv(n);
  if (warm_start.size() == all.size()) {
    bool usable = false;
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = std::max(warm_start[i + offset], 0.0);
      usable = usable || v[i] > 0.0;
    }
    if (!usable) std::fill(v.begin(), v.end(), 1.0);
  }

  double rho = 0.0, prev_rho = -1.0, residual = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  bool converged = false;
  for (; it < opts.max_iters; ++it) {
    detail::apply_min_kernel(atoms, v, kv);
    const double vv = detail::weighted_dot(atoms, v, v);
    rho = detail::weighted_dot(atoms, v, kv) / vv;
    double vmax = 0.0;
    residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      residual = std::max(residual, std::abs(kv[i] - rho * v[i]));
      vmax = std::max(vmax, std::abs(v[i]));
    }
    const double rel_residual = residual / (rho * vmax);
    const bool rayleigh_settled = std::abs(rho - prev_rho) <= opts.eigen_tol * std::max(1.0, rho);
    if ((rayleigh_settled && rel_residual <= opts.residual_tol) || rel_residual <= 1e-15) {
      converged = true;
      break;
    }
    prev_rho = rho;
    double kmax = 0.0;
    for (double x : kv) kmax = std::max(kmax, std::abs(x));
    for (std::size_t i = 0; i < n; ++i) v[i] = kv[i] / kmax;
  }

  // Polish with two inverse-iteration steps shifted just above lambda; kept
  // only if the residual improves.
  {
    std::vector<double> y(n), w(v);
    double best = residual;
    for (int k = 0; k < 2; ++k) {
      if (!detail::inverse_iteration_step(atoms, rho * (1.0 + 1e-9), w, y)) break;
      detail::apply_min_kernel(atoms, y, kv);
      const double r = detail::weighted_dot(atoms, y, kv) / detail::weighted_dot(atoms, y, y);
      double res = 0.0;
      for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::abs(kv[i] - r * y[i]));
      if (!(res < best)) break;
      best = res;
      rho = r;
      v = y;
      w = y;
    }
  }

  // One more application gives theta as an exact image of L, so it inherits
  // the monotone concave structure of the kernel.
  detail::apply_min_kernel(atoms, v, kv);
  for (std::size_t i = 0; i < n; ++i) v[i] = kv[i] / rho;

  SpectralPair pair;
  pair.lambda = rho;
  pair.iterations = it;
  pair.source = pi;
  pair.theta.assign(all.size(), 0.0);
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) norm += v[i] * atoms[i].mass;
  for (std::size_t i = 0; i < n; ++i) pair.theta[i + offset] = v[i] / norm;
  pair.residual = eigen_residual(pair);

  double tmax = 0.0;
  for (double t : pair.theta) tmax = std::max(tmax, t);
  if (!converged && pair.residual > opts.fallback_residual_tol * rho * tmax) {
    std::ostringstream os;
    os << "leading_pair: no convergence after " << it << " iterations (residual " << pair.residual
       << ", lambda " << rho << ")";
    throw AccuracyError(os.str());
  }
  return pair;
}

/// theta extended to s >= 0: lambda^-1 sum_j (x_j ^ s) theta_j w_j.
inline double theta_at(const SpectralPair& pair, double s) {
  if (!(s >= 0.0)) throw InputError("theta_at: s must be >= 0");
  double acc = 0.0;
  const auto atoms = pair.source.atoms();
  for (std::size_t j = 0; j < atoms.size(); ++j) acc += std::min(atoms[j].location, s) * pair.theta[j] * atoms[j].mass;
  return acc / pair.lambda;
}

/// theta evaluated at ascending points in O(n + m).
inline std::vector<double> theta_at_sorted(const SpectralPair& pair, std::span<const double> points) {
  const auto atoms = pair.source.atoms();
  double suffix = 0.0;  // sum over atoms with x_j > s of theta_j w_j
  for (std::size_t j = 0; j < atoms.size(); ++j) suffix += pair.theta[j] * atoms[j].mass;
  double prefix = 0.0;  // sum over atoms with x_j <= s of x_j theta_j w_j
  std::vector<double> out(points.size());
  std::size_t j = 0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double s = points[k];
    while (j < atoms.size() && atoms[j].location <= s) {
      const double tw = pair.theta[j] * atoms[j].mass;
      prefix += atoms[j].location * tw;
      suffix -= tw;
      ++j;
    }
    out[k] = (prefix + s * std::max(suffix, 0.0)) / pair.lambda;
  }
  return out;
}

/// theta(inf) = lambda^-1 sum_j x_j theta_j w_j, the supremum of theta.
inline double theta_sup(const SpectralPair& pair) {
  double acc = 0.0;
  const auto atoms = pair.source.atoms();
  for (std::size_t j = 0; j < atoms.size(); ++j) acc += atoms[j].location * pair.theta[j] * atoms[j].mass;
  return acc / pair.lambda;
}

/// Phi = (int theta^3 dpi)^-1.
inline double phi(const SpectralPair& pair) {
  double acc = 0.0;
  const auto atoms = pair.source.atoms();
  for (std::size_t j = 0; j < atoms.size(); ++j) acc += pair.theta[j] * pair.theta[j] * pair.theta[j] * atoms[j].mass;
  return 1.0 / acc;
}

inline double phi(const AgeMeasure& pi, const EigenOptions& opts = {}) { return phi(leading_pair(pi, opts)); }

// theta <-> pi ---------------------------------------------------------------

/// Concave piecewise-linear function through `knots` (strictly increasing
/// abscissae, starting at (0, 0) or implicitly preceded by it), continued
/// beyond the last knot with `final_slope`.
struct PiecewiseLinear {
  std::vector<std::pair<double, double>> knots;
  double final_slope = 0.0;
};

/// The piecewise-linear theta extension of a pair: kinks at the positive atoms.
inline PiecewiseLinear theta_profile(const SpectralPair& pair) {
  PiecewiseLinear f;
  f.knots.emplace_back(0.0, 0.0);
  const auto atoms = pair.source.atoms();
  for (std::size_t j = 0; j < atoms.size(); ++j)
    if (atoms[j].location > 0.0) f.knots.emplace_back(atoms[j].location, pair.theta[j]);
  f.final_slope = 0.0;
  return f;
}

/// Reconstructs the part of pi on (0, inf) from lambda and theta: an atom at
/// each kink x with mass lambda (theta'_left(x) - theta'_right(x)) / theta(x).
inline AgeMeasure theta_to_pi(double lambda, const PiecewiseLinear& theta) {
  if (!(lambda > 0.0)) throw InputError("theta_to_pi: lambda must be positive");
  std::vector<std::pair<double, double>> k = theta.knots;
  if (k.empty() || k.front().first != 0.0) k.insert(k.begin(), {0.0, 0.0});
  if (k.front().second != 0.0) throw InputError("theta_to_pi: theta(0) must be 0");
  if (!(theta.final_slope >= 0.0)) throw InputError("theta_to_pi: final slope must be >= 0");

  std::vector<double> slopes;  // slopes[i] on (k[i], k[i+1]); last one is final_slope
  for (std::size_t i = 0; i + 1 < k.size(); ++i) {
    const double dx = k[i + 1].first - k[i].first;
    if (!(dx > 0.0)) throw InputError("theta_to_pi: kink locations must be strictly increasing");
    if (!(k[i + 1].second > 0.0)) throw InputError("theta_to_pi: theta must be positive away from 0");
    slopes.push_back((k[i + 1].second - k[i].second) / dx);
  }
  slopes.push_back(theta.final_slope);

  double scale = 0.0;
  for (double s : slopes) scale = std::max(scale, std::abs(s));
  std::vector<Atom> atoms;
  for (std::size_t i = 1; i < k.size(); ++i) {
    double drop = slopes[i - 1] - slopes[i];
    if (drop < 0.0) {
      if (drop < -1e-12 * scale)
        throw InputError("theta_to_pi: theta is not concave at x = " + std::to_string(k[i].first));
      drop = 0.0;
    }
    atoms.push_back({k[i].first, lambda * drop / k[i].second});
  }
  return AgeMeasure::from_atoms(std::move(atoms));
}

// Bounds --------------------------------------------------------------------

/// sup over atoms of x pi([x, inf)); never exceeds lambda.
inline double lambda_lower_bound(const AgeMeasure& pi) {
  double best = 0.0, tail = total_mass(pi);
  for (const auto& a : pi.atoms()) {
    best = std::max(best, a.location * tail);
    tail -= a.mass;
  }
  return best;
}

struct LambdaUpperBounds {
  double mean_bound;  // int x dpi
  double hs_bound;    // Hilbert-Schmidt norm of L_pi
};

inline LambdaUpperBounds lambda_upper_bounds(const AgeMeasure& pi) {
  // sum_ij (x_i ^ x_j)^2 w_i w_j = sum_i w_i x_i^2 (w_i + 2 sum_{j > i} w_j)
  double above = total_mass(pi), hs2 = 0.0;
  for (const auto& a : pi.atoms()) {
    above -= a.mass;
    hs2 += a.mass * a.location * a.location * (a.mass + 2.0 * std::max(above, 0.0));
  }
  return {first_moment(pi), std::sqrt(hs2)};
}

/// (x0 / lambda) exp(C / (1 - C)) for the smallest atom location x0 with
/// int 1(x > x0) x dpi <= lambda C. Dominates theta(inf).
inline double explicit_theta_bound(const SpectralPair& pair, double c) {
  if (!(c > 0.0 && c < 1.0)) throw InputError("explicit_theta_bound: C must lie in (0, 1)");
  const auto atoms = pair.source.atoms();
  double beyond = first_moment(pair.source);  // int 1(x > x0) x dpi, updated as x0 advances
  for (const auto& a : atoms) {
    beyond -= a.location * a.mass;
    if (std::max(beyond, 0.0) <= pair.lambda * c) return a.location / pair.lambda * std::exp(c / (1.0 - c));
  }
  // Unreachable: beyond the last atom the tail is empty.
  return atoms.back().location / pair.lambda * std::exp(c / (1.0 - c));
}

inline double explicit_theta_bound(const AgeMeasure& pi, double c, const EigenOptions& opts = {}) {
  return explicit_theta_bound(leading_pair(pi, opts), c);
}

}  // namespace agefire
