#pragma once

// Positive atomic measures on [0, inf) and the Wasserstein-1 metric.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <queue>
#include <initializer_list>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "agefire/errors.hpp"

namespace agefire {

struct Atom {
  double location;
  double mass;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// A finite positive measure on [0, inf) stored as atoms sorted strictly by
/// location. Every mass is positive; exact duplicate locations never occur.
class AgeMeasure {
 public:
  AgeMeasure() = default;

  /// Canonicalizes arbitrary (location, mass) pairs: sorts, merges exact
  /// duplicate locations and drops zero masses.
  static AgeMeasure from_atoms(std::vector<Atom> atoms) {
    for (const auto& a : atoms) {
      if (!(a.location >= 0.0) || !std::isfinite(a.location))
        throw InputError("atom location must be finite and >= 0, got " + std::to_string(a.location));
      if (!(a.mass >= 0.0) || !std::isfinite(a.mass))
        throw InputError("atom mass must be finite and >= 0, got " + std::to_string(a.mass));
    }
    std::stable_sort(atoms.begin(), atoms.end(),
                     [](const Atom& a, const Atom& b) { return a.location < b.location; });
    std::vector<Atom> out;
    out.reserve(atoms.size());
    for (const auto& a : atoms) {
      if (!out.empty() && out.back().location == a.location)
        out.back().mass += a.mass;
      else
        out.push_back(a);
    }
    std::erase_if(out, [](const Atom& a) { return a.mass == 0.0; });
    return AgeMeasure(std::move(out));
  }

  static AgeMeasure from_pairs(std::initializer_list<std::pair<double, double>> pairs) {
    std::vector<Atom> atoms;
    for (auto [x, m] : pairs) atoms.push_back({x, m});
    return from_atoms(std::move(atoms));
  }

  std::span<const Atom> atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  bool empty() const noexcept { return atoms_.empty(); }
  const Atom& operator[](std::size_t i) const { return atoms_[i]; }

  /// True when no mass sits away from the origin.
  bool supported_at_zero() const noexcept {
    return atoms_.empty() || (atoms_.size() == 1 && atoms_.front().location == 0.0);
  }

  friend bool operator==(const AgeMeasure&, const AgeMeasure&) = default;

 protected:
  // Caller guarantees canonical form.
  explicit AgeMeasure(std::vector<Atom> canonical) : atoms_(std::move(canonical)) {}

  template <class Fn>
  friend AgeMeasure map_canonical(const AgeMeasure& src, Fn&& fn);
  friend AgeMeasure translate(const AgeMeasure&, double);
  friend AgeMeasure merge_atoms(const AgeMeasure&, double, double*);

 private:
  std::vector<Atom> atoms_;
};

inline constexpr double kTolMass = 1e-12;

inline double total_mass(const AgeMeasure& pi) {
  double s = 0.0;
  for (const auto& a : pi.atoms()) s += a.mass;
  return s;
}

inline double first_moment(const AgeMeasure& pi) {
  double s = 0.0;
  for (const auto& a : pi.atoms()) s += a.location * a.mass;
  return s;
}

/// An AgeMeasure whose total mass is 1 within `tol`.
class ProbabilityMeasure : public AgeMeasure {
 public:
  ProbabilityMeasure() : AgeMeasure(AgeMeasure::from_atoms({{0.0, 1.0}})) {}

  explicit ProbabilityMeasure(AgeMeasure m, double tol = kTolMass) : AgeMeasure(std::move(m)) {
    const double mass = total_mass(*this);
    if (!(std::abs(mass - 1.0) <= tol))
      throw InputError("not a probability measure: total mass " + std::to_string(mass));
  }
};

// sum of x * w over atoms with x >= r
inline double tail_first_moment(const AgeMeasure& pi, double r) {
  double s = 0.0;
  for (const auto& a : pi.atoms())
    if (a.location >= r) s += a.location * a.mass;
  return s;
}

// pi([x, inf)), atom at x included
inline double tail_mass(const AgeMeasure& pi, double x) {
  double s = 0.0;
  for (const auto& a : pi.atoms())
    if (a.location >= x) s += a.mass;
  return s;
}

/// Right-continuous distribution function pi([0, x]).
inline double cdf(const AgeMeasure& pi, double x) {
  double s = 0.0;
  for (const auto& a : pi.atoms()) {
    if (a.location > x) break;
    s += a.mass;
  }
  return s;
}

/// W1 as the L1 norm of the difference of distribution functions. Both
/// measures must carry the same total mass (relative tolerance 1e-9).
inline double w1(const AgeMeasure& a, const AgeMeasure& b) {
  const double ma = total_mass(a), mb = total_mass(b);
  if (std::abs(ma - mb) > 1e-9 * std::max({1.0, ma, mb}))
    throw InputError("w1: total masses differ (" + std::to_string(ma) + " vs " + std::to_string(mb) + ")");
  auto ia = a.atoms().begin(), ea = a.atoms().end();
  auto ib = b.atoms().begin(), eb = b.atoms().end();
  double fa = 0.0, fb = 0.0, x = 0.0, acc = 0.0;
  while (ia != ea || ib != eb) {
    double next = std::numeric_limits<double>::infinity();
    if (ia != ea) next = std::min(next, ia->location);
    if (ib != eb) next = std::min(next, ib->location);
    acc += std::abs(fa - fb) * (next - x);
    x = next;
    while (ia != ea && ia->location == x) fa += (ia++)->mass;
    while (ib != eb && ib->location == x) fb += (ib++)->mass;
  }
  return acc;
}

template <class Fn>
AgeMeasure map_canonical(const AgeMeasure& src, Fn&& fn) {
  std::vector<Atom> out;
  out.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    Atom a = fn(i, src[i]);
    if (a.mass > 0.0) out.push_back(a);
  }
  return AgeMeasure(std::move(out));
}

/// Shifts every atom right by r >= 0.
inline AgeMeasure translate(const AgeMeasure& pi, double r) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw InputError("translate: shift must be finite and >= 0");
  if (r == 0.0) return pi;
  std::vector<Atom> out(pi.atoms().begin(), pi.atoms().end());
  for (auto& a : out) a.location += r;
  // Large shifts can collapse neighbours in floating point.
  for (std::size_t i = 1; i < out.size(); ++i)
    if (!(out[i].location > out[i - 1].location)) return AgeMeasure::from_atoms(std::move(out));
  return AgeMeasure(std::move(out));
}

/// Multiplies every location by s > 0.
inline AgeMeasure scale_locations(const AgeMeasure& pi, double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw InputError("scale_locations: factor must be positive");
  std::vector<Atom> out(pi.atoms().begin(), pi.atoms().end());
  for (auto& a : out) a.location *= s;
  return AgeMeasure::from_atoms(std::move(out));
}

/// The measure with density theta against pi; theta is given at the atoms.
inline AgeMeasure tilt(const AgeMeasure& pi, std::span<const double> theta) {
  if (theta.size() != pi.size()) throw InputError("tilt: theta size does not match atom count");
  for (double v : theta)
    if (!(v >= 0.0)) throw InputError("tilt: theta must be nonnegative");
  return map_canonical(pi, [&](std::size_t i, const Atom& a) { return Atom{a.location, a.mass * theta[i]}; });
}

namespace detail {

// Prices a contiguous run of atoms collapsed to its barycenter. Sums run over
// the members directly so tiny masses keep full relative precision.
struct MergeCostTable {
  std::span<const Atom> atoms;

  explicit MergeCostTable(std::span<const Atom> a) : atoms(a) {}

  // Atoms [lo, hi) collapsed to their barycenter: (mass, barycenter, transport cost).
  std::tuple<double, double, double> group(std::size_t lo, std::size_t hi) const {
    if (hi - lo == 1) return {atoms[lo].mass, atoms[lo].location, 0.0};
    double m = 0.0, s = 0.0;
    const double origin = atoms[lo].location;
    for (std::size_t i = lo; i < hi; ++i) {
      m += atoms[i].mass;
      s += atoms[i].mass * (atoms[i].location - origin);
    }
    const double offset = s / m;
    double cost = 0.0;
    for (std::size_t i = lo; i < hi; ++i) cost += atoms[i].mass * std::abs(atoms[i].location - origin - offset);
    const double b = std::clamp(origin + offset, atoms[lo].location, atoms[hi - 1].location);
    return {m, b, cost};
  }
};

}  // namespace detail

/// Coalesces adjacent atoms into mass-weighted barycenters, cheapest merge
/// first, while the total transport cost stays within `eps`. The cost of the
/// merge actually performed (equal to the W1 distance moved) is written to
/// `spent` when non-null. Total mass and first moment are preserved.
inline AgeMeasure merge_atoms(const AgeMeasure& pi, double eps, double* spent = nullptr) {
  if (spent) *spent = 0.0;
  if (!(eps > 0.0) || pi.size() < 2) return pi;
  const auto atoms = pi.atoms();
  const std::size_t n = atoms.size();
  const detail::MergeCostTable table(atoms);

  // Groups are contiguous index ranges kept in a doubly linked list.
  std::vector<std::size_t> lo(n), hi(n), prev(n), next(n), version(n, 0);
  std::vector<double> cost(n, 0.0);
  std::vector<bool> alive(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = i;
    hi[i] = i + 1;
    prev[i] = i == 0 ? n : i - 1;
    next[i] = i + 1;
  }

  struct Candidate {
    double delta;
    std::size_t left;
    std::size_t left_version, right_version;
    bool operator>(const Candidate& o) const { return delta > o.delta; }
  };
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> heap;
  auto push = [&](std::size_t g) {
    const std::size_t r = next[g];
    if (r >= n) return;
    const double merged = std::get<2>(table.group(lo[g], hi[r]));
    heap.push({merged - cost[g] - cost[r], g, version[g], version[r]});
  };
  for (std::size_t i = 0; i + 1 < n; ++i) push(i);

  double used = 0.0;
  while (!heap.empty()) {
    const Candidate c = heap.top();
    heap.pop();
    const std::size_t g = c.left;
    if (!alive[g] || version[g] != c.left_version) continue;
    const std::size_t r = next[g];
    if (r >= n || version[r] != c.right_version) continue;
    if (used + c.delta > eps) break;
    used += c.delta;
    hi[g] = hi[r];
    cost[g] = std::get<2>(table.group(lo[g], hi[g]));
    alive[r] = false;
    next[g] = next[r];
    if (next[g] < n) prev[next[g]] = g;
    ++version[g];
    push(g);
    if (prev[g] < n) push(prev[g]);
  }
  if (used == 0.0) return pi;

  std::vector<Atom> out;
  for (std::size_t g = 0; g < n; g = next[g]) {
    if (hi[g] - lo[g] == 1) {
      out.push_back(atoms[lo[g]]);
    } else {
      auto [m, b, c] = table.group(lo[g], hi[g]);
      out.push_back({b, m});
    }
  }
  if (spent) *spent = used;
  for (std::size_t i = 1; i < out.size(); ++i)
    if (!(out[i].location > out[i - 1].location)) return AgeMeasure::from_atoms(std::move(out));
  return AgeMeasure(std::move(out));
}

// Named presets ---------------------------------------------------------------

/// (1-p) delta_0 + p delta_{1/p}: mean 1 and age-critical for every p in (0, 1].
inline ProbabilityMeasure two_atom(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw InputError("two_atom: p must lie in (0, 1]");
  return ProbabilityMeasure(AgeMeasure::from_atoms({{0.0, 1.0 - p}, {1.0 / p, p}}));
}

/// Measure on {0, 1, n^2} with pi({1}) = 1 - 1/n and pi({n^2}) = 1/(n^2+n-1).
inline ProbabilityMeasure three_atom(int n) {
  if (n < 2) throw InputError("three_atom: n must be >= 2");
  const double nd = n;
  const double far = 1.0 / (nd * nd + nd - 1.0);
  const double one = 1.0 - 1.0 / nd;
  return ProbabilityMeasure(AgeMeasure::from_atoms({{0.0, 1.0 / nd - far}, {1.0, one}, {nd * nd, far}}));
}

inline ProbabilityMeasure dirac(double a) {
  if (!(a >= 0.0) || !std::isfinite(a)) throw InputError("dirac: location must be finite and >= 0");
  return ProbabilityMeasure(AgeMeasure::from_atoms({{a, 1.0}}));
}

}  // namespace agefire
