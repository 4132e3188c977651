#pragma once

// Named initial measures, parsed from strings such as "twoatom:0.5",
// "threeatom:10", "dirac:1", "fixedpoint" or "fixedpoint:2000:40".

#include <string>
#include <string_view>
#include <vector>

#include "agefire/errors.hpp"
#include "agefire/fixed_point.hpp"
#include "agefire/measures.hpp"
#include "agefire/spectral.hpp"

namespace agefire {

inline constexpr int kFixedPointAtoms = 2000;
inline constexpr double kFixedPointTruncation = 40.0;

/// Quantile discretization of the stationary measure, with locations divided
/// by its leading eigenvalue so that the result is exactly age-critical.
inline ProbabilityMeasure fixed_point_preset(int n_atoms = kFixedPointAtoms, double truncation = kFixedPointTruncation) {
  const ProbabilityMeasure raw = fixed_point::discretize(n_atoms, truncation);
  const double lambda = leading_pair(raw).lambda;
  return ProbabilityMeasure(scale_locations(raw, 1.0 / lambda));
}

namespace detail {

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError("preset: cannot parse " + what + " from '" + s + "'");
  }
}

}  // namespace detail

/// Builds a named preset. Accepted forms:
///   twoatom:<p>                 (1-p) delta_0 + p delta_{1/p}
///   threeatom:<n>               the measure on {0, 1, n^2}
///   fixedpoint[:<atoms>[:<T>]]  discretized stationary measure
///   dirac:<a>                   unit atom at a
inline ProbabilityMeasure from_named(std::string_view spec) {
  const auto parts = detail::split(spec, ':');
  const std::string& name = parts.front();
  auto arg = [&](std::size_t i, const char* what) {
    if (i >= parts.size()) throw InputError("preset '" + name + "' needs parameter " + what);
    return detail::parse_number(parts[i], what);
  };
  if (name == "twoatom" || name == "two_atom") {
    if (parts.size() != 2) throw InputError("usage: twoatom:<p>");
    return two_atom(arg(1, "p"));
  }
  if (name == "threeatom" || name == "three_atom") {
    if (parts.size() != 2) throw InputError("usage: threeatom:<n>");
    const double n = arg(1, "n");
    if (n != static_cast<int>(n)) throw InputError("threeatom: n must be an integer");
    return three_atom(static_cast<int>(n));
  }
  if (name == "dirac") {
    if (parts.size() != 2) throw InputError("usage: dirac:<a>");
    return dirac(arg(1, "a"));
  }
  if (name == "fixedpoint" || name == "fixed_point") {
    if (parts.size() > 3) throw InputError("usage: fixedpoint[:<atoms>[:<truncation>]]");
    const double n = parts.size() > 1 ? arg(1, "atoms") : kFixedPointAtoms;
    const double t = parts.size() > 2 ? arg(2, "truncation") : kFixedPointTruncation;
    if (n != static_cast<int>(n)) throw InputError("fixedpoint: atom count must be an integer");
    return fixed_point_preset(static_cast<int>(n), t);
  }
  throw InputError("unknown preset '" + name + "'");
}

}  // namespace agefire
