#pragma once

// Independent reference computations used by the tests: a dense symmetric
// eigensolver, a min-cost-flow transport solver and adaptive quadrature.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "agefire/measures.hpp"

namespace oracle {

struct DenseSpectrum {
  std::vector<double> eigenvalues;  // ascending
  double lambda = 0.0;
  std::vector<double> theta;        // at every atom of the input, normalized in L1(pi)
};

/// Full spectrum of the symmetrized matrix sqrt(w_i) (x_i ^ x_j) sqrt(w_j).
inline DenseSpectrum dense_spectrum(const agefire::AgeMeasure& pi) {
  const auto atoms = pi.atoms();
  const Eigen::Index n = static_cast<Eigen::Index>(atoms.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      m(i, j) = std::sqrt(atoms[i].mass) * std::min(atoms[i].location, atoms[j].location) * std::sqrt(atoms[j].mass);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  DenseSpectrum out;
  for (Eigen::Index i = 0; i < n; ++i) out.eigenvalues.push_back(es.eigenvalues()(i));
  out.lambda = es.eigenvalues()(n - 1);
  Eigen::VectorXd v = es.eigenvectors().col(n - 1);
  if (v.sum() < 0) v = -v;
  double norm = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double th = atoms[i].mass > 0 ? v(i) / std::sqrt(atoms[i].mass) : 0.0;
    out.theta.push_back(th);
    norm += th * atoms[i].mass;
  }
  for (auto& t : out.theta) t /= norm;
  return out;
}

/// W1 as an optimal transport problem between two equal-mass atomic measures,
/// solved by successive shortest paths (Bellman-Ford on the residual graph).
inline double transport_w1(const agefire::AgeMeasure& a, const agefire::AgeMeasure& b) {
  const auto sa = a.atoms();
  const auto sb = b.atoms();
  const int na = static_cast<int>(sa.size()), nb = static_cast<int>(sb.size());
  const int src = na + nb, snk = src + 1, nodes = snk + 1;
  struct Edge {
    int to;
    double cap, cost;
  };
  std::vector<Edge> edges;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(nodes));
  auto add = [&](int u, int v, double cap, double cost) {
    adj[u].push_back(static_cast<int>(edges.size()));
    edges.push_back({v, cap, cost});
    adj[v].push_back(static_cast<int>(edges.size()));
    edges.push_back({u, 0.0, -cost});
  };
  const double big = 1e300;
  for (int i = 0; i < na; ++i) add(src, i, sa[i].mass, 0.0);
  for (int j = 0; j < nb; ++j) add(na + j, snk, sb[j].mass, 0.0);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j) add(i, na + j, big, std::abs(sa[i].location - sb[j].location));

  double total = 0.0;
  const double eps = 1e-15;
  while (true) {
    std::vector<double> dist(static_cast<std::size_t>(nodes), std::numeric_limits<double>::infinity());
    std::vector<int> via(static_cast<std::size_t>(nodes), -1);
    dist[src] = 0.0;
    for (int round = 0; round < nodes; ++round) {
      bool changed = false;
      for (int u = 0; u < nodes; ++u) {
        if (!std::isfinite(dist[u])) continue;
        for (int e : adj[u])
          if (edges[e].cap > eps && dist[u] + edges[e].cost < dist[edges[e].to] - 1e-15) {
            dist[edges[e].to] = dist[u] + edges[e].cost;
            via[edges[e].to] = e;
            changed = true;
          }
      }
      if (!changed) break;
    }
    if (!std::isfinite(dist[snk])) break;
    double push = big;
    for (int v = snk; v != src; v = edges[via[v] ^ 1].to) push = std::min(push, edges[via[v]].cap);
    if (push <= eps) break;
    for (int v = snk; v != src; v = edges[via[v] ^ 1].to) {
      edges[via[v]].cap -= push;
      edges[via[v] ^ 1].cap += push;
    }
    total += push * dist[snk];
  }
  return total;
}

/// int_0^inf f(x) dx by exp-sinh quadrature.
template <class F>
double integrate_half_line(F f) {
  boost::math::quadrature::exp_sinh<double> q;
  return q.integrate(f, 0.0, std::numeric_limits<double>::infinity());
}

/// int_a^b f(x) dx by tanh-sinh quadrature.
template <class F>
double integrate(F f, double a, double b) {
  boost::math::quadrature::tanh_sinh<double> q;
  return q.integrate(f, a, b);
}

}  // namespace oracle
