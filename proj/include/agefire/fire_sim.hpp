#pragma once

// Event-driven simulation of the mean-field forest fire with ages: a dynamic
// Erdos-Renyi graph (each vertex pair gains an edge at rate 1/n) plus
// lightning striking each vertex at rate lambda_n. A strike deletes every edge
// of the struck cluster and resets the ages of its vertices to 0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "agefire/errors.hpp"
#include "agefire/measures.hpp"

namespace agefire::sim {

using Vertex = std::uint32_t;
using ClusterHistogram = std::map<std::size_t, std::size_t>;  // size -> number of clusters

class FireGraph {
 public:
  FireGraph() = default;

  /// n isolated vertices with the given ages at time 0.
  explicit FireGraph(std::span<const double> ages, std::uint64_t seed = 0) : adjacency_(ages.size()), rng_(seed) {
    if (ages.empty()) throw InputError("FireGraph: need at least one vertex");
    last_burn_.reserve(ages.size());
    for (double a : ages) {
      if (!(a >= 0.0) || !std::isfinite(a)) throw InputError("FireGraph: ages must be finite and >= 0");
      last_burn_.push_back(-a);
    }
  }

  std::size_t n() const noexcept { return adjacency_.size(); }
  double time() const noexcept { return t_; }
  std::size_t edge_count() const noexcept { return edges_; }
  double age(Vertex v) const { return t_ - last_burn_[v]; }
  std::span<const Vertex> neighbors(Vertex v) const { return adjacency_[v]; }
  std::mt19937_64& rng() noexcept { return rng_; }

  bool has_edge(Vertex a, Vertex b) const {
    const auto& small = adjacency_[a].size() <= adjacency_[b].size() ? adjacency_[a] : adjacency_[b];
    const Vertex other = &small == &adjacency_[a] ? b : a;
    return std::find(small.begin(), small.end(), other) != small.end();
  }

  /// Inserts {a, b} unless present or a == b. Returns whether it was added.
  bool add_edge(Vertex a, Vertex b) {
    if (a == b || has_edge(a, b)) return false;
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
    ++edges_;
    return true;
  }

  /// Vertices of the cluster containing v, by breadth-first search.
  std::vector<Vertex> component(Vertex v) const {
    std::vector<Vertex> out{v};
    std::vector<bool> seen(n(), false);
    seen[v] = true;
    for (std::size_t head = 0; head < out.size(); ++head)
      for (Vertex w : adjacency_[out[head]])
        if (!seen[w]) {
          seen[w] = true;
          out.push_back(w);
        }
    return out;
  }

  /// Burns the cluster of v at the current time. Returns its size.
  std::size_t strike(Vertex v) {
    const std::vector<Vertex> cluster = component(v);
    std::size_t degree_sum = 0;
    for (Vertex u : cluster) {
      degree_sum += adjacency_[u].size();
      adjacency_[u].clear();
      last_burn_[u] = t_;
    }
    edges_ -= degree_sum / 2;
    return cluster.size();
  }

  void advance_to(double t) { t_ = t; }

  /// Edge count from the adjacency lists.
  std::size_t recount_edges() const {
    std::size_t s = 0;
    for (const auto& a : adjacency_) s += a.size();
    return s / 2;
  }

 private:
  std::vector<std::vector<Vertex>> adjacency_;
  std::vector<double> last_burn_;
  std::size_t edges_ = 0;
  double t_ = 0.0;
  std::mt19937_64 rng_;
};

/// Age-driven inhomogeneous random graph: each pair {v, w} is joined
/// independently with probability 1 - exp(-(a(v) ^ a(w)) / n). Vertices are
/// visited in increasing age; all pairs of v with older vertices share one
/// probability, so geometric skipping samples them in O(n + edges).
inline FireGraph sample_irg(std::span<const double> ages, std::uint64_t seed) {
  if (ages.empty()) throw InputError("sample_irg: n must be >= 1");
  FireGraph g(ages, seed);
  const std::size_t n = ages.size();
  std::vector<Vertex> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<Vertex>(i);
  std::stable_sort(order.begin(), order.end(), [&](Vertex a, Vertex b) { return ages[a] < ages[b]; });
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto& rng = g.rng();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = ages[order[i]];
    if (a <= 0.0) continue;
    const double p = -std::expm1(-a / static_cast<double>(n));
    const double log_q = std::log1p(-p);
    std::size_t j = i;
    while (true) {
      // Number of failures before the next success is geometric(p).
      const double u = unif(rng);
      const double skip = p >= 1.0 ? 0.0 : std::floor(std::log1p(-u) / log_q);
      if (skip >= static_cast<double>(n)) break;
      j += static_cast<std::size_t>(skip) + 1;
      if (j >= n) break;
      g.add_edge(order[i], order[j]);
    }
  }
  return g;
}

/// Empirical age measure: mass 1/n at each vertex age.
inline ProbabilityMeasure empirical_age_measure(const FireGraph& g) {
  std::vector<double> ages(g.n());
  for (Vertex v = 0; v < g.n(); ++v) ages[v] = g.age(v);
  std::sort(ages.begin(), ages.end());
  // Masses from exact counts, so equal ages carry count / n without rounding drift.
  std::vector<Atom> atoms;
  const double n = static_cast<double>(g.n());
  for (std::size_t i = 0; i < ages.size();) {
    std::size_t j = i;
    while (j < ages.size() && ages[j] == ages[i]) ++j;
    atoms.push_back({ages[i], static_cast<double>(j - i) / n});
    i = j;
  }
  return ProbabilityMeasure(AgeMeasure::from_atoms(std::move(atoms)), 1e-9);
}

/// Sizes of all connected components.
inline ClusterHistogram cluster_sizes(const FireGraph& g) {
  ClusterHistogram hist;
  std::vector<bool> seen(g.n(), false);
  std::vector<Vertex> queue;
  for (Vertex s = 0; s < g.n(); ++s) {
    if (seen[s]) continue;
    seen[s] = true;
    queue.assign(1, s);
    for (std::size_t head = 0; head < queue.size(); ++head)
      for (Vertex w : g.neighbors(queue[head]))
        if (!seen[w]) {
          seen[w] = true;
          queue.push_back(w);
        }
    ++hist[queue.size()];
  }
  return hist;
}

struct SimRecord {
  double t = 0.0;
  std::size_t n = 0;
  ProbabilityMeasure ages;
  ClusterHistogram clusters;
  std::uint64_t burn_events = 0;     // cumulative strikes
  std::uint64_t burned_vertices = 0;  // cumulative vertices reset
  std::size_t edges = 0;

  std::size_t largest_cluster() const { return clusters.empty() ? 0 : clusters.rbegin()->first; }
  std::size_t cluster_count() const {
    std::size_t c = 0;
    for (auto [k, cnt] : clusters) c += cnt;
    return c;
  }
};

struct RunOptions {
  double lambda_n = 0.0;  // lightning rate per vertex
  double t_max = 0.0;
  std::vector<double> checkpoints;  // records are emitted at these times, the start time and t_max
  std::uint64_t seed = 0;
  // When positive, the edge count is checked against a full recount every
  // audit_every events; a mismatch throws.
  std::uint64_t audit_every = 0;
  // Optional hook, called after every strike with the burned cluster.
  std::function<void(const FireGraph&, Vertex, std::size_t)> on_strike;
};

inline SimRecord snapshot(const FireGraph& g, std::uint64_t burns, std::uint64_t burned) {
  SimRecord r;
  r.t = g.time();
  r.n = g.n();
  r.ages = empirical_age_measure(g);
  r.clusters = cluster_sizes(g);
  r.burn_events = burns;
  r.burned_vertices = burned;
  r.edges = g.edge_count();
  return r;
}

/// Gillespie simulation from the current graph state up to t_max. Candidate
/// edge events arrive at total rate C(n,2)/n and pick a uniform pair;
/// lightning arrives at total rate n lambda_n and picks a uniform vertex.
inline std::vector<SimRecord> run(FireGraph& g, const RunOptions& opts) {
  if (!(opts.lambda_n >= 0.0)) throw InputError("run: lightning rate must be >= 0");
  if (!(opts.t_max >= g.time())) throw InputError("run: t_max precedes the current time");
  std::vector<double> grid = opts.checkpoints;
  grid.push_back(g.time());
  grid.push_back(opts.t_max);
  std::erase_if(grid, [&](double t) { return t < g.time() || t > opts.t_max; });
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const double n = static_cast<double>(g.n());
  const double edge_rate = g.n() > 1 ? 0.5 * (n - 1.0) : 0.0;
  const double fire_rate = n * opts.lambda_n;
  const double total_rate = edge_rate + fire_rate;

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> wait(total_rate > 0.0 ? total_rate : 1.0);
  std::uniform_int_distribution<Vertex> pick(0, static_cast<Vertex>(g.n() - 1));
  std::uniform_int_distribution<Vertex> pick_other(0, static_cast<Vertex>(g.n() > 1 ? g.n() - 2 : 0));

  std::vector<SimRecord> records;
  std::uint64_t burns = 0, burned = 0, events = 0;
  std::size_t next = 0;
  while (true) {
    const double t_next = total_rate > 0.0 ? g.time() + wait(rng) : std::numeric_limits<double>::infinity();
    while (next < grid.size() && grid[next] <= t_next) {
      g.advance_to(grid[next++]);
      records.push_back(snapshot(g, burns, burned));
    }
    if (t_next > opts.t_max) break;
    g.advance_to(t_next);
    ++events;
    if (unif(rng) * total_rate < edge_rate) {
      const Vertex a = pick(rng);
      Vertex b = pick_other(rng);
      if (b >= a) ++b;
      g.add_edge(a, b);
    } else {
      const Vertex v = pick(rng);
      const std::size_t size = g.strike(v);
      ++burns;
      burned += size;
      if (opts.on_strike) opts.on_strike(g, v, size);
    }
    if (opts.audit_every > 0 && events % opts.audit_every == 0 && g.recount_edges() != g.edge_count())
      throw AccuracyError("run: edge bookkeeping diverged from recount");
  }
  return records;
}

/// Independent replicas, one per seed, run concurrently. Each replica builds
/// its own initial graph from `ages` with sample_irg.
inline std::vector<std::vector<SimRecord>> run_replicas(std::span<const double> ages, const RunOptions& base,
                                                        std::span<const std::uint64_t> seeds) {
  std::vector<std::future<std::vector<SimRecord>>> jobs;
  std::vector<double> ages_copy(ages.begin(), ages.end());
  for (std::uint64_t seed : seeds) {
    jobs.push_back(std::async(std::launch::async, [ages_copy, base, seed] {
      FireGraph g = sample_irg(ages_copy, seed ^ 0x9e3779b97f4a7c15ULL);
      RunOptions o = base;
      o.seed = seed;
      return run(g, o);
    }));
  }
  std::vector<std::vector<SimRecord>> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

// Estimators -------------------------------------------------------------------

struct TailPhiEstimate {
  double value = 0.0;   // mean over m in [m_min, m_max]
  double spread = 0.0;  // standard deviation over m
  std::size_t terms = 0;
};

/// phi from the cluster-size tail: (pi / 2) (sqrt(m) sum_{k >= m} v_k)^2
/// averaged over m_min <= m <= m_max, where v_k is the fraction of vertices
/// in clusters of size k. m_max = 0 means 4 m_min.
inline TailPhiEstimate tail_phi_estimate(const ClusterHistogram& hist, std::size_t m_min, std::size_t m_max = 0) {
  if (m_max == 0) m_max = std::max(m_min, 4 * m_min);
  if (m_min < 1 || m_max < m_min) throw InputError("tail_phi_estimate: need 1 <= m_min <= m_max");
  double n = 0.0;
  for (auto [k, c] : hist) n += static_cast<double>(k * c);
  TailPhiEstimate est;
  if (n == 0.0) return est;
  std::vector<double> values;
  for (std::size_t m = m_min; m <= m_max; ++m) {
    double tail = 0.0;
    for (auto it = hist.lower_bound(m); it != hist.end(); ++it) tail += static_cast<double>(it->first * it->second) / n;
    const double r = std::sqrt(static_cast<double>(m)) * tail;
    values.push_back(0.5 * std::numbers::pi * r * r);
  }
  double s = 0.0, s2 = 0.0;
  for (double v : values) {
    s += v;
    s2 += v * v;
  }
  est.terms = values.size();
  est.value = s / static_cast<double>(values.size());
  est.spread = std::sqrt(std::max(0.0, s2 / static_cast<double>(values.size()) - est.value * est.value));
  return est;
}

/// Burned vertices per vertex per unit time over [t0, t1]; both ends must be
/// record times.
inline double burn_rate_estimate(std::span<const SimRecord> records, double t0, double t1) {
  if (!(t1 > t0)) throw InputError("burn_rate_estimate: empty window");
  auto find = [&](double t) -> const SimRecord& {
    for (const auto& r : records)
      if (std::abs(r.t - t) <= 1e-9 * std::max(1.0, std::abs(t))) return r;
    throw InputError("burn_rate_estimate: no record at t = " + std::to_string(t));
  };
  const SimRecord& a = find(t0);
  const SimRecord& b = find(t1);
  return static_cast<double>(b.burned_vertices - a.burned_vertices) / (static_cast<double>(a.n) * (t1 - t0));
}

}  // namespace agefire::sim
