#pragma once

// CSV reading and writing for measures, eigenfunction dumps, trajectories and
// simulation records.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "agefire/errors.hpp"
#include "agefire/evolution.hpp"
#include "agefire/fire_sim.hpp"
#include "agefire/fixed_point.hpp"
#include "agefire/measures.hpp"
#include "agefire/spectral.hpp"

namespace agefire::io {

namespace fs = std::filesystem;

inline std::string time_tag(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", t);
  return buf;
}

inline std::string snapshot_name(double t) { return "snapshot_t" + time_tag(t) + ".csv"; }
inline std::string clusters_name(double t) { return "clusters_t" + time_tag(t) + ".csv"; }

inline std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw InputError("cannot write " + p.string());
  f << std::setprecision(17);
  return f;
}

inline std::ifstream open_in(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw InputError("cannot read " + p.string());
  return f;
}

/// Splits one CSV line on commas; no quoting.
inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double to_double(const std::string& s, const fs::path& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError(where.string() + ": not a number: '" + s + "'");
  }
}

/// Rows of a CSV file with the expected header, as numbers.
inline std::vector<std::vector<double>> read_table(const fs::path& p, const std::vector<std::string>& header) {
  auto f = open_in(p);
  std::string line;
  if (!std::getline(f, line) || split_csv(line) != header) throw InputError(p.string() + ": unexpected header");
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw InputError(p.string() + ": wrong column count");
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(to_double(c, p));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Measures ---------------------------------------------------------------------

inline void write_measure(const fs::path& p, const AgeMeasure& pi) {
  auto f = open_out(p);
  f << "location,mass\n";
  for (const auto& a : pi.atoms()) f << a.location << ',' << a.mass << '\n';
}

inline AgeMeasure read_measure(const fs::path& p) {
  std::vector<Atom> atoms;
  for (const auto& r : read_table(p, {"location", "mass"})) atoms.push_back({r[0], r[1]});
  return AgeMeasure::from_atoms(std::move(atoms));
}

inline void write_theta(const fs::path& p, const SpectralPair& pair) {
  auto f = open_out(p);
  f << "location,mass,theta\n";
  const auto atoms = pair.source.atoms();
  for (std::size_t i = 0; i < atoms.size(); ++i)
    f << atoms[i].location << ',' << atoms[i].mass << ',' << pair.theta[i] << '\n';
}

// Trajectories -------------------------------------------------------------------

struct TrajectoryRow {
  double t, lambda, phi, mean_age, atom_count, w1_to_fixed_point, mass_defect;
};

/// Trajectory CSV plus one measure snapshot per checkpoint.
inline void write_trajectory(const fs::path& dir, const Trajectory& traj) {
  fs::create_directories(dir);
  auto f = open_out(dir / "trajectory.csv");
  f << "t,lambda,phi,mean_age,atom_count,w1_to_fixed_point,mass_defect\n";
  for (const auto& s : traj.checkpoints) {
    f << s.t << ',' << s.lambda << ',' << s.phi << ',' << first_moment(s.pi) << ',' << s.pi.size() << ','
      << fixed_point::w1_to_fixed_point(s.pi) << ',' << s.mass_defect << '\n';
    write_measure(dir / snapshot_name(s.t), s.pi);
  }
}

inline std::vector<TrajectoryRow> read_trajectory(const fs::path& dir) {
  std::vector<TrajectoryRow> out;
  for (const auto& r :
       read_table(dir / "trajectory.csv", {"t", "lambda", "phi", "mean_age", "atom_count", "w1_to_fixed_point", "mass_defect"}))
    out.push_back({r[0], r[1], r[2], r[3], r[4], r[5], r[6]});
  return out;
}

/// Measure snapshots in a directory, keyed by the time in their file names.
inline std::map<double, fs::path> list_snapshots(const fs::path& dir) {
  std::map<double, fs::path> out;
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("snapshot_t", 0) != 0 || e.path().extension() != ".csv") continue;
    const std::string tag = name.substr(10, name.size() - 14);
    out.emplace(to_double(tag, e.path()), e.path());
  }
  return out;
}

// Simulation records -----------------------------------------------------------

/// Burn rate per vertex over the interval ending at record k.
inline double window_burn_rate(const std::vector<sim::SimRecord>& recs, std::size_t k) {
  if (k == 0) return 0.0;
  const double dt = recs[k].t - recs[k - 1].t;
  if (!(dt > 0.0)) return 0.0;
  return static_cast<double>(recs[k].burned_vertices - recs[k - 1].burned_vertices) /
         (static_cast<double>(recs[k].n) * dt);
}

inline void write_cluster_hist(const fs::path& p, const sim::ClusterHistogram& h) {
  auto f = open_out(p);
  f << "size,count\n";
  for (auto [k, c] : h) f << k << ',' << c << '\n';
}

/// records.csv plus per-checkpoint age snapshots and cluster histograms.
inline void write_sim_records(const fs::path& dir, const std::vector<sim::SimRecord>& recs) {
  fs::create_directories(dir);
  auto f = open_out(dir / "records.csv");
  f << "t,burned_cum,largest_cluster,n_clusters,phi_hat_window\n";
  for (std::size_t k = 0; k < recs.size(); ++k) {
    const auto& r = recs[k];
    f << r.t << ',' << r.burned_vertices << ',' << r.largest_cluster() << ',' << r.cluster_count() << ','
      << window_burn_rate(recs, k) << '\n';
    write_measure(dir / snapshot_name(r.t), r.ages);
    write_cluster_hist(dir / clusters_name(r.t), r.clusters);
  }
}

struct SimRow {
  double t, burned_cum, largest_cluster, n_clusters, phi_hat_window;
};

inline std::vector<SimRow> read_sim_records(const fs::path& dir) {
  std::vector<SimRow> out;
  for (const auto& r :
       read_table(dir / "records.csv", {"t", "burned_cum", "largest_cluster", "n_clusters", "phi_hat_window"}))
    out.push_back({r[0], r[1], r[2], r[3], r[4]});
  return out;
}

}  // namespace agefire::io
