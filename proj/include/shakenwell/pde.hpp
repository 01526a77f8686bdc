#pragma once

#include <complex>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shakenwell/drive.hpp"
#include "shakenwell/twolevel.hpp"
#include "shakenwell/well.hpp"

namespace shakenwell::pde {

using well::GridSpec;
using well::WellSpec;

struct WaveField {
  GridSpec grid;
  std::vector<cdouble> psi;
  double t = 0.0;

  /// Discrete L2 norm squared, sum |psi_j|^2 dx.
  double norm() const;
};

struct ProjectionSeries {
  std::vector<double> times;
  std::vector<cdouble> a1, a2;
  std::vector<double> pop1, pop2;
  /// 1 - pop1 - pop2; NaN for non-Hermitian shaking.
  std::vector<double> leakage;
  std::vector<double> norm;
};

/// Cosine-ramp absorbing mask applied after every step inside a boundary layer.
struct Absorber {
  bool enabled = false;
  double width = 1.0;     // layer thickness at each edge
  double exponent = 0.125; // mask = cos(pi/2 * depth/width)^exponent
};

struct PropagatorOptions {
  Absorber absorber;
  double divergence_norm = 1e6;
};

/// Rejects grids that do not resolve the ground state (dx > 0.2/sigma1 or fewer than 128 points).
void check_resolution(const WellSpec& spec, const GridSpec& grid);

/// psi(x, 0) = u1(x) on the grid, normalized to unit discrete norm.
WaveField init_ground_state(const WellSpec& spec, const GridSpec& grid);

/// Strang split-step propagator for  i psi_t = -psi_xx + V(x - x0(t)) psi  on a periodic grid.
/// Owns its transform plans and workspace; one instance per run.
class Propagator {
 public:
  Propagator(const WellSpec& spec, const ShakingPath& path, const GridSpec& grid,
             PropagatorOptions options = {});
  ~Propagator();
  Propagator(const Propagator&) = delete;
  Propagator& operator=(const Propagator&) = delete;

  /// One full step: half potential at t, kinetic, half potential at t + dt.
  void step(WaveField& field);
  /// n consecutive steps with the interior half-steps merged.
  void advance(WaveField& field, long n_steps);

  /// Bilinear projections a_n = sum u_n(x_j - x0(t)) psi_j dx.
  std::pair<cdouble, cdouble> project(const WaveField& field) const;

 private:
  void potential_phase(double t, double fraction);
  void kinetic();
  void apply_absorber();
  void check_norm(const WaveField& field) const;

  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Single step on a copy (convenience form).
WaveField step(WaveField field, const WellSpec& spec, const ShakingPath& path);

std::pair<cdouble, cdouble> project(const WaveField& field, const WellSpec& spec,
                                    const ShakingPath& path);

struct RunOptions {
  PropagatorOptions propagator;
  /// Write a snapshot of psi every this many time units into snapshot_prefix (0 disables).
  double snapshot_every = 0.0;
  std::string snapshot_prefix;
};

/// Ground-state start, full evolution to t_final with projections every sample_every.
ProjectionSeries run_experiment(const WellSpec& spec, const ShakingPath& path, const GridSpec& grid,
                                double t_final, double sample_every, const RunOptions& options = {});

/// Binary snapshot: little-endian header {uint64 n_points, f64 x_min, f64 x_max, f64 t}
/// followed by n_points (re, im) f64 pairs.
void write_snapshot(const WaveField& field, const std::string& path);
WaveField read_snapshot(const std::string& path, double dt = 0.01);

/// Summary of secular growth of the upper level along a run.
struct GrowthMetrics {
  double final_ratio = 0.0;     // pop2 / pop1 averaged over the last tenth of the run
  double max_pop2 = 0.0;
  double envelope_r2 = 0.0;     // R^2 of a linear fit of per-period max |a2| over the second half
  double envelope_slope = 0.0;
};

GrowthMetrics growth_metrics(const ProjectionSeries& series, double period);

struct ScanPoint {
  double eps = 0.0;
  GrowthMetrics metrics;
};

/// Non-Hermitian one-sided shaking of amplitude A at each eps; runs in parallel.
std::vector<ScanPoint> secular_growth_scan(const WellSpec& spec, double amplitude,
                                           std::span<const double> eps_values, const GridSpec& grid,
                                           double t_final, double sample_every, unsigned threads = 0);

/// One-period map of the PDE restricted to the bound pair. Runs started from u1 and u2
/// are projected stroboscopically for `periods` periods and M is the least-squares fit of
/// X(n+1) = M X(n). The time step is shrunk to make T a whole number of steps.
struct ProjectedMonodromy {
  twolevel::Mat2 M = twolevel::Mat2::Identity();
  twolevel::MonodromyResult analysis;
  /// |lambda1 - lambda2| of M.
  double splitting = 0.0;
  double dt_used = 0.0;
  int periods = 0;
};

ProjectedMonodromy projected_monodromy(const WellSpec& spec, const ShakingPath& path,
                                       const GridSpec& grid, int periods = 30);

enum class PathKind { sinusoidal, one_sided };

/// x0 = A sin(eps t) or x0 = A - A e^{-i eps t}.
ShakingPath make_path(PathKind kind, double amplitude, double eps);

struct DegeneracySearch {
  double eps_star = 0.0;
  double defect = 0.0;
  double gap = 0.0;
  double splitting = 0.0;
  int iterations = 0;
  /// (eps, splitting) of the coarse scan.
  std::vector<std::pair<double, double>> scan;
};

/// Coarse scan of the projected one-period map over [lo, hi], then golden-section
/// refinement of its eigenvalue splitting. For one-sided shaking the minimum is the
/// exceptional point; for sinusoidal shaking it is the avoided crossing.
DegeneracySearch find_degeneracy(const WellSpec& spec, PathKind kind, double amplitude, double lo,
                                 double hi, const GridSpec& grid, int scan_points = 11,
                                 double xtol = 1e-6, int periods = 30);

}  // namespace shakenwell::pde
