#pragma once

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <utility>
#include <vector>

#include "shakenwell/drive.hpp"
#include "shakenwell/integrator.hpp"

namespace shakenwell::twolevel {

using Vec2 = Eigen::Vector2cd;
using Mat2 = Eigen::Matrix2cd;

/// Tolerances for one-period propagators.
inline constexpr IntegratorOptions kPeriodTolerances{1e-12, 1e-14};

/// Coalescence criterion: eigenvector overlap and folded gap (relative to eps).
inline constexpr double kDefectThreshold = 0.999;
inline constexpr double kCoalescenceGap = 1e-6;

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> a1_sq;
  std::vector<double> a2_sq;
  std::vector<double> norm;
  std::vector<cdouble> a1;
  std::vector<cdouble> a2;
};

/// Solves  i da1/dt = -(w0/2) a1 + eps f a2,  i da2/dt = (w0/2) a2 + eps f a1
/// from a(0) = a0, recording every `record_every` time units and at t_final.
/// One period is integrated (at no looser than kPeriodTolerances) and longer times are
/// reached as a(kT + tau) = U(tau) M^k a0; for Hermitian drives U is projected onto U(2).
TrajectoryRecord propagate(const DriveSpec& drive, const Vec2& a0, double t_final,
                           double record_every, const IntegratorOptions& options = {});

/// Fundamental matrix U(t), U(0) = 1, at each of the (ascending, non-negative) times.
std::vector<Mat2> fundamental_matrices(const DriveSpec& drive, std::span<const double> times,
                                       const IntegratorOptions& options = kPeriodTolerances);

struct MonodromyResult {
  Mat2 M = Mat2::Identity();
  cdouble lambda1{1.0}, lambda2{1.0};
  /// Quasi-energies folded into [0, eps) (real part); imaginary part carries gain/loss.
  cdouble mu1{0.0}, mu2{0.0};
  /// Same quasi-energies shifted by multiples of eps to the branch nearest -w0/2 and +w0/2.
  cdouble mu1_unfolded{0.0}, mu2_unfolded{0.0};
  Vec2 q1 = Vec2::UnitX();
  Vec2 q2 = Vec2::UnitY();
  /// |<q1, q2>| for unit eigenvectors; 1 means coalesced.
  double defect = 0.0;
  /// Circular distance between the folded quasi-energies.
  double gap = 0.0;
  /// Monodromy is a scalar matrix: every vector is an eigenvector.
  bool degenerate_scalar = false;
  bool complex_quasi_energies = false;
  double eps = 1.0;
  double omega0 = 1.0;

  bool is_coalescent() const {
    return defect >= kDefectThreshold && gap <= kCoalescenceGap * eps;
  }
};

/// Eigen-analysis of a given one-period propagator.
MonodromyResult analyse_monodromy(const Mat2& M, const DriveSpec& drive);

MonodromyResult monodromy(const DriveSpec& drive,
                          const IntegratorOptions& options = kPeriodTolerances);

/// Floquet generator R with exp(-i R T) = M, shifted so its spectrum sits on the
/// unfolded branches.
Mat2 floquet_generator(const MonodromyResult& mono);

struct FloquetState {
  std::vector<double> times;
  std::vector<Vec2> samples;
  /// W(T), one full period after times.front().
  Vec2 endpoint = Vec2::Zero();
  /// W(t) = sum_n (A_n, B_n) e^{-i n eps t}, n = first_harmonic + index.
  std::vector<cdouble> fourier_A;
  std::vector<cdouble> fourier_B;
  int first_harmonic = 0;
  cdouble mu{0.0};
};

std::pair<FloquetState, FloquetState> floquet_states(
    const DriveSpec& drive, const MonodromyResult& mono, int n_samples,
    const IntegratorOptions& options = kPeriodTolerances);

double unbalance_factor(std::span<const cdouble> A, std::span<const cdouble> B);
double unbalance_factor(const FloquetState& state);

struct WkbQuasiEnergies {
  /// Period-averaged local splitting, mu1 = -mu2.
  cdouble mu1{0.0}, mu2{0.0};
  /// Small-eps expansion of the average,  -/+ (w0/2)(1 + 4 V1 V2 eps^2 / w0^2).
  cdouble series_mu1{0.0}, series_mu2{0.0};
};

WkbQuasiEnergies wkb_quasi_energies(const DriveSpec& drive);

/// Adiabatic (WKB) Floquet vectors at time t, including the accumulated phase.
std::pair<Vec2, Vec2> wkb_states(const DriveSpec& drive, double t);

/// Leading-order degeneracy frequency eps_N ~ (w0/N)(1 + 4 V1 V2 / N^2).
double resonance_estimate(cdouble V1, cdouble V2, double omega0, int N);

/// Degeneracy frequency from the full WKB phase condition  2 mu_WKB(eps) / eps = N.
/// Falls back to resonance_estimate when the WKB radicand leaves the principal branch.
double resonance_wkb(const DriveSpec& drive, int N);

enum class CrossingKind { exact, avoided, exceptional };

const char* to_string(CrossingKind kind);

struct ResonanceClassification {
  CrossingKind kind = CrossingKind::avoided;
  int order = 0;
  double eps = 0.0;      // location of the minimal folded gap
  double gap = 0.0;      // minimal folded gap, 2 Delta
  double defect = 0.0;   // eigenvector overlap at the minimum
  double half_gap() const { return 0.5 * gap; }
  /// Population oscillation period pi / Delta.
  double rabi_period() const;
};

struct ClassifyOptions {
  int scan_points = 41;
  /// Minimal gaps below this (times omega0) count as exact crossings.
  double exact_gap_tol = 1e-9;
  IntegratorOptions integrator = kPeriodTolerances;
};

ResonanceClassification classify_resonance(const DriveSpec& drive, int N, double scan_width,
                                           const ClassifyOptions& options = {});

/// Jordan-chain partner Q2 with (R - w0/2) Q2 = q2 (least squares) at a defective monodromy.
Vec2 generalized_eigenvector(const MonodromyResult& mono);

/// a1 = c1 e^{i w0 t/2}, a2 = -i c2 e^{-i w0 t/2}.
Vec2 map_c_to_a(cdouble c1, cdouble c2, double omega0, double t);
Vec2 map_a_to_c(cdouble a1, cdouble a2, double omega0, double t);

struct ExceptionalPointSearch {
  double eps_star = 0.0;
  double defect = 0.0;
  double gap = 0.0;
  double splitting = 0.0;  // |lambda1 - lambda2|
  /// |(R - mu2) Q2 - q2| for the Jordan partner; NaN when no EP was found.
  double residual = 0.0;
  int iterations = 0;
  bool found = false;      // monodromy coalescent at eps_star
  MonodromyResult mono;
};

/// Scans [lo, hi] (base.eps ignored) for the minimum of the monodromy eigenvalue
/// splitting and refines it by golden section.
ExceptionalPointSearch find_exceptional_point(const DriveSpec& base, double lo, double hi,
                                              int scan_points = 41, double xtol = 1e-10,
                                              const IntegratorOptions& options = kPeriodTolerances);

// Frequency sweeps.

struct SweepOptions {
  bool compute_theta = true;
  int n_samples = 128;
  unsigned threads = 0;  // 0 picks hardware concurrency
  IntegratorOptions integrator = kPeriodTolerances;
};

struct SweepPoint {
  double eps = 0.0;
  MonodromyResult mono;
  /// Labels follow eigenvector continuity from the first sweep point.
  cdouble mu1_folded{0.0}, mu2_folded{0.0};
  cdouble mu1_unfolded{0.0}, mu2_unfolded{0.0};
  double theta = 0.0;  // NaN where the Floquet states coalesce
};

/// Monodromy analysis at each eps (ascending), using base.V1, V2, omega0.
std::vector<SweepPoint> sweep(const DriveSpec& base, std::span<const double> eps_values,
                              const SweepOptions& options = {});

struct GapMinimum {
  double eps = 0.0;
  double gap = 0.0;
  double defect = 0.0;
  int order = 0;  // resonance order N with mu2 - mu1 ~ N eps
};

/// Local minima of the folded gap along a sweep, each refined by golden-section search.
std::vector<GapMinimum> locate_gap_minima(const DriveSpec& base, std::span<const SweepPoint> points,
                                          const IntegratorOptions& options = kPeriodTolerances);

/// Resonance order N ~ (mu2 - mu1) / eps from the WKB phase (or w0/eps when unavailable).
int resonance_order(const DriveSpec& drive);

/// Population oscillation period of a2_sq, from upward mid-level crossings with
/// hysteresis between the 25% and 75% levels. Returns NaN with
/// fewer than two crossings.
double oscillation_period(std::span<const double> times, std::span<const double> values);

}  // namespace shakenwell::twolevel
