#pragma once

#include <Eigen/Core>

#include <complex>
#include <span>
#include <utility>
#include <vector>

#include "shakenwell/drive.hpp"

namespace shakenwell::hierarchy {

/// Truncated Fourier hierarchy for W(t) = sum_n (A_n, B_n) e^{-i n eps t}, n = -N..N:
///   mu A_n = -(n eps + w0/2) A_n + eps (V1 B_{n+1} + V2 B_{n-1})
///   mu B_n = -(n eps - w0/2) B_n + eps (V1 A_{n+1} + V2 A_{n-1})
/// Unknowns are interleaved: index(n, 0) = 2(n+N) for A_n, index(n, 1) = 2(n+N)+1 for B_n.
struct HierarchyMatrix {
  int n_trunc = 0;
  int dim = 0;
  Eigen::MatrixXcd entries;
  DriveSpec drive;

  int index(int n, int component) const { return 2 * (n + n_trunc) + component; }
};

/// Smallest accepted cutoff: ceil(w0/eps) + 8.
int minimum_truncation(const DriveSpec& drive);
/// Default cutoff 2 ceil(w0/eps) + 16.
int default_truncation(const DriveSpec& drive);

HierarchyMatrix build_matrix(const DriveSpec& drive, int n_trunc);

struct QuasiEnergyClass {
  /// Real part folded into [0, eps).
  double mu_folded = 0.0;
  /// Eigenvalue of the representative (Fourier weight centred on n = 0).
  cdouble mu{0.0};
  /// A_n, B_n for n = -N..N, unit 2-norm.
  std::vector<cdouble> A;
  std::vector<cdouble> B;
  double residual = 0.0;  // ||H v - mu v||
  int members = 0;        // eigenvalues of the matrix folding onto this class
};

struct QuasiEnergySpectrum {
  /// [0] is the level-1 branch (near -w0/2), [1] the level-2 branch.
  std::vector<QuasiEnergyClass> classes;
  int contained = 0;  // eigenvectors not touching the truncation edge
  int classes_found = 0;
  double matrix_norm = 0.0;
};

/// Dense eigendecomposition; well-contained eigenvalues are folded and grouped into
/// the two quasi-energy classes.
QuasiEnergySpectrum solve_quasi_energies(const HierarchyMatrix& H);

/// Max-norm residual of the hierarchy equations for a coefficient set with
/// A[i], B[i] holding harmonic first_harmonic + i (coefficients outside are zero).
/// The last harmonic row is excluded since it couples beyond the stored range.
double hierarchy_residual(const DriveSpec& drive, cdouble mu, std::span<const cdouble> A,
                          std::span<const cdouble> B, int first_harmonic);

struct GaugeResult {
  /// Coupling of the equivalent symmetric drive, Gamma^2 = V1 V2.
  cdouble gamma{0.0};
  /// e^{i theta} = sqrt(V2 / V1); alpha_n = A_n e^{-i n theta}.
  cdouble phase{1.0};
  cdouble theta{0.0};
  /// Gamma is real: the equivalent drive is Hermitian.
  bool hermitian_equivalent = false;
  DriveSpec equivalent;
};

GaugeResult gauge_transform(const DriveSpec& drive);

enum class Branch { mu1, mu2 };

struct ClosedFormCoefficients {
  Branch branch = Branch::mu1;
  cdouble mu{0.0};
  /// A[n], B[n] for n = 0..n_max; negative harmonics vanish.
  std::vector<cdouble> A;
  std::vector<cdouble> B;
  /// Factor applied to the raw recurrence (A_0 = 1 or B_0 = 1) to reach unit max modulus.
  cdouble normalization{1.0};
};

/// Closed-form Floquet coefficients of the one-sided drive (V1 = 0).
std::pair<ClosedFormCoefficients, ClosedFormCoefficients> closed_form_v1_zero(const DriveSpec& drive,
                                                                              int n_max);

}  // namespace shakenwell::hierarchy
