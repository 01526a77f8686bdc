#pragma once

#include <complex>

namespace shakenwell {

using cdouble = std::complex<double>;

/// Closed loop traced by the well centre in the complex plane:
///   x0(t) = -i A1 e^{i eps t} + i A2 e^{-i eps t} + i (A1 - A2),  x0(0) = 0.
struct ShakingPath {
  cdouble A1{0.0};
  cdouble A2{0.0};
  double eps = 1.0;

  cdouble operator()(double t) const;
  /// d x0 / dt.
  cdouble velocity(double t) const;
  /// True when x0(t) stays on the real axis, i.e. A2 == conj(A1).
  bool is_hermitian(double tol = 1e-14) const;
  double period() const;

  /// x0 = A sin(eps t).
  static ShakingPath sinusoidal(double amplitude, double eps);
  /// x0 = A - A e^{-i eps t}.
  static ShakingPath one_sided(double amplitude, double eps);
};

cdouble eval_path(const ShakingPath& path, double t);

/// Reduced two-level drive: modulation f(eps t) = V1 e^{i eps t} + V2 e^{-i eps t}
/// acting between two levels split by omega0.
struct DriveSpec {
  cdouble V1{0.0};
  cdouble V2{0.0};
  double omega0 = 1.0;
  double eps = 1.0;

  cdouble modulation(double t) const;
  /// f is real-valued for all t (V2 == conj(V1)).
  bool is_hermitian(double tol = 1e-14) const;
  /// V1 V2 is real (up to tol relative), the regime with real quasi-energies.
  bool has_real_product(double tol = 1e-12) const;
  double period() const;

  /// f = 2 V cos(eps t).
  static DriveSpec cosine(double V, double omega0, double eps);
  /// f = V2 e^{-i eps t} (V1 = 0).
  static DriveSpec one_sided(cdouble V2, double omega0, double eps);
};

}  // namespace shakenwell
