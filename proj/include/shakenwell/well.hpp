#pragma once

#include <complex>

#include "shakenwell/drive.hpp"

namespace shakenwell::well {

/// Two-bound-state double well
///   V(x) = -2 w0 [s1^2 cosh^2(s2 x) + s2^2 sinh^2(s1 x)] / D(x)^2,
///   D(x) = s2 sinh(s1 x) sinh(s2 x) - s1 cosh(s1 x) cosh(s2 x),
/// with u1 = N1 cosh(s2 x) / D and u2 = N2 sinh(s1 x) / D.
struct WellSpec {
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double E1 = 0.0;
  double E2 = 0.0;
  double omega0 = 0.0;
  /// Signed so that u1(0) > 0 and u2'(0) > 0 (both negative since D(0) < 0).
  double N1 = 0.0;
  double N2 = 0.0;
  /// kappa = integral of u2 u1' over the real line.
  double kappa = 0.0;
};

/// Builds a WellSpec, fixing normalizations and kappa by quadrature.
WellSpec make_well(double sigma1, double sigma2);

/// sigma1 = sqrt(3), sigma2 = sqrt(2): omega0 = 1.
WellSpec default_well();

struct GridSpec {
  double x_min = -8.0;
  double x_max = 8.0;
  int n_points = 256;
  double dt = 0.01;

  double dx() const { return (x_max - x_min) / n_points; }
  double x(int j) const { return x_min + j * dx(); }
};

cdouble potential(const WellSpec& spec, cdouble z);

/// u_which(z), which in {1, 2}.
cdouble eigenfunction(const WellSpec& spec, int which, cdouble z);
/// d u_which / dz.
cdouble eigenfunction_derivative(const WellSpec& spec, int which, cdouble z);

/// Denominator D(z) (unscaled; may overflow for large |Re z|).
cdouble denominator(const WellSpec& spec, cdouble z);

struct KappaReport {
  double kappa = 0.0;           // adaptive Gauss-Kronrod
  double kappa_trapezoid = 0.0; // uniform-grid trapezoid
  double kappa_refined = 0.0;   // trapezoid at half the spacing
  double antisymmetric = 0.0;   // integral of u1 u2'
  double diagonal11 = 0.0;      // integral of u1 u1'
  double diagonal22 = 0.0;      // integral of u2 u2'
};

/// Coupling with its consistency checks; throws AccuracyError when the
/// two resolutions or the two rules disagree beyond 1e-6.
KappaReport coupling_kappa(const WellSpec& spec);

struct StripeCheck {
  double half_width = 0.0;   // L: smallest |Im z| over zeros of D
  cdouble nearest_pole{0.0};
  double max_imag_path = 0.0;
  bool ok = false;           // max |Im x0(t)| < 0.9 L
};

StripeCheck validate_stripe(const WellSpec& spec, const ShakingPath& path);

/// V1 = kappa A1, V2 = kappa A2, omega0 = s1^2 - s2^2, eps from the path.
DriveSpec reduce_to_drive(const WellSpec& spec, const ShakingPath& path);

}  // namespace shakenwell::well
