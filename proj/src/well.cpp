#include "shakenwell/well.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "shakenwell/errors.hpp"

namespace shakenwell::well {

namespace {

constexpr double kPoleTolerance = 1e-12;

// Hyperbolics of a with Re a >= 0, scaled by e^{-a}:
//   cosh a = e^a ch,  sinh a = e^a sh.
struct Scaled {
  cdouble ch, sh;
  explicit Scaled(cdouble a) {
    const cdouble e = std::exp(-2.0 * a);
    ch = 0.5 * (1.0 + e);
    sh = 0.5 * (1.0 - e);
  }
};

// Everything needed at a point with Re z >= 0.
struct Local {
  cdouble a, b;
  Scaled h1, h2;
  cdouble Ds;  // D e^{-(a+b)}
  Local(const WellSpec& s, cdouble z)
      : a(s.sigma1 * z), b(s.sigma2 * z), h1(a), h2(b),
        Ds(s.sigma2 * h1.sh * h2.sh - s.sigma1 * h1.ch * h2.ch) {}
};

void check_pole(const Local& L, cdouble z) {
  if (std::abs(L.Ds) < kPoleTolerance) {
    throw PoleError("point (" + std::to_string(z.real()) + ", " + std::to_string(z.imag()) +
                    ") is at a pole of the continued potential");
  }
}

// Work on the half plane Re z >= 0; returns the parity sign applied.
cdouble reflect(cdouble z, bool& flipped) {
  flipped = z.real() < 0.0;
  return flipped ? -z : z;
}

cdouble raw_u1(const WellSpec& s, cdouble z) {
  bool f;
  const Local L(s, reflect(z, f));
  check_pole(L, z);
  return L.h2.ch * std::exp(-L.a) / L.Ds;
}

cdouble raw_u2(const WellSpec& s, cdouble z) {
  bool f;
  const Local L(s, reflect(z, f));
  check_pole(L, z);
  const cdouble v = L.h1.sh * std::exp(-L.b) / L.Ds;
  return f ? -v : v;
}

double half_line_integral(const auto& f) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 61>::integrate(f, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-14);
}

double trapezoid(const auto& f, double half_span, double dx) {
  const int n = static_cast<int>(std::lround(2.0 * half_span / dx));
  double sum = 0.0;
  for (int j = 0; j < n; ++j) sum += f(-half_span + j * dx);
  return sum * dx;
}

}  // namespace

WellSpec make_well(double sigma1, double sigma2) {
  if (!(sigma2 > 0.0) || !(sigma1 > sigma2)) throw ContractError("well requires sigma1 > sigma2 > 0");
  WellSpec s;
  s.sigma1 = sigma1;
  s.sigma2 = sigma2;
  s.E1 = -sigma1 * sigma1;
  s.E2 = -sigma2 * sigma2;
  s.omega0 = sigma1 * sigma1 - sigma2 * sigma2;
  const double i1 = 2.0 * half_line_integral([&](double x) { return std::norm(raw_u1(s, x)); });
  const double i2 = 2.0 * half_line_integral([&](double x) { return std::norm(raw_u2(s, x)); });
  s.N1 = -1.0 / std::sqrt(i1);
  s.N2 = -1.0 / std::sqrt(i2);
  s.kappa = coupling_kappa(s).kappa;
  return s;
}

WellSpec default_well() { return make_well(std::sqrt(3.0), std::sqrt(2.0)); }

cdouble denominator(const WellSpec& s, cdouble z) {
  const cdouble a = s.sigma1 * z, b = s.sigma2 * z;
  return s.sigma2 * std::sinh(a) * std::sinh(b) - s.sigma1 * std::cosh(a) * std::cosh(b);
}

cdouble potential(const WellSpec& s, cdouble z) {
  bool f;
  const Local L(s, reflect(z, f));
  check_pole(L, z);
  const double s1 = s.sigma1 * s.sigma1, s2 = s.sigma2 * s.sigma2;
  const cdouble num = s1 * L.h2.ch * L.h2.ch * std::exp(-2.0 * L.a) +
                      s2 * L.h1.sh * L.h1.sh * std::exp(-2.0 * L.b);
  return -2.0 * s.omega0 * num / (L.Ds * L.Ds);
}

cdouble eigenfunction(const WellSpec& s, int which, cdouble z) {
  if (which == 1) return s.N1 * raw_u1(s, z);
  if (which == 2) return s.N2 * raw_u2(s, z);
  throw ContractError("eigenfunction index must be 1 or 2");
}

cdouble eigenfunction_derivative(const WellSpec& s, int which, cdouble z) {
  bool f;
  const Local L(s, reflect(z, f));
  check_pole(L, z);
  const cdouble D2 = L.Ds * L.Ds;
  if (which == 1) {
    const cdouble v = s.N1 * (s.sigma2 * L.h2.sh * L.Ds + s.omega0 * L.h1.sh * L.h2.ch * L.h2.ch) *
                      std::exp(-L.a) / D2;
    return f ? -v : v;
  }
  if (which == 2) {
    return s.N2 * (s.sigma1 * L.h1.ch * L.Ds + s.omega0 * L.h1.sh * L.h1.sh * L.h2.ch) *
           std::exp(-L.b) / D2;
  }
  throw ContractError("eigenfunction index must be 1 or 2");
}

KappaReport coupling_kappa(const WellSpec& s) {
  auto u = [&](int k, double x) { return eigenfunction(s, k, x).real(); };
  auto du = [&](int k, double x) { return eigenfunction_derivative(s, k, x).real(); };
  auto integrand = [&](double x) { return u(2, x) * du(1, x); };

  KappaReport r;
  r.kappa = 2.0 * half_line_integral(integrand);
  const double span = 40.0 / std::min(s.sigma1, s.sigma2);
  r.kappa_trapezoid = trapezoid(integrand, span, 0.02);
  r.kappa_refined = trapezoid(integrand, span, 0.01);
  r.antisymmetric = trapezoid([&](double x) { return u(1, x) * du(2, x); }, span, 0.01);
  r.diagonal11 = trapezoid([&](double x) { return u(1, x) * du(1, x); }, span, 0.01);
  r.diagonal22 = trapezoid([&](double x) { return u(2, x) * du(2, x); }, span, 0.01);
  if (std::abs(r.kappa_trapezoid - r.kappa_refined) > 1e-6 || std::abs(r.kappa - r.kappa_refined) > 1e-6) {
    throw AccuracyError("coupling quadrature did not converge");
  }
  return r;
}

StripeCheck validate_stripe(const WellSpec& s, const ShakingPath& path) {
  // Coarse scan of |D| scaled by |cosh a cosh b| over the upper half plane,
  // then Newton on D from every local minimum.
  const double re_max = 6.0 / s.sigma2;
  const double im_max = 2.0 * std::numbers::pi / s.sigma2;
  const int nr = 241, ni = 121;
  auto scaled = [&](cdouble z) {
    bool f;
    const Local L(s, reflect(z, f));
    return std::abs(L.Ds) / std::abs(L.h1.ch * L.h2.ch);
  };
  std::vector<double> g(static_cast<std::size_t>(nr) * ni);
  auto at = [&](int i, int j) -> double& { return g[static_cast<std::size_t>(i) * ni + j]; };
  auto point = [&](int i, int j) {
    return cdouble(-re_max + 2.0 * re_max * i / (nr - 1), im_max * j / (ni - 1));
  };
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < ni; ++j) at(i, j) = scaled(point(i, j));

  StripeCheck out;
  out.half_width = std::numeric_limits<double>::infinity();
  for (int i = 1; i + 1 < nr; ++i) {
    for (int j = 1; j + 1 < ni; ++j) {
      const double v = at(i, j);
      bool is_min = true;
      for (int di = -1; di <= 1 && is_min; ++di)
        for (int dj = -1; dj <= 1; ++dj)
          if ((di || dj) && at(i + di, j + dj) < v) { is_min = false; break; }
      if (!is_min) continue;
      cdouble z = point(i, j);
      for (int it = 0; it < 60; ++it) {
        const cdouble D = denominator(s, z);
        const cdouble dD = -s.omega0 * std::sinh(s.sigma1 * z) * std::cosh(s.sigma2 * z);
        if (dD == 0.0) break;
        const cdouble step = D / dD;
        z -= step;
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(z))) break;
      }
      if (scaled(z) > 1e-10 || z.imag() <= 0.0) continue;
      if (z.imag() < out.half_width) {
        out.half_width = z.imag();
        out.nearest_pole = z;
      }
    }
  }

  const int samples = 512;
  const double T = path.period();
  for (int k = 0; k < samples; ++k) {
    out.max_imag_path = std::max(out.max_imag_path, std::abs(path(T * k / samples).imag()));
  }
  out.ok = out.max_imag_path < 0.9 * out.half_width;
  return out;
}

DriveSpec reduce_to_drive(const WellSpec& s, const ShakingPath& path) {
  const auto stripe = validate_stripe(s, path);
  if (!stripe.ok) {
    throw DomainError("shaking path leaves the analyticity stripe (max |Im x0| = " +
                      std::to_string(stripe.max_imag_path) + ", L = " +
                      std::to_string(stripe.half_width) + ")");
  }
  return DriveSpec{s.kappa * path.A1, s.kappa * path.A2, s.omega0, path.eps};
}

}  // namespace shakenwell::well
