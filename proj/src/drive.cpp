#include "shakenwell/drive.hpp"

#include <cmath>
#include <numbers>

namespace shakenwell {

namespace {
constexpr cdouble I{0.0, 1.0};
}

cdouble ShakingPath::operator()(double t) const {
  const cdouble e = std::polar(1.0, eps * t);
  return -I * A1 * e + I * A2 / e + I * (A1 - A2);
}

cdouble ShakingPath::velocity(double t) const {
  const cdouble e = std::polar(1.0, eps * t);
  return eps * (A1 * e + A2 / e);
}

bool ShakingPath::is_hermitian(double tol) const {
  return std::abs(A2 - std::conj(A1)) <= tol * std::max(1.0, std::abs(A1));
}

double ShakingPath::period() const { return 2.0 * std::numbers::pi / eps; }

ShakingPath ShakingPath::sinusoidal(double amplitude, double eps) {
  return {cdouble(0.5 * amplitude), cdouble(0.5 * amplitude), eps};
}

ShakingPath ShakingPath::one_sided(double amplitude, double eps) {
  return {cdouble(0.0), cdouble(0.0, amplitude), eps};
}

cdouble eval_path(const ShakingPath& path, double t) { return path(t); }

cdouble DriveSpec::modulation(double t) const {
  const cdouble e = std::polar(1.0, eps * t);
  return V1 * e + V2 / e;
}

bool DriveSpec::is_hermitian(double tol) const {
  return std::abs(V2 - std::conj(V1)) <= tol * std::max(1.0, std::abs(V1));
}

bool DriveSpec::has_real_product(double tol) const {
  const cdouble p = V1 * V2;
  return std::abs(p.imag()) <= tol * std::max(1.0, std::abs(p));
}

double DriveSpec::period() const { return 2.0 * std::numbers::pi / eps; }

DriveSpec DriveSpec::cosine(double V, double omega0, double eps) {
  return {cdouble(V), cdouble(V), omega0, eps};
}

DriveSpec DriveSpec::one_sided(cdouble V2, double omega0, double eps) {
  return {cdouble(0.0), V2, omega0, eps};
}

}  // namespace shakenwell
