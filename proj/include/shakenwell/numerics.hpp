#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

namespace shakenwell {

/// Folds x into [0, period).
inline double fold(double x, double period) {
  double r = x - period * std::floor(x / period);
  if (r >= period) r -= period;
  if (r < 0.0) r = 0.0;
  return r;
}

/// Shortest distance between a and b on a circle of circumference `period`.
inline double circular_distance(double a, double b, double period) {
  const double d = fold(a - b, period);
  return std::min(d, period - d);
}

/// Signed representative of x in (-period/2, period/2].
inline double wrap_centered(double x, double period) {
  double r = fold(x, period);
  if (r > 0.5 * period) r -= period;
  return r;
}

/// Golden-section search for the minimum of a unimodal f on [a, b].
/// Returns (argmin, f(argmin)).
template <class F>
std::pair<double, double> golden_section_minimize(F&& f, double a, double b, double xtol,
                                                  int max_iter = 200) {
  constexpr double invphi = 0.6180339887498948482;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < max_iter && (b - a) > xtol; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace shakenwell
