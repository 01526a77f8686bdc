#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <utility>

#include "shakenwell/errors.hpp"

namespace shakenwell {

using cdouble = std::complex<double>;

template <int Dim>
using CVector = Eigen::Matrix<cdouble, Dim, 1>;

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0 selects a step from the local derivative scale
  double max_step = 0.0;      // 0 means unbounded
  std::size_t max_steps = 200'000'000;
};

/// Dormand-Prince 5(4) embedded Runge-Kutta stepper for complex state vectors.
///
/// The stepper owns its state and keeps the adapted step size between calls
/// to advance_to(), so sampling a trajectory at fixed output times does not
/// degrade the step control. Output times are hit exactly by clipping the
/// step, never by interpolation.
template <int Dim, class Rhs>
class DormandPrince {
 public:
  using State = CVector<Dim>;

  DormandPrince(Rhs rhs, double t0, State y0, IntegratorOptions options = {})
      : rhs_(std::move(rhs)), t_(t0), y_(std::move(y0)), opts_(options) {
    k1_ = rhs_(t_, y_);
    h_ = opts_.initial_step > 0.0 ? opts_.initial_step : initial_step();
  }

  double time() const { return t_; }
  const State& state() const { return y_; }
  std::size_t accepted_steps() const { return accepted_; }
  std::size_t rejected_steps() const { return rejected_; }

  /// Integrates forward until time() == t_target (exactly).
  void advance_to(double t_target) {
    while (t_ < t_target) {
      const double remaining = t_target - t_;
      bool last = false;
      double h = h_;
      if (opts_.max_step > 0.0) h = std::min(h, opts_.max_step);
      if (h >= remaining * (1.0 - 1e-12)) {
        h = remaining;
        last = true;
      }
      if (!last && h < 1e-13 * std::max(1.0, std::abs(t_))) {
        throw IntegrationError("step size underflow", t_);
      }
      if (accepted_ + rejected_ >= opts_.max_steps) {
        throw IntegrationError("step budget exhausted", t_);
      }

      const double err = attempt(h);
      if (!std::isfinite(err)) {
        ++rejected_;
        h_ = 0.2 * h;
        continue;
      }
      double factor = err == 0.0 ? 5.0 : 0.9 * std::pow(err, -0.2);
      if (err <= 1.0) {
        ++accepted_;
        t_ = last ? t_target : t_ + h;
        y_ = y_new_;
        k1_ = k7_;
        factor = std::min(factor, rejected_last_ ? 1.0 : 5.0);
        rejected_last_ = false;
        // A clipped final step says nothing about the natural step size.
        if (!last || h >= h_) h_ = h * std::clamp(factor, 0.2, 5.0);
      } else {
        ++rejected_;
        rejected_last_ = true;
        h_ = h * std::clamp(factor, 0.2, 1.0);
      }
    }
  }

 private:
  double error_norm(const State& err, const State& y0, const State& y1) const {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
      const double scale = opts_.atol + opts_.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
      const double r = std::abs(err[i]) / scale;
      sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(err.size()));
  }

  double initial_step() const {
    double d0 = 0.0, d1 = 0.0;
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      const double sc = opts_.atol + opts_.rtol * std::abs(y_[i]);
      d0 += std::norm(y_[i]) / (sc * sc);
      d1 += std::norm(k1_[i]) / (sc * sc);
    }
    d0 = std::sqrt(d0 / y_.size());
    d1 = std::sqrt(d1 / y_.size());
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    return std::max(h0, 1e-10);
  }

  double attempt(double h) {
    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                            a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                            a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                            b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
    static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                            e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

    const State k2 = rhs_(t_ + 0.2 * h, y_ + h * (a21 * k1_));
    const State k3 = rhs_(t_ + 0.3 * h, y_ + h * (a31 * k1_ + a32 * k2));
    const State k4 = rhs_(t_ + 0.8 * h, y_ + h * (a41 * k1_ + a42 * k2 + a43 * k3));
    const State k5 =
        rhs_(t_ + (8.0 / 9.0) * h, y_ + h * (a51 * k1_ + a52 * k2 + a53 * k3 + a54 * k4));
    const State k6 =
        rhs_(t_ + h, y_ + h * (a61 * k1_ + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    y_new_ = y_ + h * (b1 * k1_ + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    k7_ = rhs_(t_ + h, y_new_);
    const State err = h * (e1 * k1_ + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7_);
    return error_norm(err, y_, y_new_);
  }

  Rhs rhs_;
  double t_;
  State y_;
  IntegratorOptions opts_;
  State k1_, k7_, y_new_;
  double h_ = 0.0;
  bool rejected_last_ = false;
  std::size_t accepted_ = 0;
  std::size_t rejected_ = 0;
};

template <int Dim, class Rhs>
auto make_stepper(Rhs rhs, double t0, CVector<Dim> y0, IntegratorOptions options = {}) {
  return DormandPrince<Dim, Rhs>(std::move(rhs), t0, std::move(y0), options);
}

}  // namespace shakenwell
