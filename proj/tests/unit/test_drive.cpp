#include <doctest.h>

#include <cmath>
#include <numbers>

#include "shakenwell/drive.hpp"

using namespace shakenwell;
constexpr double kPi = std::numbers::pi;

TEST_CASE("sinusoidal path reduces to A sin(eps t)") {
  const ShakingPath p{0.5, 0.5, 1.0};
  CHECK(std::abs(p(kPi / 2) - 1.0) < 1e-15);
  CHECK(std::abs(eval_path(p, kPi / 2) - 1.0) < 1e-15);
  for (int k = 0; k < 16; ++k) {
    const double t = 2 * kPi * k / 16;
    CHECK(std::abs(p(t).imag()) < 1e-15);
    CHECK(std::abs(p(t).real() - std::sin(t)) < 1e-15);
  }
  CHECK(p.is_hermitian());
}

TEST_CASE("one-sided path starts at the origin and reaches 2A") {
  const auto p = ShakingPath::one_sided(0.6, 1.0);
  CHECK(std::abs(p(0.0)) <= 1e-14);
  CHECK(std::abs(p(kPi) - 1.2) < 1e-14);
  CHECK_FALSE(p.is_hermitian());
}

TEST_CASE("every path starts at the origin") {
  const ShakingPath paths[] = {{cdouble(0.3, 0.2), cdouble(-0.1, 0.7), 0.4},
                               {cdouble(1.5), cdouble(0.0), 2.0},
                               ShakingPath::sinusoidal(1.0, 1.0 / 3.0)};
  for (const auto& p : paths) CHECK(std::abs(p(0.0)) <= 1e-14);
}

TEST_CASE("path velocity matches a central difference") {
  const ShakingPath p{cdouble(0.3, 0.2), cdouble(-0.1, 0.7), 0.4};
  const double h = 1e-5;
  for (double t : {0.0, 1.3, 7.7}) {
    const cdouble fd = (p(t + h) - p(t - h)) / (2 * h);
    CHECK(std::abs(fd - p.velocity(t)) < 1e-9);
  }
}

TEST_CASE("modulation is periodic and real for a Hermitian drive") {
  const auto d = DriveSpec::cosine(0.5, 1.0, 0.3);
  CHECK(std::abs(d.modulation(0.0) - d.modulation(d.period())) < 1e-14);
  CHECK(d.is_hermitian());
  for (int k = 0; k < 16; ++k) CHECK(std::abs(d.modulation(k * 1.7).imag()) < 1e-15);
  CHECK(std::abs(d.modulation(0.0) - 1.0) < 1e-15);
}

TEST_CASE("one-sided drive is non-Hermitian with zero product") {
  const auto d = DriveSpec::one_sided(cdouble(0, 0.5), 1.0, 0.2);
  CHECK_FALSE(d.is_hermitian());
  CHECK(d.has_real_product());
  CHECK(std::abs(d.modulation(0.0) - d.modulation(d.period())) < 1e-14);
  const DriveSpec c{cdouble(0.5), cdouble(0, 0.5), 1.0, 0.2};
  CHECK_FALSE(c.has_real_product());
}
