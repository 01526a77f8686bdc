#pragma once

#include <string>
#include <utility>
#include <vector>

#include "shakenwell/drive.hpp"
#include "shakenwell/twolevel.hpp"

namespace shakenwell::coupler {

using twolevel::Vec2;

enum class Profile {
  hermitian_cos,  // f = V e^{i eps z} + V e^{-i eps z}
  one_sided_exp,  // f = i V e^{-i eps z}
  reversed,       // f = i V e^{+i eps z}
};

std::string to_string(Profile profile);
/// Accepts "hermitian-cos", "one-sided-exp", "reversed".
Profile profile_from_string(const std::string& name);

/// Directional coupler with antisymmetric index modulation eps f(eps z):
///   i b1' = -kappa_e b2 + eps f b1,   i b2' = -kappa_e b1 - eps f b2.
struct CouplerSpec {
  double kappa_e = 0.5;
  double eps = 1.0 / 3.0;
  cdouble V{0.5};
  Profile profile = Profile::one_sided_exp;
};

/// Equivalent two-level drive in the supermode basis (omega0 = 2 kappa_e, t = z).
DriveSpec to_drive(const CouplerSpec& spec);

/// Waveguide amplitudes (b1, b2) to supermodes: a1 = (b1 + b2)/sqrt2 (S), a2 = (b1 - b2)/sqrt2 (A).
std::pair<cdouble, cdouble> supermode_transform(cdouble b1, cdouble b2);
/// Inverse of supermode_transform (the same matrix).
std::pair<cdouble, cdouble> inverse_supermode_transform(cdouble a1, cdouble a2);

struct CouplerTrajectory {
  std::vector<double> z;
  std::vector<double> guide1, guide2;          // |b1|^2, |b2|^2
  std::vector<double> symmetric, antisymmetric; // |a1|^2, |a2|^2
  std::vector<double> norm;
};

/// Propagates waveguide input b0 to z_final, sampling every record_every.
CouplerTrajectory propagate_coupler(const CouplerSpec& spec, const Vec2& b0, double z_final,
                                    double record_every, const IntegratorOptions& options = {});

/// Mean of |a2|^2 / (|a1|^2 + |a2|^2) over the samples in the final 10% of the run.
double mode_selectivity(const CouplerTrajectory& trajectory);

}  // namespace shakenwell::coupler
