#include "shakenwell/coupler.hpp"

#include <cmath>
#include <numbers>

#include "shakenwell/errors.hpp"

namespace shakenwell::coupler {

namespace {
constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
constexpr cdouble kI{0.0, 1.0};
}  // namespace

std::string to_string(Profile profile) {
  switch (profile) {
    case Profile::hermitian_cos: return "hermitian-cos";
    case Profile::one_sided_exp: return "one-sided-exp";
    case Profile::reversed: return "reversed";
  }
  return "unknown";
}

Profile profile_from_string(const std::string& name) {
  if (name == "hermitian-cos") return Profile::hermitian_cos;
  if (name == "one-sided-exp") return Profile::one_sided_exp;
  if (name == "reversed") return Profile::reversed;
  throw UsageError("unknown coupler profile '" + name + "'");
}

DriveSpec to_drive(const CouplerSpec& spec) {
  if (!(spec.kappa_e > 0.0)) throw ContractError("kappa_e must be positive");
  if (!(spec.eps > 0.0)) throw ContractError("eps must be positive");
  DriveSpec d;
  d.omega0 = 2.0 * spec.kappa_e;
  d.eps = spec.eps;
  switch (spec.profile) {
    case Profile::hermitian_cos: d.V1 = spec.V; d.V2 = spec.V; break;
    case Profile::one_sided_exp: d.V1 = 0.0; d.V2 = kI * spec.V; break;
    case Profile::reversed: d.V1 = kI * spec.V; d.V2 = 0.0; break;
  }
  return d;
}

std::pair<cdouble, cdouble> supermode_transform(cdouble b1, cdouble b2) {
  return {(b1 + b2) * kInvSqrt2, (b1 - b2) * kInvSqrt2};
}

std::pair<cdouble, cdouble> inverse_supermode_transform(cdouble a1, cdouble a2) {
  return supermode_transform(a1, a2);
}

CouplerTrajectory propagate_coupler(const CouplerSpec& spec, const Vec2& b0, double z_final,
                                    double record_every, const IntegratorOptions& options) {
  if (!(z_final > 0.0)) throw ContractError("z_final must be positive");
  const auto [a1, a2] = supermode_transform(b0(0), b0(1));
  const auto rec = twolevel::propagate(to_drive(spec), Vec2(a1, a2), z_final, record_every, options);

  CouplerTrajectory out;
  const std::size_t n = rec.times.size();
  out.z = rec.times;
  out.guide1.resize(n);
  out.guide2.resize(n);
  out.symmetric = rec.a1_sq;
  out.antisymmetric = rec.a2_sq;
  out.norm = rec.norm;
  for (std::size_t k = 0; k < n; ++k) {
    const auto [b1, b2] = inverse_supermode_transform(rec.a1[k], rec.a2[k]);
    out.guide1[k] = std::norm(b1);
    out.guide2[k] = std::norm(b2);
  }
  return out;
}

double mode_selectivity(const CouplerTrajectory& tr) {
  if (tr.z.empty()) throw ContractError("empty trajectory");
  const double z_end = tr.z.back();
  const double z_start = tr.z.front() + 0.9 * (z_end - tr.z.front());
  double sum = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < tr.z.size(); ++k) {
    if (tr.z[k] < z_start) continue;
    const double total = tr.symmetric[k] + tr.antisymmetric[k];
    if (total > 0.0) {
      sum += tr.antisymmetric[k] / total;
      ++count;
    }
  }
  if (count == 0) throw ContractError("trajectory has no power in its final tenth");
  return sum / count;
}

}  // namespace shakenwell::coupler
