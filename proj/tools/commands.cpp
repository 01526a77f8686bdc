#include "commands.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <numbers>
#include <vector>

#include "shakenwell/coupler.hpp"
#include "shakenwell/errors.hpp"
#include "shakenwell/pde.hpp"
#include "shakenwell/twolevel.hpp"
#include "shakenwell/well.hpp"

namespace shakenwell::cli {

namespace {

// Projected PDE maps carry fit error, so coalescence is judged more loosely there.
constexpr double kPdeDefectThreshold = 0.95;

class Row {
 public:
  explicit Row(std::ostream& os) : os_(os) {}
  Row& operator<<(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    if (!first_) os_ << ',';
    os_ << buf;
    first_ = false;
    return *this;
  }
  ~Row() { os_ << '\n'; }

 private:
  std::ostream& os_;
  bool first_ = true;
};

DriveSpec drive_of(const RunConfig& c) { return DriveSpec{c.V1, c.V2, c.omega0, c.eps}; }

well::GridSpec grid_of(const RunConfig& c) {
  well::GridSpec g;
  g.x_min = c.x_min;
  g.x_max = c.x_max;
  g.n_points = c.n_points;
  g.dt = c.dt;
  return g;
}

pde::PathKind path_kind_of(const RunConfig& c) {
  if (c.path_kind == "sinusoidal") return pde::PathKind::sinusoidal;
  if (c.path_kind == "one-sided") return pde::PathKind::one_sided;
  throw UsageError("path kind must be sinusoidal or one-sided");
}

}  // namespace

void write_csv_header(std::ostream& os, const RunConfig& config, const std::string& schema,
                      const std::string& columns) {
  os << "# shakenwell " << config.mode << " schema=" << schema
     << " config_sha256=" << config_hash(config) << '\n'
     << columns << '\n';
}

void cmd_sweep(const RunConfig& c, std::ostream& os) {
  std::vector<double> eps(static_cast<std::size_t>(c.eps_points));
  for (int k = 0; k < c.eps_points; ++k) {
    eps[k] = c.eps_min + (c.eps_max - c.eps_min) * k / (c.eps_points - 1);
  }
  twolevel::SweepOptions opt;
  opt.compute_theta = c.theta;
  opt.threads = c.threads;
  const auto pts = twolevel::sweep(drive_of(c), eps, opt);
  write_csv_header(os, c, "sweep.v1", "eps,mu1_folded,mu2_folded,gap,theta,defect");
  for (const auto& p : pts) {
    Row(os) << p.eps << p.mu1_folded.real() << p.mu2_folded.real() << p.mono.gap << p.theta
            << p.mono.defect;
  }
}

void cmd_dynamics(const RunConfig& c, std::ostream& os) {
  const twolevel::Vec2 a0 = c.initial_level == 1 ? twolevel::Vec2::UnitX() : twolevel::Vec2::UnitY();
  const auto rec = twolevel::propagate(drive_of(c), a0, c.t_final, c.sample_every);
  write_csv_header(os, c, "dynamics.v1", "t,pop1,pop2,norm");
  for (std::size_t k = 0; k < rec.times.size(); ++k) {
    Row(os) << rec.times[k] << rec.a1_sq[k] << rec.a2_sq[k] << rec.norm[k];
  }
}

void cmd_pde(const RunConfig& c, std::ostream& os) {
  const auto spec = well::make_well(c.sigma1, c.sigma2);
  const auto path = pde::make_path(path_kind_of(c), c.amplitude, c.eps);
  pde::RunOptions opt;
  opt.propagator.absorber.enabled = c.absorber;
  opt.snapshot_every = c.snapshot_every;
  opt.snapshot_prefix = c.snapshot_prefix;
  const auto s = pde::run_experiment(spec, path, grid_of(c), c.pde_t_final, c.pde_sample_every, opt);
  write_csv_header(os, c, "pde.v1", "t,pop1,pop2,leakage,norm");
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    Row(os) << s.times[k] << s.pop1[k] << s.pop2[k] << s.leakage[k] << s.norm[k];
  }
}

void cmd_ep_find(const RunConfig& c, std::ostream& os) {
  nlohmann::json j;
  j["backend"] = c.backend;
  if (c.backend == "twolevel") {
    const auto r = twolevel::find_exceptional_point(drive_of(c), c.ep_lo, c.ep_hi, c.ep_scan_points,
                                                    c.ep_xtol);
    j["eps_star"] = r.eps_star;
    j["defect"] = r.defect;
    j["gap"] = r.gap;
    j["residual"] = r.residual;
    j["iterations"] = r.iterations;
    j["splitting"] = r.splitting;
    j["ep_found"] = r.found;
  } else {
    const auto spec = well::make_well(c.sigma1, c.sigma2);
    const auto r = pde::find_degeneracy(spec, path_kind_of(c), c.amplitude, c.ep_lo, c.ep_hi,
                                        grid_of(c), c.ep_scan_points, c.ep_xtol);
    j["eps_star"] = r.eps_star;
    j["defect"] = r.defect;
    j["gap"] = r.gap;
    j["residual"] = std::numeric_limits<double>::quiet_NaN();
    j["iterations"] = r.iterations;
    j["splitting"] = r.splitting;
    j["ep_found"] = r.defect >= kPdeDefectThreshold;
  }
  j["config_sha256"] = config_hash(c);
  os << j.dump(2) << '\n';
}

void cmd_coupler(const RunConfig& c, std::ostream& os) {
  coupler::CouplerSpec spec;
  spec.kappa_e = c.kappa_e;
  spec.eps = c.eps;
  spec.V = c.coupler_V;
  spec.profile = coupler::profile_from_string(c.profile);
  const double r = 1.0 / std::numbers::sqrt2;
  twolevel::Vec2 b0;
  if (c.input == "S") b0 = {r, r};
  else if (c.input == "A") b0 = {r, -r};
  else if (c.input == "guide1") b0 = {1.0, 0.0};
  else b0 = {0.0, 1.0};
  const auto tr = coupler::propagate_coupler(spec, b0, c.z_final, c.sample_every);
  write_csv_header(os, c, "coupler.v1", "z,guide1,guide2,symmetric,antisymmetric,norm");
  for (std::size_t k = 0; k < tr.z.size(); ++k) {
    Row(os) << tr.z[k] << tr.guide1[k] << tr.guide2[k] << tr.symmetric[k] << tr.antisymmetric[k]
            << tr.norm[k];
  }
  std::fprintf(stderr, "mode_selectivity %.6f\n", coupler::mode_selectivity(tr));
}

void run(const RunConfig& config, std::ostream& os) {
  validate(config);
  if (config.mode == "sweep") cmd_sweep(config, os);
  else if (config.mode == "dynamics") cmd_dynamics(config, os);
  else if (config.mode == "pde") cmd_pde(config, os);
  else if (config.mode == "ep-find") cmd_ep_find(config, os);
  else cmd_coupler(config, os);
}

}  // namespace shakenwell::cli
