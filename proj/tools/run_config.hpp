#pragma once

#include <string>

#include "shakenwell/drive.hpp"

namespace shakenwell::cli {

/// Everything a run needs; every subcommand reads the sections it uses.
struct RunConfig {
  std::string mode = "sweep";  // sweep | dynamics | pde | ep-find | coupler
  std::string output;          // empty writes to stdout

  // [drive]
  cdouble V1{0.5};
  cdouble V2{0.5};
  double omega0 = 1.0;
  double eps = 0.2;

  // [sweep]
  double eps_min = 0.1;
  double eps_max = 1.1;
  int eps_points = 201;
  bool theta = true;
  unsigned threads = 0;

  // [dynamics]
  int initial_level = 1;       // 1 or 2
  double t_final = 1000.0;
  double sample_every = 1.0;

  // [well]
  double sigma1 = 1.7320508075688772;  // sqrt 3
  double sigma2 = 1.4142135623730951;  // sqrt 2

  // [path]
  std::string path_kind = "sinusoidal";  // sinusoidal | one-sided
  double amplitude = 1.0;

  // [grid]
  double x_min = -8.0;
  double x_max = 8.0;
  int n_points = 256;
  double dt = 0.01;

  // [pde]
  double pde_t_final = 20000.0;
  double pde_sample_every = 10.0;
  double snapshot_every = 0.0;
  std::string snapshot_prefix;
  bool absorber = false;

  // [ep]
  std::string backend = "twolevel";  // twolevel | pde
  double ep_lo = 0.19;
  double ep_hi = 0.21;
  int ep_scan_points = 41;
  double ep_xtol = 1e-10;

  // [coupler]
  double kappa_e = 0.5;
  cdouble coupler_V{0.5};
  std::string profile = "one-sided-exp";
  std::string input = "S";  // S | A | guide1 | guide2
  double z_final = 5000.0;

  bool operator==(const RunConfig&) const = default;
};

/// Canonical "key = value" text with [sections]; doubles at full precision.
std::string to_ini(const RunConfig& config);
/// Missing keys keep their defaults; unknown keys or bad values raise UsageError.
RunConfig from_ini(const std::string& text);
RunConfig load_config(const std::string& path);

/// Hex SHA-256 of to_ini(config).
std::string config_hash(const RunConfig& config);

/// Rejects inconsistent settings for the selected mode (UsageError).
void validate(const RunConfig& config);

}  // namespace shakenwell::cli
