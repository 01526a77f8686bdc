#include <CLI11.hpp>

#include <cstring>
#include <fstream>
#include <iostream>
#include <string>

#include "commands.hpp"
#include "run_config.hpp"
#include "shakenwell/errors.hpp"

namespace {

using shakenwell::cli::RunConfig;

constexpr int kUsage = 2;
constexpr int kNumerical = 3;

// --config is applied first so explicit flags override file values.
std::string find_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--config") == 0 && i + 1 < argc) return argv[i + 1];
    if (std::strncmp(argv[i], "--config=", 9) == 0) return argv[i] + 9;
  }
  return {};
}

void add_drive(CLI::App* app, RunConfig& c) {
  app->add_option("--V1", c.V1, "drive amplitude V1 (complex, e.g. 0.5 or 0+0.5i)");
  app->add_option("--V2", c.V2, "drive amplitude V2 (complex)");
  app->add_option("--omega0", c.omega0, "level spacing");
}

void add_pde_setup(CLI::App* app, RunConfig& c) {
  app->add_option("--sigma1", c.sigma1, "well parameter sigma1");
  app->add_option("--sigma2", c.sigma2, "well parameter sigma2");
  app->add_option("--path", c.path_kind, "sinusoidal | one-sided");
  app->add_option("--amplitude,-A", c.amplitude, "shaking amplitude");
  app->add_option("--x-min", c.x_min);
  app->add_option("--x-max", c.x_max);
  app->add_option("--points", c.n_points, "grid points");
  app->add_option("--dt", c.dt, "time step");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Floquet analysis of a periodically shaken potential well in the complex plane"};
  app.require_subcommand(0, 1);
  std::string config_path;
  app.add_option("--config", config_path, "INI run configuration; flags override its values");
  app.add_option("--output,-o", cfg.output, "output file (default stdout)");
  app.add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
  bool print_config = false;
  app.add_flag("--print-config", print_config, "print the effective configuration and exit");

  auto* sweep = app.add_subcommand("sweep", "quasi-energies over an eps range (CSV)");
  add_drive(sweep, cfg);
  sweep->add_option("--eps-min", cfg.eps_min);
  sweep->add_option("--eps-max", cfg.eps_max);
  sweep->add_option("--eps-points", cfg.eps_points);
  sweep->add_option("--theta", cfg.theta, "compute the unbalance factor");

  auto* dyn = app.add_subcommand("dynamics", "two-level populations versus time (CSV)");
  add_drive(dyn, cfg);
  dyn->add_option("--eps", cfg.eps);
  dyn->add_option("--level", cfg.initial_level, "initially occupied level (1 or 2)");
  dyn->add_option("--t-final", cfg.t_final);
  dyn->add_option("--sample", cfg.sample_every);

  auto* pde = app.add_subcommand("pde", "full Schroedinger evolution projected on the bound pair (CSV)");
  add_pde_setup(pde, cfg);
  pde->add_option("--eps", cfg.eps);
  pde->add_option("--t-final", cfg.pde_t_final);
  pde->add_option("--sample", cfg.pde_sample_every);
  pde->add_option("--snapshot-every", cfg.snapshot_every);
  pde->add_option("--snapshot-prefix", cfg.snapshot_prefix);
  pde->add_option("--absorber", cfg.absorber);

  auto* ep = app.add_subcommand("ep-find", "locate a Floquet exceptional point (JSON)");
  add_drive(ep, cfg);
  add_pde_setup(ep, cfg);
  ep->add_option("--backend", cfg.backend, "twolevel | pde");
  ep->add_option("--lo", cfg.ep_lo);
  ep->add_option("--hi", cfg.ep_hi);
  ep->add_option("--scan-points", cfg.ep_scan_points);
  ep->add_option("--xtol", cfg.ep_xtol);

  auto* cpl = app.add_subcommand("coupler", "directional coupler mode selection (CSV)");
  cpl->add_option("--kappa-e", cfg.kappa_e);
  cpl->add_option("--eps", cfg.eps);
  cpl->add_option("--V", cfg.coupler_V, "modulation amplitude (complex)");
  cpl->add_option("--profile", cfg.profile, "hermitian-cos | one-sided-exp | reversed");
  cpl->add_option("--input", cfg.input, "S | A | guide1 | guide2");
  cpl->add_option("--z-final", cfg.z_final);
  cpl->add_option("--sample", cfg.sample_every);

  try {
    if (const auto path = find_config(argc, argv); !path.empty()) cfg = shakenwell::cli::load_config(path);
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  } catch (const shakenwell::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  }

  for (const auto* sub : app.get_subcommands()) cfg.mode = sub->get_name();
  if (app.get_subcommands().empty() && config_path.empty() && !print_config) {
    std::cerr << app.help();
    return kUsage;
  }

  try {
    if (print_config) {
      std::cout << shakenwell::cli::to_ini(cfg);
      return 0;
    }
    if (cfg.output.empty()) {
      shakenwell::cli::run(cfg, std::cout);
    } else {
      std::ofstream out(cfg.output);
      if (!out) throw shakenwell::UsageError("cannot open output '" + cfg.output + "'");
      shakenwell::cli::run(cfg, out);
    }
  } catch (const shakenwell::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const shakenwell::ContractError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const shakenwell::DomainError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const shakenwell::ResolutionError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
  return 0;
}
