#pragma once

#include <ostream>
#include <string>

#include "run_config.hpp"

namespace shakenwell::cli {

/// "# shakenwell <mode> schema=<id> config_sha256=<hash>" followed by the column line.
void write_csv_header(std::ostream& os, const RunConfig& config, const std::string& schema,
                      const std::string& columns);

/// eps, mu1_folded, mu2_folded, gap, theta, defect
void cmd_sweep(const RunConfig& config, std::ostream& os);
/// t, pop1, pop2, norm
void cmd_dynamics(const RunConfig& config, std::ostream& os);
/// t, pop1, pop2, leakage, norm
void cmd_pde(const RunConfig& config, std::ostream& os);
/// JSON {eps_star, defect, gap, residual, iterations, backend, ep_found, splitting, config_sha256}
void cmd_ep_find(const RunConfig& config, std::ostream& os);
/// z, guide1, guide2, symmetric, antisymmetric, norm
void cmd_coupler(const RunConfig& config, std::ostream& os);

/// Dispatches on config.mode after validation.
void run(const RunConfig& config, std::ostream& os);

}  // namespace shakenwell::cli
