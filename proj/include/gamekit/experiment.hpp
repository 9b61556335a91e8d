#pragma once

#include "gamekit/config.hpp"

#include <string>
#include <vector>

namespace gamekit {

// Outcome of one CLI-level command. exit_code follows the process
// convention: 0 success, 1 configuration or I/O trouble, 2 failed data
// certification, 3 singular stage matrices, 4 verification or comparison
// mismatch. Throwing errors map onto the same codes at the boundary.
struct CommandResult {
  std::string text;        // human-readable report
  nlohmann::json summary;  // structured mirror of the report
  int exit_code = 0;
  std::vector<std::string> files_written;
};

// Initial window the experiment commands act from: the configured
// (u_ini, y_ini) when given, else constructed from x1 through the system,
// else all zero. Returned as (u_ini, y_ini), oldest block first.
std::pair<Eigen::VectorXd, Eigen::VectorXd> initial_window(const ExperimentConfig& cfg);

CommandResult cmd_gen_data(const ExperimentConfig& cfg);
// depths: certificate depths L to tabulate; empty means T_ini + horizon.
CommandResult cmd_check(const ExperimentConfig& cfg, std::vector<int> depths = {});
CommandResult cmd_solve(const ExperimentConfig& cfg);
CommandResult cmd_sweep(const ExperimentConfig& cfg);
CommandResult cmd_reproduce(const ExperimentConfig& cfg);

// The bundled two-player study: system, costs, window, and data recipe,
// ready for cmd_reproduce or any other command.
ExperimentConfig builtin_study();

}  // namespace gamekit
