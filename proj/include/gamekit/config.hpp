#pragma once

#include "gamekit/game.hpp"
#include "gamekit/lti.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gamekit {

struct SweepRange {
  int T_min = 1;
  int T_max = 50;
};

// Everything a command needs, assembled from a JSON file (see
// docs/config_schema.md) plus command-line overrides.
struct ExperimentConfig {
  std::optional<LtiSystem> system;  // oracle; needed for gen-data and the cross checks
  GameSpec game;
  int n_states = -1;  // certification hint; derived from the system when present

  int horizon = 50;  // solve horizon T
  SweepRange sweep;
  double eps = 0.01;  // gain-convergence threshold
  int M = 1000;       // receding-run length

  std::vector<std::string> data_files;         // offline data CSVs
  std::optional<OfflineDataOptions> recipe;    // or generate from the system
  std::string data_out = "data.csv";           // gen-data target inside out_dir

  // Evaluation window: either given outright, or constructed to end at x1
  // (u_ini alone pins the inputs of that construction).
  std::optional<Eigen::VectorXd> u_ini, y_ini;
  std::optional<Eigen::VectorXd> x1;

  std::string out_dir = "out";
  std::optional<double> tol;
  int jobs = 1;
  bool plot = false;
  int br_trials = 200;
  std::uint64_t br_seed = 2024;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const nlohmann::json& j);

// Row-major matrix <-> nested-array JSON helpers, shared by config parsing
// and the manifests the commands write.
Eigen::MatrixXd json_to_matrix(const nlohmann::json& j, const std::string& what);
Eigen::VectorXd json_to_vector(const nlohmann::json& j, const std::string& what);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& M);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);

}  // namespace gamekit
