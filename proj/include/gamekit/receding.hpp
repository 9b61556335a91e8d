#pragma once

#include "gamekit/fne_dd.hpp"

#include <Eigen/Dense>

#include <limits>
#include <string>
#include <vector>

namespace gamekit {

// What a receding-horizon controller retains from a horizon-T solve: the
// stage-1 gains, split per player, acting on the current window
// col(u_ini, y_ini) (oldest-first).
struct GainSet {
  std::vector<Eigen::MatrixXd> K;  // player i: m_i x T_ini(m+p)
  std::vector<Eigen::VectorXd> L;
  std::vector<int> horizon;        // producing horizon per player
  int T_ini = 0;
  int m = 0;
  int p = 0;

  Eigen::MatrixXd stacked_gain() const;
  Eigen::VectorXd stacked_offset() const;
};

GainSet first_stage_gain(const HankelBlocks& blocks, const PredictorFamily& pred,
                         const GameSpec& spec, int T, const SolveOptions& opts = {});

// Heterogeneous lookahead: player i keeps the stage-1 gain of its own
// horizon-T_i solve (each solve still models all players at that horizon).
GainSet first_stage_gain(const HankelBlocks& blocks, const PredictorFamily& pred,
                         const GameSpec& spec, const std::vector<int>& T_per_player,
                         const SolveOptions& opts = {});

struct SweepEntry {
  int T = 0;
  GainSet gains;
  // max elementwise change to the T+1 gains; NaN on the last entry where no
  // neighbor exists.
  double gain_diff = std::numeric_limits<double>::quiet_NaN();
};

struct SweepOptions {
  double eps = 0.01;
  int jobs = 1;
  SolveOptions solve;
};

struct SweepResult {
  std::vector<SweepEntry> entries;  // T ascending
  bool converged = false;
  int T_converged = -1;  // first T with gain_diff <= eps
  double eps = 0.01;
};

SweepResult sweep_horizons(const HankelBlocks& blocks, const PredictorFamily& pred,
                           const GameSpec& spec, int T_min, int T_max,
                           const SweepOptions& opts = {});

struct RecedingOptions {
  int M = 1000;                    // stages to play
  double divergence_limit = 1e12;  // throw Diverged past this magnitude
  const BehaviorBasis* drift_monitor = nullptr;
  int tail_window = 50;            // stages averaged for the tail bound
};

struct RecedingRun {
  Trajectory traj;
  Eigen::VectorXd costs;       // discounted running cost over the M stages
  // Geometric bound on what truncation discarded: average recent stage
  // kernel times delta^M / (1 - delta); infinite when delta = 1.
  Eigen::VectorXd tail_bound;
  double max_drift = 0.0;      // worst window infeasibility seen (0 without a monitor)
};

// Watch T steps, move one: apply the stage-1 gains, shift the window, repeat.
// The oracle closure simulates the true system; the data closure feeds the
// window through the one-step predictor.
RecedingRun run_receding_horizon(const GainSet& gains, const LtiSystem& sys, const GameSpec& spec,
                                 const Eigen::VectorXd& u_ini, const Eigen::VectorXd& y_ini,
                                 const RecedingOptions& opts = {});
RecedingRun run_receding_horizon(const GainSet& gains, const PredictorFamily& pred,
                                 const GameSpec& spec, const Eigen::VectorXd& u_ini,
                                 const Eigen::VectorXd& y_ini, const RecedingOptions& opts = {});

// Diagnostics table: gain changes over the sweep, optional realized costs,
// gaps to a reference cost, and the ratio of successive gaps.
struct ConvergenceRow {
  int T = 0;
  double gain_diff = 0.0;
  Eigen::VectorXd costs;  // empty when not evaluated
  Eigen::VectorXd gap;    // empty without a reference
  double gap_ratio = 0.0; // max over players vs the previous row; 0 when undefined
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  bool gains_converged = false;
  int T_converged = -1;
  std::string note;
  std::string table() const;
};

ConvergenceReport convergence_report(const SweepResult& sweep,
                                     const std::vector<Eigen::VectorXd>& costs_per_entry = {},
                                     const Eigen::VectorXd& reference = Eigen::VectorXd());

}  // namespace gamekit
