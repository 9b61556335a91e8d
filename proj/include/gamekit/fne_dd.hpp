#pragma once

#include "gamekit/behavior.hpp"
#include "gamekit/errors.hpp"
#include "gamekit/game.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gamekit {

// The coupled first-order system of one backward stage: all players'
// stationarity conditions stacked over input rows. Gains solve
// Htilde K_t = gtilde and Htilde L_t = gtilde_prime.
struct StageSystem {
  Eigen::MatrixXd Htilde;        // m x m
  Eigen::MatrixXd gtilde;        // m x width(U_{t-1})
  Eigen::VectorXd gtilde_prime;  // m
};

struct SolveOptions {
  // Keep P, S, w for every stage. The residual verifier needs them all;
  // plain equilibrium evaluation only needs stage 1, so long horizons can
  // drop the rest (the per-stage P_t grows quadratically with t).
  bool keep_stage_values = true;
  double rcond_min = 1e-12;
  std::optional<double> tol;  // pseudo-inverse / rank tolerance override
};

// Feedback equilibrium over stacked decision vectors. Stage t maps
// U_{t-1} = col(u_ini, y_ini, u_1..u_{t-1}) (oldest-first) to the stage
// input: u_t = K_t U_{t-1} + L_t. Player value at stage t is
// 1/2 U' P^i_t U + S^i_t' U + w^i_t on U = U_{t-1}.
struct FneSolution {
  HankelDims dims;
  std::vector<int> partition;
  int T = 0;

  std::vector<Eigen::MatrixXd> K;  // K[t-1]: m x width(t), players stacked by partition
  std::vector<Eigen::VectorXd> L;

  // P[t-1][i] etc. With keep_stage_values=false only stage 1 is retained.
  std::vector<std::vector<Eigen::MatrixXd>> P;
  std::vector<std::vector<Eigen::VectorXd>> S;
  std::vector<std::vector<double>> w;
  bool full_values = false;

  std::vector<double> stage_rcond;  // conditioning of Htilde per stage

  int N() const { return static_cast<int>(partition.size()); }
  BlockLayout layout(int t) const;  // layout of U_{t-1}
  Eigen::MatrixXd player_gain(int t, int i) const;
  Eigen::VectorXd player_offset(int t, int i) const;
};

// Raised when some Htilde_t is singular to working precision. Carries the
// 1-based stage and, when available, the stages above t that did solve.
struct SingularStageMatrix final : Error {
  SingularStageMatrix(const std::string& what, int stage, double rcond,
                      std::shared_ptr<const FneSolution> partial = nullptr)
      : Error(ErrorCode::singular_stage, what), stage(stage), rcond(rcond), partial(std::move(partial)) {}
  int stage;
  double rcond;
  std::shared_ptr<const FneSolution> partial;
};

// Builds the stage system at t from the predictor and next-stage value data
// (P_next/S_next live on col(U_{t-1}, u_t); empty matrices mean terminal).
StageSystem assemble_stage(const Eigen::MatrixXd& G_t, const std::vector<Eigen::MatrixXd>& P_next,
                           const std::vector<Eigen::VectorXd>& S_next, const GameSpec& spec, int t);

FneSolution solve_finite_fne(const HankelBlocks& blocks, const PredictorFamily& pred,
                             const GameSpec& spec, int T, const SolveOptions& opts = {});

// Re-derives every equilibrium condition from the stored solution and
// reports scaled residuals: stationarity on the feasible window set and on
// each applied input block, the offset equation, and recomputation of the
// three value recursions.
struct ResidualReport {
  struct Entry {
    int t = 0;
    int player = 0;  // 1-based in reports
    std::string equation;
    double residual = 0.0;
  };
  std::vector<Entry> entries;
  double max_residual = 0.0;
  double tol = 1e-8;
  bool pass = false;
  const Entry* worst() const;
};

ResidualReport verify_solution_residuals(const FneSolution& sol, const PredictorFamily& pred,
                                         const BehaviorBasis& basis, const GameSpec& spec,
                                         double tol = 1e-8);

// Equilibrium cost of every player as seen from the initial window
// U0 = col(u_ini, y_ini), via the stored stage-1 value data.
Eigen::VectorXd value_function(const FneSolution& sol, const Eigen::VectorXd& U0);

struct RolloutResult {
  Trajectory traj;        // stages 1..T under the equilibrium strategies
  Eigen::VectorXd costs;  // realized discounted cost per player
};

// Plays the equilibrium forward from a window. The oracle closure simulates
// the true system; the data closure evaluates outputs through the stage
// predictors and never touches a state.
RolloutResult rollout_fne(const FneSolution& sol, const LtiSystem& sys, const GameSpec& spec,
                          const Eigen::VectorXd& u_ini, const Eigen::VectorXd& y_ini);
RolloutResult rollout_fne(const FneSolution& sol, const PredictorFamily& pred, const GameSpec& spec,
                          const Eigen::VectorXd& u_ini, const Eigen::VectorXd& y_ini);

// Monte-Carlo unilateral-deviation audit against the true system: one player
// abandons the equilibrium from a random stage onward under random gain and
// offset perturbations at scales {1e-2, 1e-1, 1}. No deviation may beat the
// equilibrium cost by more than the margin floor.
struct BestResponseReport {
  int trials = 0;
  double worst_margin = 0.0;  // min over trials of (deviation cost - equilibrium cost)
  int worst_player = 0;       // 1-based
  int worst_stage = 0;
  double worst_scale = 0.0;
  double margin_floor = -1e-9;
  bool pass = false;
};

BestResponseReport best_response_check(const FneSolution& sol, const LtiSystem& sys,
                                       const GameSpec& spec, const Eigen::VectorXd& u_ini,
                                       const Eigen::VectorXd& y_ini, int trials, std::uint64_t seed);

}  // namespace gamekit
