#pragma once

#include "gamekit/fne_dd.hpp"
#include "gamekit/lti.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace gamekit {

// State-feedback equilibrium computed from the true system matrices: the
// oracle counterpart of FneSolution. Stage t plays u_t = Kbar_t x_t + Lbar_t;
// the player value on the state is 1/2 x' P^i_t x + S^i_t' x + w^i_t.
struct KnownFneSolution {
  int T = 0;
  Eigen::Index n = 0;
  std::vector<int> partition;

  std::vector<Eigen::MatrixXd> K;  // m x n per stage
  std::vector<Eigen::VectorXd> L;
  std::vector<std::vector<Eigen::MatrixXd>> P;  // per stage, per player, n x n
  std::vector<std::vector<Eigen::VectorXd>> S;
  std::vector<std::vector<double>> w;
  std::vector<double> stage_rcond;

  int N() const { return static_cast<int>(partition.size()); }
  Eigen::MatrixXd player_gain(int t, int i) const;
  Eigen::VectorXd player_offset(int t, int i) const;
};

KnownFneSolution solve_finite_fne_known(const LtiSystem& sys, const GameSpec& spec, int T,
                                        const SolveOptions& opts = {});

// Equilibrium cost per player as a function of the stage-1 state.
Eigen::VectorXd value_function_known(const KnownFneSolution& sol, const Eigen::VectorXd& x1);

// Structural comparison of the two solution representations:
//  - the gain block a data-driven stage puts on an applied input u_k must be
//    the state gain composed with the impulse response A^{t-1-k} B,
//  - the offsets must agree outright,
//  - on every feasible window (checked on basis columns), the window part of
//    the data-driven gain must act like the state gain at the matched state
//    propagated to the stage, Kbar_t A^{t-1} x_1(column).
struct CrossCheckReport {
  double max_dev_inputs = 0.0;
  double max_dev_offsets = 0.0;
  double max_dev_window = 0.0;
  double tol = 1e-6;
  bool pass = false;
  double max() const;
};

CrossCheckReport cross_check_known(const FneSolution& dd, const KnownFneSolution& kn,
                                      const LtiSystem& sys, const BehaviorBasis& basis,
                                      double tol = 1e-6);

// Stationary limit of the finite-horizon gains, with a closed-form cost
// evaluator when the discounted closed loop contracts. References must be
// stage-invariant; nonzero constants are allowed but flagged, since the
// stationary theory is cleanest for regulation to zero.
struct StationaryEquilibrium {
  Eigen::MatrixXd K;  // m x n
  Eigen::VectorXd L;
  std::vector<int> partition;
  int iterations = 0;        // horizon at which the gain change fell inside eps
  double final_change = 0.0;

  // Per-player cost pieces on the closed loop, valid when closed_form holds.
  std::vector<Eigen::MatrixXd> P;
  std::vector<Eigen::VectorXd> s;
  std::vector<double> v;
  bool closed_form = false;
  double spectral_radius = 0.0;  // of A + B K
  std::string warning;

  LtiSystem sys;  // retained for the simulation fallback
  GameSpec spec;

  Eigen::MatrixXd player_gain(int i) const;
  Eigen::VectorXd player_offset(int i) const;
  // Closed-form quadratic when available, long discounted simulation
  // otherwise.
  Eigen::VectorXd costs(const Eigen::VectorXd& x1) const;
};

StationaryEquilibrium infinite_horizon_known(const LtiSystem& sys, const GameSpec& spec,
                                             double eps = 1e-9, int T_max = 5000);

}  // namespace gamekit
