#pragma once

#include "gamekit/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>

namespace gamekit {

// Discrete-time linear system x_{t+1} = A x_t + B u_t, y_t = C x_t + D u_t.
struct LtiSystem {
  Eigen::MatrixXd A, B, C, D;

  Eigen::Index n() const { return A.rows(); }  // states
  Eigen::Index m() const { return B.cols(); }  // inputs
  Eigen::Index p() const { return C.rows(); }  // outputs

  void validate() const;  // shape coherence; throws InvalidInput
};

// Input/output record over a common length L; column t-1 holds time t.
struct Trajectory {
  Eigen::MatrixXd u;  // m x L
  Eigen::MatrixXd y;  // p x L

  Eigen::Index length() const { return u.cols(); }
  void validate() const;
};

struct SimulationResult {
  Trajectory traj;
  // n x (L+1); column t-1 is x_t, the final column is the state reached
  // after the last input was applied.
  Eigen::MatrixXd states;
};

SimulationResult simulate(const LtiSystem& sys, const Eigen::VectorXd& x1, const Eigen::MatrixXd& u);

// Smallest depth l at which the l-block observability stack reaches full
// column rank; throws NotObservable if no depth up to n works.
int lag(const LtiSystem& sys, std::optional<double> tol = std::nullopt);

bool is_controllable(const LtiSystem& sys, std::optional<double> tol = std::nullopt);

struct OfflineDataOptions {
  Eigen::Index length = 500;
  double amplitude = 5.0;  // inputs drawn uniform on [-amplitude, amplitude]
  std::uint64_t seed = 0;
  std::optional<Eigen::VectorXd> x1;  // initial state, default zero
};

Trajectory generate_offline_data(const LtiSystem& sys, const OfflineDataOptions& opts = {});

struct MatchedState {
  Eigen::VectorXd x1;        // state reached one step past the window; the game starts here
  Eigen::VectorXd x_window;  // state at the first window sample
  double residual = 0.0;     // relative output reconstruction error
};

// Recovers the state trajectory consistent with a T_ini-step input/output
// window, both stacked oldest-first (m resp. p entries per step). The window
// length is inferred from the vector sizes and must be at least the lag.
// Throws InconsistentInitialData when no state reproduces y_ini within tol
// (relative, default 1e-8), NotObservable when the window is too short to
// determine the state uniquely.
MatchedState match_initial_state(const LtiSystem& sys, const Eigen::VectorXd& u_ini,
                                 const Eigen::VectorXd& y_ini, std::optional<double> tol = std::nullopt);

struct Window {
  Eigen::VectorXd u_ini;  // stacked oldest-first
  Eigen::VectorXd y_ini;
  Eigen::VectorXd x1;     // state immediately after the window
};

// Constructs an exactly feasible window whose post-window state is x1. With
// u_ini given, the inputs are pinned and only the pre-window state is solved
// for; otherwise the minimum-norm (pre-state, inputs) pair is used. Throws
// InvalidInput when x1 is unreachable under those constraints.
Window window_for_state(const LtiSystem& sys, const Eigen::VectorXd& x1, int T_ini,
                        std::optional<Eigen::VectorXd> u_ini = std::nullopt);

// Random feasible window: pre-window state and inputs uniform on
// [-amplitude, amplitude], outputs simulated forward.
Window sample_window(const LtiSystem& sys, int T_ini, double amplitude, Rng& rng);

// CSV with header t,u_1,..,u_m,y_1,..,y_p, one row per sample, values written
// with enough digits to round-trip in binary.
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::string& path);

// A^k for k >= 0 by repeated multiplication; exponents here are window-sized.
Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& A, int k);

}  // namespace gamekit
