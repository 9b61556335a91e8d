#pragma once

#include "gamekit/fne_dd.hpp"
#include "gamekit/game.hpp"

#include <Eigen/Dense>

#include <vector>

namespace gamekit::detail {

// One backward step of the coupled stage game, shared by the data-driven and
// the known-dynamics solvers. The information state z drives outputs through
// Gamma, y_t = Gamma col(z, u_t), and evolves by z_next = Phi col(z, u_t). A
// null Phi means z_next is col(z, u_t) itself, the growing stacked vector of
// the data-driven recursion. P_next, S_next, w_next live on z_next; empty
// containers mean the terminal stage.

StageSystem assemble_stage_core(const Eigen::MatrixXd& Gamma, const Eigen::MatrixXd* Phi,
                                const std::vector<Eigen::MatrixXd>& P_next,
                                const std::vector<Eigen::VectorXd>& S_next,
                                const std::vector<Eigen::VectorXd>& refs, const GameSpec& spec);

struct StageValues {
  std::vector<Eigen::MatrixXd> P;
  std::vector<Eigen::VectorXd> S;
  std::vector<double> w;
};

// Propagates the value data through the solved stage: plugs u = K_t z + L_t
// into stage cost plus discounted continuation.
StageValues update_values_core(const Eigen::MatrixXd& Gamma, const Eigen::MatrixXd* Phi,
                               const Eigen::MatrixXd& K_t, const Eigen::VectorXd& L_t,
                               const std::vector<Eigen::MatrixXd>& P_next,
                               const std::vector<Eigen::VectorXd>& S_next,
                               const std::vector<double>& w_next,
                               const std::vector<Eigen::VectorXd>& refs, const GameSpec& spec);

}  // namespace gamekit::detail
