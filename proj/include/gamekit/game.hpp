#pragma once

#include "gamekit/lti.hpp"
#include "gamekit/numerics.hpp"

#include <Eigen/Dense>

#include <vector>

namespace gamekit {

// Output reference a player tracks: identically zero, a constant vector, or
// one column per stage. Stage indices are 1-based; a per-stage reference has
// no value past its last column and asking for one throws.
class ReferenceTraj {
 public:
  enum class Kind { zero, constant, per_stage };

  static ReferenceTraj zero(Eigen::Index p);
  static ReferenceTraj constant(Eigen::VectorXd value);
  static ReferenceTraj per_stage(Eigen::MatrixXd columns);

  Eigen::VectorXd at(int t) const;
  Eigen::Index dim() const;
  Kind kind() const { return kind_; }
  bool bounded() const { return kind_ == Kind::per_stage; }
  int stages() const;  // columns for per_stage, -1 otherwise

 private:
  ReferenceTraj() = default;
  friend struct PlayerCost;  // lets a PlayerCost start with an unset (dim 0) reference
  Kind kind_ = Kind::zero;
  Eigen::Index p_ = 0;
  Eigen::MatrixXd cols_;  // constant: one column; per_stage: one per stage
};

struct PlayerCost {
  Eigen::MatrixXd Q;                // p x p output weight, symmetric PSD
  ReferenceTraj ref;                // tracking target; dim checked in validate()
  std::vector<Eigen::MatrixXd> R;  // one block per player; own block symmetric PD
  double delta = 1.0;               // discount factor in (0, 1]
};

struct GameSpec {
  std::vector<int> partition;  // input width per player, summing to m
  Eigen::Index p = 0;          // output dimension
  int T_ini = 1;               // window length carried with the game
  std::vector<PlayerCost> players;

  int N() const { return static_cast<int>(players.size()); }
  Eigen::Index m() const;
  BlockLayout::Span player_span(int i) const;  // rows of player i inside a stacked input
  BlockLayout input_layout() const;            // segments "u^1", ..., "u^N"

  // Shape and definiteness checks; throws InvalidInput with the offending
  // item named. Eigenvalue floors: Q >= -1e-10, own R > 1e-12.
  void validate() const;
};

// One-stage cost of player i (0-based) at stage t (1-based),
//   1/2 delta^{t-1} [ (y-r)' Q (y-r) + sum_j u_j' R^{ij} u_j ].
double stage_cost(const GameSpec& spec, int i, const Eigen::VectorXd& y_t,
                  const Eigen::VectorXd& u_t, int t);

// Sum of stage costs over stages 1..horizon of a trajectory.
double total_cost(const GameSpec& spec, int i, const Trajectory& traj, int horizon);
Eigen::VectorXd total_cost(const GameSpec& spec, const Trajectory& traj, int horizon);

}  // namespace gamekit
