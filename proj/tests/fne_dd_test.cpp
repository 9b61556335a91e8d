#include "doctest.h"

#include "gamekit/behavior.hpp"
#include "gamekit/errors.hpp"
#include "gamekit/fne_dd.hpp"
#include "oracles.hpp"

using namespace gamekit;

namespace {

struct Fixture {
  std::vector<Trajectory> data;
  HankelBlocks blocks;
  PredictorFamily pred;
  BehaviorBasis basis;
};

// The 500-sample seed-1 excitation partitioned at the deepest horizon the
// suite needs; shallower solves reuse the same predictor family prefix.
const Fixture& fixture() {
  static const Fixture fx = [] {
    Fixture f;
    OfflineDataOptions opts;
    opts.length = 500;
    opts.seed = 1;
    f.data = {generate_offline_data(oracles::test_system(), opts)};
    PartitionOptions popts;
    popts.n_states = 3;
    f.blocks = partition(f.data, 2, 50, popts);
    f.pred = predictors(f.blocks);
    f.basis = behavior_basis(f.data, 2, 3, 2);
    return f;
  }();
  return fx;
}

HankelBlocks shallow(const Fixture& f, int T) {
  PartitionOptions popts;
  popts.n_states = 3;
  return partition(f.data, 2, T, popts);
}

}  // namespace

TEST_CASE("stage-1 gains at the reference horizon match the frozen regression values") {
  const Fixture& f = fixture();
  const FneSolution sol = solve_finite_fne(f.blocks, f.pred, oracles::test_game(), 50);

  Eigen::MatrixXd expectK(2, 8);
  expectK << -0.0785, -0.1715, -0.3566, 0.2095, 0.1634, -0.0624, -0.083, 0.4453,
             -0.0179, -0.2916, 1.4491, -0.0729, 0.2286, -0.1393, -0.6568, -0.0174;
  const Eigen::VectorXd K1 = sol.player_gain(1, 0).row(0);
  const Eigen::VectorXd K2 = sol.player_gain(1, 1).row(0);
  CHECK((K1.transpose() - expectK.row(0)).cwiseAbs().maxCoeff() < 1e-3);
  CHECK((K2.transpose() - expectK.row(1)).cwiseAbs().maxCoeff() < 1e-3);
  CHECK(sol.player_offset(1, 0)(0) == doctest::Approx(0.1908).epsilon(5e-3));
  CHECK(sol.player_offset(1, 1)(0) == doctest::Approx(0.3530).epsilon(5e-3));

  CHECK(sol.T == 50);
  CHECK(sol.N() == 2);
  CHECK(sol.K.size() == 50);
  CHECK(sol.layout(1).total() == 8);
  CHECK(sol.layout(50).total() == 8 + 49 * 2);
}

TEST_CASE("a single-player game reduces to the independently coded tracker") {
  const LtiSystem sys = oracles::test_system();
  GameSpec solo;
  solo.partition = {2};
  solo.p = 2;
  solo.T_ini = 2;
  PlayerCost pc;
  pc.Q = oracles::test_game().players[0].Q;
  Eigen::VectorXd l(2);
  l << -1.0, 0.3;
  pc.ref = ReferenceTraj::constant(l);
  pc.R = {0.5 * Eigen::MatrixXd::Identity(2, 2)};
  pc.delta = 0.8;
  solo.players.push_back(pc);

  const int T = 6;
  const Fixture& f = fixture();
  const HankelBlocks blocks = shallow(f, T);
  const FneSolution sol = solve_finite_fne(blocks, f.pred, solo, T);

  const oracles::AffineLqr lqr = oracles::solve_affine_lqr(sys, pc.Q, l, pc.R[0], pc.delta, T);

  // Same initial window, both strategy representations played forward.
  Rng rng(2024);
  const Window w = sample_window(sys, 2, 2.0, rng);
  const RolloutResult dd = rollout_fne(sol, sys, solo, w.u_ini, w.y_ini);

  Eigen::VectorXd x = match_initial_state(sys, w.u_ini, w.y_ini).x1;
  for (int t = 1; t <= T; ++t) {
    const Eigen::VectorXd u_star = lqr.K[static_cast<std::size_t>(t - 1)] * x +
                                   lqr.k[static_cast<std::size_t>(t - 1)];
    CHECK((dd.traj.u.col(t - 1) - u_star).cwiseAbs().maxCoeff() < 1e-7);
    x = sys.A * x + sys.B * u_star;
  }

  // And the same cost, both by playback and through the value function.
  const Eigen::VectorXd x1 = match_initial_state(sys, w.u_ini, w.y_ini).x1;
  const double v_oracle = 0.5 * x1.dot(lqr.P[0] * x1) + lqr.s[0].dot(x1) + lqr.c[0];
  Eigen::VectorXd U0(8);
  U0 << w.u_ini, w.y_ini;
  const Eigen::VectorXd v_dd = value_function(sol, U0);
  CHECK(v_dd(0) == doctest::Approx(v_oracle).epsilon(1e-8));
  CHECK(dd.costs(0) == doctest::Approx(v_oracle).epsilon(1e-8));
}

TEST_CASE("every equilibrium condition verifies against the stored solution") {
  const Fixture& f = fixture();
  const HankelBlocks blocks = shallow(f, 10);
  const FneSolution sol = solve_finite_fne(blocks, f.pred, oracles::test_game(), 10);
  const ResidualReport rep = verify_solution_residuals(sol, f.pred, f.basis, oracles::test_game());
  CHECK(rep.pass);
  CHECK(rep.max_residual < 1e-8);
  CHECK(!rep.entries.empty());
  REQUIRE(rep.worst() != nullptr);
  CHECK(rep.worst()->residual == doctest::Approx(rep.max_residual));
}

TEST_CASE("value function equals realized playback cost") {
  const Fixture& f = fixture();
  const HankelBlocks blocks = shallow(f, 5);
  const GameSpec game = oracles::test_game();
  const FneSolution sol = solve_finite_fne(blocks, f.pred, game, 5);

  Rng rng(55);
  const Window w = sample_window(oracles::test_system(), 2, 3.0, rng);
  Eigen::VectorXd U0(8);
  U0 << w.u_ini, w.y_ini;
  const Eigen::VectorXd values = value_function(sol, U0);
  const RolloutResult roll = rollout_fne(sol, oracles::test_system(), game, w.u_ini, w.y_ini);
  for (int i = 0; i < 2; ++i)
    CHECK(values(i) == doctest::Approx(roll.costs(i)).epsilon(1e-9));

  // Data-only playback agrees with the oracle playback.
  const RolloutResult dd = rollout_fne(sol, f.pred, game, w.u_ini, w.y_ini);
  CHECK((dd.traj.u - roll.traj.u).cwiseAbs().maxCoeff() < 1e-7);
  CHECK((dd.traj.y - roll.traj.y).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("no sampled unilateral deviation beats the equilibrium") {
  const Fixture& f = fixture();
  const HankelBlocks blocks = shallow(f, 10);
  const GameSpec game = oracles::test_game();
  const FneSolution sol = solve_finite_fne(blocks, f.pred, game, 10);

  Rng rng(91);
  const Window w = sample_window(oracles::test_system(), 2, 2.0, rng);
  const BestResponseReport rep =
      best_response_check(sol, oracles::test_system(), game, w.u_ini, w.y_ini, 40, 7);
  CHECK(rep.trials == 40);
  CHECK(rep.pass);
  CHECK(rep.worst_margin >= -1e-9);
}

TEST_CASE("a numerically singular stage surfaces the stage index and partial progress") {
  // Memoryless plant y = u_1 + u_2: both players see identical influence, and
  // with negligible control weights the stage system loses rank.
  LtiSystem sys;
  sys.A = Eigen::MatrixXd::Zero(1, 1);
  sys.B = Eigen::MatrixXd::Zero(1, 2);
  sys.C = Eigen::MatrixXd::Ones(1, 1);
  sys.D = Eigen::MatrixXd::Ones(1, 2);

  OfflineDataOptions opts;
  opts.length = 120;
  opts.seed = 6;
  const std::vector<Trajectory> data = {generate_offline_data(sys, opts)};
  PartitionOptions popts;
  popts.skip_certification = true;  // the uncontrollable state never certifies
  const HankelBlocks blocks = partition(data, 1, 1, popts);
  const PredictorFamily pred = predictors(blocks);

  GameSpec game;
  game.partition = {1, 1};
  game.p = 1;
  game.T_ini = 1;
  PlayerCost pc;
  pc.Q = Eigen::MatrixXd::Ones(1, 1);
  pc.ref = ReferenceTraj::zero(1);
  pc.R = {Eigen::MatrixXd::Constant(1, 1, 1e-11), Eigen::MatrixXd::Zero(1, 1)};
  pc.delta = 1.0;
  game.players.push_back(pc);
  PlayerCost pc2 = pc;
  pc2.R = {Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Constant(1, 1, 1e-11)};
  game.players.push_back(pc2);

  SolveOptions sopts;
  sopts.rcond_min = 1e-6;
  CHECK_THROWS_AS(solve_finite_fne(blocks, pred, game, 1, sopts), SingularStageMatrix);
  try {
    solve_finite_fne(blocks, pred, game, 1, sopts);
  } catch (const SingularStageMatrix& e) {
    CHECK(e.stage == 1);
    CHECK(e.rcond < 1e-6);
    CHECK(e.partial != nullptr);
    CHECK(e.code() == ErrorCode::singular_stage);
  }
}
