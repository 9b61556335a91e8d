#include "doctest.h"

#include "gamekit/behavior.hpp"
#include "gamekit/errors.hpp"
#include "gamekit/fne_known.hpp"
#include "gamekit/receding.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace gamekit;

namespace {

struct Fixture {
  std::vector<Trajectory> data;
  HankelBlocks blocks;
  PredictorFamily pred;
  BehaviorBasis basis;
  Window window;
};

const Fixture& fixture() {
  static const Fixture fx = [] {
    Fixture f;
    OfflineDataOptions opts;
    opts.length = 500;
    opts.seed = 1;
    f.data = {generate_offline_data(oracles::test_system(), opts)};
    PartitionOptions popts;
    popts.n_states = 3;
    f.blocks = partition(f.data, 2, 30, popts);
    f.pred = predictors(f.blocks);
    f.basis = behavior_basis(f.data, 2, 3, 2);
    Rng rng(11);
    f.window = sample_window(oracles::test_system(), 2, 2.0, rng);
    return f;
  }();
  return fx;
}

}  // namespace

TEST_CASE("first_stage_gain extracts exactly the sweep entries") {
  const Fixture& f = fixture();
  const GameSpec game = oracles::test_game();

  const GainSet g7 = first_stage_gain(f.blocks, f.pred, game, 7);
  CHECK(g7.K.size() == 2);
  CHECK(g7.K[0].rows() == 1);
  CHECK(g7.K[0].cols() == 8);
  CHECK(g7.horizon[0] == 7);

  SweepOptions opts;
  const SweepResult sweep = sweep_horizons(f.blocks, f.pred, game, 5, 9, opts);
  REQUIRE(sweep.entries.size() == 5);
  CHECK(sweep.entries[2].T == 7);
  for (int i = 0; i < 2; ++i) {
    CHECK((sweep.entries[2].gains.K[i] - g7.K[i]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((sweep.entries[2].gains.L[i] - g7.L[i]).cwiseAbs().maxCoeff() == 0.0);
  }
  // Last entry has no neighbor to difference against.
  CHECK(std::isnan(sweep.entries.back().gain_diff));
  CHECK(!std::isnan(sweep.entries.front().gain_diff));
}

TEST_CASE("heterogeneous lookaheads combine per-player stage-1 gains") {
  const Fixture& f = fixture();
  const GameSpec game = oracles::test_game();
  const GainSet mixed = first_stage_gain(f.blocks, f.pred, game, std::vector<int>{4, 9});
  const GainSet g4 = first_stage_gain(f.blocks, f.pred, game, 4);
  const GainSet g9 = first_stage_gain(f.blocks, f.pred, game, 9);
  CHECK((mixed.K[0] - g4.K[0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((mixed.K[1] - g9.K[1]).cwiseAbs().maxCoeff() == 0.0);
  CHECK(mixed.horizon[0] == 4);
  CHECK(mixed.horizon[1] == 9);
}

TEST_CASE("gains settle within 0.01 at horizon eleven on the reference game") {
  const Fixture& f = fixture();
  SweepOptions opts;
  opts.eps = 0.01;
  const SweepResult sweep = sweep_horizons(f.blocks, f.pred, oracles::test_game(), 1, 30, opts);
  CHECK(sweep.converged);
  // First max-elementwise change below eps, verified against an independent
  // implementation. The change pops back above eps once around 13 before
  // settling for good; first crossing is the documented semantics.
  CHECK(sweep.T_converged == 11);
}

TEST_CASE("parallel sweeps produce bitwise the same gains as serial ones") {
  const Fixture& f = fixture();
  SweepOptions serial;
  serial.jobs = 1;
  SweepOptions parallel;
  parallel.jobs = 4;
  const SweepResult a = sweep_horizons(f.blocks, f.pred, oracles::test_game(), 1, 12, serial);
  const SweepResult b = sweep_horizons(f.blocks, f.pred, oracles::test_game(), 1, 12, parallel);
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t k = 0; k < a.entries.size(); ++k)
    for (int i = 0; i < 2; ++i) {
      CHECK((a.entries[k].gains.K[i] - b.entries[k].gains.K[i]).cwiseAbs().maxCoeff() == 0.0);
      CHECK((a.entries[k].gains.L[i] - b.entries[k].gains.L[i]).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("oracle and data-closure receding playback agree") {
  const Fixture& f = fixture();
  const GameSpec game = oracles::test_game();
  const GainSet gains = first_stage_gain(f.blocks, f.pred, game, 10);

  RecedingOptions opts;
  opts.M = 50;
  opts.drift_monitor = &f.basis;
  const RecedingRun oracle =
      run_receding_horizon(gains, oracles::test_system(), game, f.window.u_ini, f.window.y_ini, opts);
  const RecedingRun data =
      run_receding_horizon(gains, f.pred, game, f.window.u_ini, f.window.y_ini, opts);

  CHECK(oracle.traj.length() == 50);
  CHECK((oracle.traj.u - data.traj.u).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((oracle.traj.y - data.traj.y).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((oracle.costs - data.costs).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(oracle.max_drift < 1e-6);
  CHECK(data.max_drift < 1e-6);
}

TEST_CASE("the tail bound covers what a longer playback adds") {
  const Fixture& f = fixture();
  const GameSpec game = oracles::test_game();
  const GainSet gains = first_stage_gain(f.blocks, f.pred, game, 10);

  RecedingOptions shorter;
  shorter.M = 300;
  RecedingOptions longer;
  longer.M = 900;
  const RecedingRun a =
      run_receding_horizon(gains, oracles::test_system(), game, f.window.u_ini, f.window.y_ini, shorter);
  const RecedingRun b =
      run_receding_horizon(gains, oracles::test_system(), game, f.window.u_ini, f.window.y_ini, longer);
  for (int i = 0; i < 2; ++i) {
    CHECK(a.tail_bound(i) >= 0.0);
    CHECK(std::abs(b.costs(i) - a.costs(i)) <= 2.0 * a.tail_bound(i) + 1e-12);
  }
}

TEST_CASE("explosive feedback is reported as divergence, not as numbers") {
  const Fixture& f = fixture();
  const GameSpec game = oracles::test_game();
  GainSet wild = first_stage_gain(f.blocks, f.pred, game, 5);
  for (int i = 0; i < 2; ++i) {
    wild.K[i].setZero();
    wild.K[i](0, 6) = 50.0;  // huge positive feedback on the newest outputs
    wild.K[i](0, 7) = 50.0;
    wild.L[i].setZero();
  }
  RecedingOptions opts;
  opts.M = 200;
  opts.divergence_limit = 1e6;
  CHECK_THROWS_AS(
      run_receding_horizon(wild, oracles::test_system(), game, f.window.u_ini, f.window.y_ini, opts),
      Diverged);
}

TEST_CASE("the convergence table carries gains, costs, gaps and the settling point") {
  const Fixture& f = fixture();
  const GameSpec game = oracles::test_game();
  SweepOptions sopts;
  const SweepResult sweep = sweep_horizons(f.blocks, f.pred, game, 1, 10, sopts);

  std::vector<Eigen::VectorXd> costs;
  RecedingOptions ropts;
  ropts.M = 200;
  for (const auto& entry : sweep.entries)
    costs.push_back(run_receding_horizon(entry.gains, oracles::test_system(), game,
                                         f.window.u_ini, f.window.y_ini, ropts)
                        .costs);

  const StationaryEquilibrium inf = infinite_horizon_known(oracles::test_system(), game);
  const Eigen::VectorXd reference =
      inf.costs(match_initial_state(oracles::test_system(), f.window.u_ini, f.window.y_ini).x1);

  const ConvergenceReport rep = convergence_report(sweep, costs, reference);
  REQUIRE(rep.rows.size() == sweep.entries.size());
  CHECK(rep.rows.front().costs.size() == 2);
  CHECK(rep.rows.front().gap.size() == 2);
  // Receding play under longer lookaheads lands nearer the stationary cost.
  CHECK(rep.rows.back().gap.cwiseAbs().maxCoeff() <
        rep.rows.front().gap.cwiseAbs().maxCoeff());
  const std::string table = rep.table();
  CHECK(table.find("T") != std::string::npos);
  CHECK(!table.empty());
}
