#include "doctest.h"

#include "gamekit/behavior.hpp"
#include "gamekit/errors.hpp"
#include "oracles.hpp"

#include <vector>

using namespace gamekit;

namespace {

std::vector<Trajectory> reference_data(Eigen::Index length = 500, std::uint64_t seed = 1) {
  OfflineDataOptions opts;
  opts.length = length;
  opts.seed = seed;
  return {generate_offline_data(oracles::test_system(), opts)};
}

}  // namespace

TEST_CASE("hankel lays out sliding windows column by column") {
  Eigen::MatrixXd series(1, 5);
  series << 1, 2, 3, 4, 5;
  const Eigen::MatrixXd H = hankel(series, 2);
  REQUIRE(H.rows() == 2);
  REQUIRE(H.cols() == 4);
  Eigen::MatrixXd expect(2, 4);
  expect << 1, 2, 3, 4, 2, 3, 4, 5;
  CHECK((H - expect).cwiseAbs().maxCoeff() == 0.0);

  // Two channels interleave within a block row.
  Eigen::MatrixXd two(2, 3);
  two << 1, 2, 3, 10, 20, 30;
  const Eigen::MatrixXd H2 = hankel(two, 2);
  REQUIRE(H2.rows() == 4);
  REQUIRE(H2.cols() == 2);
  CHECK(H2(0, 0) == 1);
  CHECK(H2(1, 0) == 10);
  CHECK(H2(2, 0) == 2);
  CHECK(H2(3, 1) == 30);

  CHECK_THROWS_AS(hankel(series, 6), InvalidInput);
  CHECK_THROWS_AS(hankel(series, 0), InvalidInput);

  const Eigen::MatrixXd mosaic = hankel_mosaic({series, series}, 2);
  CHECK(mosaic.cols() == 8);
  CHECK((mosaic.leftCols(4) - H).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("the 500-sample excitation certifies the full 52-deep rank condition") {
  const auto data = reference_data();
  const CertificationReport rep = check_excitation(data, 2, 50, 3);
  CHECK(rep.L == 52);
  CHECK(rep.required == 2 * 52 + 3);
  CHECK(rep.rank == 107);
  CHECK(rep.pass);
  CHECK(rep.rejected.empty());
  CHECK(rep.summary().find("107") != std::string::npos);
}

TEST_CASE("short records are excluded by name and shortage fails the certificate") {
  auto data = reference_data(80, 3);
  Trajectory stub;
  stub.u = Eigen::MatrixXd::Zero(2, 5);
  stub.y = Eigen::MatrixXd::Zero(2, 5);
  data.push_back(stub);

  const CertificationReport rep = check_excitation(data, 2, 10, 3);
  CHECK(rep.rejected.size() == 1);
  // 80 usable samples at depth 12 give 69 columns; rank can still certify.
  CHECK(rep.columns == 69);

  const CertificationReport starved = check_excitation({data[1]}, 2, 10, 3);
  CHECK(!starved.pass);
}

TEST_CASE("partition splits past and future rows consistently") {
  const auto data = reference_data(200, 9);
  PartitionOptions opts;
  opts.n_states = 3;
  const HankelBlocks blocks = partition(data, 2, 10, opts);
  CHECK(blocks.dims.L() == 12);
  CHECK(blocks.Up.rows() == 4);
  CHECK(blocks.Yp.rows() == 4);
  CHECK(blocks.Uf.rows() == 20);
  CHECK(blocks.Yf.rows() == 20);
  CHECK(blocks.Up.cols() == 200 - 12 + 1);
  CHECK(blocks.certificate.pass);

  // Every column of the blocks is one contiguous slice of the record.
  const Trajectory& rec = data[0];
  const Eigen::Index col = 37;
  for (int k = 0; k < 2; ++k) {
    CHECK(blocks.Up(2 * k, col) == rec.u(0, col + k));
    CHECK(blocks.Yp(2 * k + 1, col) == rec.y(1, col + k));
  }
  for (int k = 0; k < 10; ++k) {
    CHECK(blocks.Uf(2 * k, col) == rec.u(0, col + 2 + k));
    CHECK(blocks.Yf(2 * k + 1, col) == rec.y(1, col + 2 + k));
  }

  CHECK_THROWS_AS(partition(reference_data(20, 2), 2, 30, opts), CertificationFailed);
}

TEST_CASE("stacked decision layout grows by one input block per stage") {
  HankelDims dims;
  dims.m = 2;
  dims.p = 2;
  dims.T_ini = 2;
  dims.T = 10;
  const BlockLayout l1 = stacked_layout(dims, 1);
  CHECK(l1.total() == 8);
  CHECK(l1.span("u_ini").width == 4);
  CHECK(l1.span("y_ini").offset == 4);
  CHECK(!l1.contains("u_1"));

  const BlockLayout l4 = stacked_layout(dims, 4);
  CHECK(l4.total() == 8 + 3 * 2);
  CHECK(l4.span("u_3").offset == 12);
}

TEST_CASE("predictors forecast fresh trajectories they never saw") {
  const LtiSystem sys = oracles::test_system();
  const auto data = reference_data(300, 21);
  PartitionOptions opts;
  opts.n_states = 3;
  const HankelBlocks blocks = partition(data, 2, 8, opts);
  const PredictorFamily pred = predictors(blocks);
  REQUIRE(pred.G.size() == 8);

  // A fresh rollout from a fresh seed, nothing in common with the dataset.
  OfflineDataOptions fresh;
  fresh.length = 30;
  fresh.seed = 777;
  Eigen::VectorXd x0(3);
  x0 << 0.4, -1.2, 2.0;
  fresh.x1 = x0;
  const Trajectory probe = generate_offline_data(sys, fresh);

  const int start = 12;  // window occupies columns start, start+1
  Eigen::VectorXd window(8);
  for (int k = 0; k < 2; ++k) {
    window.segment(2 * k, 2) = probe.u.col(start + k);
    window.segment(4 + 2 * k, 2) = probe.y.col(start + k);
  }
  for (int t = 1; t <= 8; ++t) {
    Eigen::VectorXd z(8 + 2 * t);
    z.head(8) = window;
    for (int k = 1; k <= t; ++k) z.segment(8 + 2 * (k - 1), 2) = probe.u.col(start + 1 + k);
    const Eigen::VectorXd y_hat = pred.at(t) * z;
    const Eigen::VectorXd y_true = probe.y.col(start + 1 + t);
    CHECK((y_hat - y_true).cwiseAbs().maxCoeff() < 1e-7);
  }

  CHECK_THROWS_AS(pred.at(0), InvalidInput);
  CHECK_THROWS_AS(pred.at(9), InvalidInput);
  CHECK(pred.layout(3).span("u_3").width == 2);
}

TEST_CASE("behavior basis has dimension m*T_ini + n and detects infeasible windows") {
  const LtiSystem sys = oracles::test_system();
  const auto data = reference_data(300, 4);
  const BehaviorBasis basis = behavior_basis(data, 2, 3, lag(sys));
  CHECK(basis.rank() == 2 * 2 + 3);
  // T_ini equals the lag: usable, but flagged.
  CHECK(!basis.warning.empty());

  Rng rng(31);
  const Window w = sample_window(sys, 2, 3.0, rng);
  Eigen::VectorXd stacked(8);
  stacked << w.u_ini, w.y_ini;
  CHECK(window_infeasibility(basis, stacked) < 1e-8);

  Eigen::VectorXd off = stacked;
  off(5) += 1.0;  // corrupt one output
  CHECK(window_infeasibility(basis, off) > 1e-3);

  // Wrong claimed state dimension is a hard error.
  CHECK_THROWS_AS(behavior_basis(data, 2, 4, lag(sys)), RankShortfall);
}

TEST_CASE("newest-first reporting order is the exact block reversal") {
  const Eigen::VectorXi perm = newest_first_window_permutation(2, 2, 2);
  REQUIRE(perm.size() == 8);
  const int expect[8] = {2, 3, 0, 1, 6, 7, 4, 5};
  for (int k = 0; k < 8; ++k) CHECK(perm(k) == expect[k]);

  Eigen::VectorXd w(8);
  for (int i = 0; i < 8; ++i) w(i) = i;
  const Eigen::VectorXd wn = window_to_newest_first(w, 2, 2, 2);
  CHECK(wn(0) == 2.0);
  CHECK(wn(3) == 1.0);
  CHECK(wn(4) == 6.0);

  // Reordering the gain and the window together leaves the action unchanged.
  Rng rng(17);
  Eigen::MatrixXd K(2, 8);
  for (int c = 0; c < 8; ++c)
    for (int r = 0; r < 2; ++r) K(r, c) = rng.normal();
  const Eigen::MatrixXd Kn = window_gain_to_newest_first(K, 2, 2, 2);
  CHECK((Kn * wn - K * w).cwiseAbs().maxCoeff() < 1e-14);
}
