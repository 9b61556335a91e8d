#pragma once

// Independent reference implementations used to validate the library. These
// are written from the textbook recursions on purpose, sharing no code with
// the solvers, so that agreement between the two actually means something.

#include "gamekit/game.hpp"
#include "gamekit/lti.hpp"

#include <Eigen/Dense>

#include <vector>

namespace oracles {

// Shared test fixture: the three-state two-input two-output plant and the
// two-player cost structure used throughout the suite.
inline gamekit::LtiSystem test_system() {
  gamekit::LtiSystem sys;
  sys.A.resize(3, 3);
  sys.A << 0.9, 0.2, -0.6, -0.4, 0.8, 0.2, 0.5, 0.3, 0.1;
  sys.B.resize(3, 2);
  sys.B << 1.0, -0.3, -2.0, 0.5, -0.3, 0.3;
  sys.C.resize(2, 3);
  sys.C << -1.0, 0.3, -0.2, -0.1, 0.5, 1.0;
  sys.D.resize(2, 2);
  sys.D << 0.1, 0.5, -0.4, 0.1;
  return sys;
}

inline gamekit::GameSpec test_game() {
  gamekit::GameSpec spec;
  spec.partition = {1, 1};
  spec.p = 2;
  spec.T_ini = 2;

  gamekit::PlayerCost p1;
  p1.Q.resize(2, 2);
  p1.Q << 2.0, 0.2, 0.2, 2.0;
  Eigen::VectorXd l1(2);
  l1 << -1.0, 0.3;
  p1.ref = gamekit::ReferenceTraj::constant(l1);
  p1.R = {Eigen::MatrixXd::Constant(1, 1, 0.5), Eigen::MatrixXd::Constant(1, 1, -0.1)};
  p1.delta = 0.8;
  spec.players.push_back(p1);

  gamekit::PlayerCost p2;
  p2.Q.resize(2, 2);
  p2.Q << 3.0, 0.5, 0.5, 3.0;
  Eigen::VectorXd l2(2);
  l2 << 0.4, -0.3;
  p2.ref = gamekit::ReferenceTraj::constant(l2);
  p2.R = {Eigen::MatrixXd::Constant(1, 1, -0.3), Eigen::MatrixXd::Constant(1, 1, 1.0)};
  p2.delta = 0.9;
  spec.players.push_back(p2);
  return spec;
}

// Discounted affine output tracker for a single decision maker,
//   min sum_t delta^{t-1} 1/2 [ (y_t - l)' Q (y_t - l) + u_t' R u_t ],
// solved by completing the square. Policies u_t = K_t x_t + k_t, value
// 1/2 x'P_t x + s_t'x + c_t. Everything 0-indexed internally, stage 1 first.
struct AffineLqr {
  std::vector<Eigen::MatrixXd> K;
  std::vector<Eigen::VectorXd> k;
  std::vector<Eigen::MatrixXd> P;
  std::vector<Eigen::VectorXd> s;
  std::vector<double> c;
};

inline AffineLqr solve_affine_lqr(const gamekit::LtiSystem& sys, const Eigen::MatrixXd& Q,
                                  const Eigen::VectorXd& l, const Eigen::MatrixXd& R,
                                  double delta, int T) {
  const Eigen::MatrixXd Qt = sys.C.transpose() * Q * sys.C;
  const Eigen::MatrixXd Nt = sys.C.transpose() * Q * sys.D;
  const Eigen::MatrixXd Rt = R + sys.D.transpose() * Q * sys.D;

  AffineLqr out;
  out.K.resize(static_cast<std::size_t>(T));
  out.k.resize(static_cast<std::size_t>(T));
  out.P.resize(static_cast<std::size_t>(T));
  out.s.resize(static_cast<std::size_t>(T));
  out.c.resize(static_cast<std::size_t>(T));

  Eigen::MatrixXd Pn = Eigen::MatrixXd::Zero(sys.n(), sys.n());
  Eigen::VectorXd sn = Eigen::VectorXd::Zero(sys.n());
  double cn = 0.0;
  for (int t = T; t >= 1; --t) {
    const Eigen::MatrixXd H = Rt + delta * sys.B.transpose() * Pn * sys.B;
    const Eigen::MatrixXd K =
        -H.ldlt().solve(Nt.transpose() + delta * sys.B.transpose() * Pn * sys.A);
    const Eigen::VectorXd k =
        H.ldlt().solve(sys.D.transpose() * Q * l - delta * sys.B.transpose() * sn);

    const Eigen::MatrixXd F = sys.A + sys.B * K;   // closed-loop state map
    const Eigen::MatrixXd G = sys.C + sys.D * K;   // closed-loop output map
    const Eigen::VectorXd e = sys.D * k - l;
    const Eigen::VectorXd bk = sys.B * k;

    Eigen::MatrixXd P = G.transpose() * Q * G + K.transpose() * R * K +
                        delta * F.transpose() * Pn * F;
    P = 0.5 * (P + P.transpose()).eval();
    const Eigen::VectorXd s = G.transpose() * Q * e + K.transpose() * R * k +
                              delta * F.transpose() * (Pn * bk + sn);
    const double c = 0.5 * e.dot(Q * e) + 0.5 * k.dot(R * k) +
                     delta * (0.5 * bk.dot(Pn * bk) + sn.dot(bk) + cn);

    const std::size_t idx = static_cast<std::size_t>(t - 1);
    out.K[idx] = K;
    out.k[idx] = k;
    out.P[idx] = P;
    out.s[idx] = s;
    out.c[idx] = c;
    Pn = P;
    sn = s;
    cn = c;
  }
  return out;
}

// Plays state feedback policies forward and accumulates each player's
// discounted cost by direct summation. No value functions involved.
inline Eigen::VectorXd simulate_policy_cost(const gamekit::LtiSystem& sys,
                                            const gamekit::GameSpec& spec,
                                            const std::vector<Eigen::MatrixXd>& K,
                                            const std::vector<Eigen::VectorXd>& k,
                                            const Eigen::VectorXd& x1, int T) {
  Eigen::VectorXd x = x1;
  Eigen::VectorXd costs = Eigen::VectorXd::Zero(spec.N());
  for (int t = 1; t <= T; ++t) {
    const std::size_t idx = static_cast<std::size_t>(t - 1) % K.size();
    const Eigen::VectorXd u = K[idx] * x + k[idx];
    const Eigen::VectorXd y = sys.C * x + sys.D * u;
    for (int i = 0; i < spec.N(); ++i)
      costs(i) += gamekit::stage_cost(spec, i, y, u, t);
    x = sys.A * x + sys.B * u;
  }
  return costs;
}

}  // namespace oracles
