#include "gamekit/fne_known.hpp"

#include "stage_core.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gamekit {

namespace {

Eigen::MatrixXd player_rows(const Eigen::MatrixXd& M, const std::vector<int>& partition, int i) {
  Eigen::Index offset = 0;
  for (int j = 0; j < i; ++j) offset += partition[static_cast<std::size_t>(j)];
  return M.middleRows(offset, partition[static_cast<std::size_t>(i)]);
}

Eigen::VectorXd player_segment(const Eigen::VectorXd& v, const std::vector<int>& partition, int i) {
  Eigen::Index offset = 0;
  for (int j = 0; j < i; ++j) offset += partition[static_cast<std::size_t>(j)];
  return v.segment(offset, partition[static_cast<std::size_t>(i)]);
}

double spectral_radius(const Eigen::MatrixXd& M) {
  return Eigen::EigenSolver<Eigen::MatrixXd>(M, false).eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

Eigen::MatrixXd KnownFneSolution::player_gain(int t, int i) const {
  if (t < 1 || t > T) throw InvalidInput("KnownFneSolution: stage out of range");
  if (i < 0 || i >= N()) throw InvalidInput("KnownFneSolution: player out of range");
  return player_rows(K[static_cast<std::size_t>(t) - 1], partition, i);
}

Eigen::VectorXd KnownFneSolution::player_offset(int t, int i) const {
  if (t < 1 || t > T) throw InvalidInput("KnownFneSolution: stage out of range");
  if (i < 0 || i >= N()) throw InvalidInput("KnownFneSolution: player out of range");
  return player_segment(L[static_cast<std::size_t>(t) - 1], partition, i);
}

KnownFneSolution solve_finite_fne_known(const LtiSystem& sys, const GameSpec& spec, int T,
                                        const SolveOptions& opts) {
  sys.validate();
  spec.validate();
  if (sys.m() != spec.m() || sys.p() != spec.p)
    throw InvalidInput("solve_finite_fne_known: system channel counts differ from the game spec");
  if (T < 1) throw InvalidInput("solve_finite_fne_known: horizon must be positive");
  for (int i = 0; i < spec.N(); ++i) {
    const auto& ref = spec.players[static_cast<std::size_t>(i)].ref;
    if (ref.bounded() && ref.stages() < T)
      throw InvalidInput("solve_finite_fne_known: player " + std::to_string(i + 1) +
                         " reference covers fewer stages than the horizon");
  }

  const Eigen::Index n = sys.n();
  const Eigen::Index m = sys.m();
  Eigen::MatrixXd Gamma(sys.p(), n + m);  // y = [C D] col(x, u)
  Gamma.leftCols(n) = sys.C;
  Gamma.rightCols(m) = sys.D;
  Eigen::MatrixXd Phi(n, n + m);  // x+ = [A B] col(x, u)
  Phi.leftCols(n) = sys.A;
  Phi.rightCols(m) = sys.B;

  KnownFneSolution sol;
  sol.T = T;
  sol.n = n;
  sol.partition = spec.partition;
  sol.K.resize(static_cast<std::size_t>(T));
  sol.L.resize(static_cast<std::size_t>(T));
  sol.P.resize(static_cast<std::size_t>(T));
  sol.S.resize(static_cast<std::size_t>(T));
  sol.w.resize(static_cast<std::size_t>(T));
  sol.stage_rcond.resize(static_cast<std::size_t>(T), 0.0);

  std::vector<Eigen::MatrixXd> P_next;
  std::vector<Eigen::VectorXd> S_next;
  std::vector<double> w_next;

  for (int t = T; t >= 1; --t) {
    std::vector<Eigen::VectorXd> refs;
    refs.reserve(spec.players.size());
    for (const auto& pc : spec.players) refs.push_back(pc.ref.at(t));

    const StageSystem st = detail::assemble_stage_core(Gamma, &Phi, P_next, S_next, refs, spec);

    Eigen::MatrixXd rhs(m, n + 1);
    rhs.leftCols(n) = st.gtilde;
    rhs.col(n) = st.gtilde_prime;

    SquareSolve solved;
    try {
      solved = solve_square(st.Htilde, rhs, opts.rcond_min);
    } catch (const SingularMatrix& e) {
      std::ostringstream msg;
      msg << "solve_finite_fne_known: stage matrix singular at stage " << t << " (rcond " << e.rcond
          << ")";
      throw SingularStageMatrix(msg.str(), t, e.rcond);
    }

    sol.K[static_cast<std::size_t>(t) - 1] = solved.X.leftCols(n);
    sol.L[static_cast<std::size_t>(t) - 1] = solved.X.col(n);
    sol.stage_rcond[static_cast<std::size_t>(t) - 1] = solved.rcond;

    detail::StageValues updated = detail::update_values_core(
        Gamma, &Phi, sol.K[static_cast<std::size_t>(t) - 1], sol.L[static_cast<std::size_t>(t) - 1],
        P_next, S_next, w_next, refs, spec);
    P_next = updated.P;
    S_next = updated.S;
    w_next = updated.w;
    sol.P[static_cast<std::size_t>(t) - 1] = std::move(updated.P);
    sol.S[static_cast<std::size_t>(t) - 1] = std::move(updated.S);
    sol.w[static_cast<std::size_t>(t) - 1] = std::move(updated.w);
  }
  return sol;
}

Eigen::VectorXd value_function_known(const KnownFneSolution& sol, const Eigen::VectorXd& x1) {
  if (x1.size() != sol.n) throw InvalidInput("value_function_known: state has wrong dimension");
  Eigen::VectorXd out(sol.N());
  for (int i = 0; i < sol.N(); ++i) {
    const auto& P1 = sol.P[0][static_cast<std::size_t>(i)];
    const auto& S1 = sol.S[0][static_cast<std::size_t>(i)];
    out(i) = 0.5 * x1.dot(P1 * x1) + S1.dot(x1) + sol.w[0][static_cast<std::size_t>(i)];
  }
  return out;
}

double CrossCheckReport::max() const {
  return std::max({max_dev_inputs, max_dev_offsets, max_dev_window});
}

CrossCheckReport cross_check_known(const FneSolution& dd, const KnownFneSolution& kn,
                                      const LtiSystem& sys, const BehaviorBasis& basis,
                                      double tol) {
  if (dd.T != kn.T) throw InvalidInput("cross_check_known: horizons differ");
  if (sys.n() != kn.n) throw InvalidInput("cross_check_known: system and solution disagree on n");
  const Eigen::Index ini = static_cast<Eigen::Index>(dd.dims.T_ini) * (dd.dims.m + dd.dims.p);
  if (basis.basis.rows() != ini) throw InvalidInput("cross_check_known: basis window size mismatch");

  CrossCheckReport report;
  report.tol = tol;

  // Match each basis column once; every stage reuses the same states.
  const Eigen::Index u_len = static_cast<Eigen::Index>(dd.dims.T_ini) * dd.dims.m;
  Eigen::MatrixXd X1(sys.n(), basis.basis.cols());
  for (Eigen::Index c = 0; c < basis.basis.cols(); ++c) {
    const Eigen::VectorXd col = basis.basis.col(c);
    X1.col(c) = match_initial_state(sys, col.head(u_len), col.tail(col.size() - u_len)).x1;
  }

  Eigen::MatrixXd A_pow = Eigen::MatrixXd::Identity(sys.n(), sys.n());  // A^{t-1}
  for (int t = 1; t <= dd.T; ++t) {
    const Eigen::MatrixXd& Kd = dd.K[static_cast<std::size_t>(t) - 1];
    const Eigen::MatrixXd& Ks = kn.K[static_cast<std::size_t>(t) - 1];
    const BlockLayout layout = dd.layout(t);

    for (int k = 1; k < t; ++k) {
      const auto uk = layout.span("u_" + std::to_string(k));
      const Eigen::MatrixXd image = Ks * matrix_power(sys.A, t - 1 - k) * sys.B;
      report.max_dev_inputs =
          std::max(report.max_dev_inputs,
                   (Kd.middleCols(uk.offset, uk.width) - image).cwiseAbs().maxCoeff());
    }

    report.max_dev_offsets =
        std::max(report.max_dev_offsets,
                 (dd.L[static_cast<std::size_t>(t) - 1] - kn.L[static_cast<std::size_t>(t) - 1])
                     .cwiseAbs()
                     .maxCoeff());

    const Eigen::MatrixXd lhs = Kd.leftCols(ini) * basis.basis;
    const Eigen::MatrixXd rhs = Ks * A_pow * X1;
    report.max_dev_window = std::max(report.max_dev_window, (lhs - rhs).cwiseAbs().maxCoeff());

    A_pow = A_pow * sys.A;
  }

  report.pass = report.max() <= tol;
  return report;
}

Eigen::MatrixXd StationaryEquilibrium::player_gain(int i) const {
  return player_rows(K, partition, i);
}

Eigen::VectorXd StationaryEquilibrium::player_offset(int i) const {
  return player_segment(L, partition, i);
}

Eigen::VectorXd StationaryEquilibrium::costs(const Eigen::VectorXd& x1) const {
  if (x1.size() != K.cols()) throw InvalidInput("StationaryEquilibrium: state has wrong dimension");
  const int N = static_cast<int>(partition.size());
  Eigen::VectorXd out(N);
  if (closed_form) {
    for (int i = 0; i < N; ++i)
      out(i) = 0.5 * x1.dot(P[static_cast<std::size_t>(i)] * x1) +
               s[static_cast<std::size_t>(i)].dot(x1) + v[static_cast<std::size_t>(i)];
    return out;
  }
  // Fallback: play the stationary strategies out until the discounted tail is
  // negligible relative to what has accumulated.
  out.setZero();
  Eigen::VectorXd x = x1;
  constexpr int kMaxSteps = 200000;
  for (int t = 1; t <= kMaxSteps; ++t) {
    const Eigen::VectorXd u = K * x + L;
    const Eigen::VectorXd y = sys.C * x + sys.D * u;
    double max_rel_increment = 0.0;
    for (int i = 0; i < N; ++i) {
      const double inc = stage_cost(spec, i, y, u, t);
      out(i) += inc;
      max_rel_increment = std::max(max_rel_increment, std::abs(inc) / std::max(1.0, std::abs(out(i))));
    }
    if (t > 100 && max_rel_increment < 1e-15) break;
    x = sys.A * x + sys.B * u;
  }
  return out;
}

StationaryEquilibrium infinite_horizon_known(const LtiSystem& sys, const GameSpec& spec, double eps,
                                             int T_max) {
  sys.validate();
  spec.validate();
  if (sys.m() != spec.m() || sys.p() != spec.p)
    throw InvalidInput("infinite_horizon_known: system channel counts differ from the game spec");
  if (eps <= 0.0) throw InvalidInput("infinite_horizon_known: eps must be positive");
  if (T_max < 2) throw InvalidInput("infinite_horizon_known: T_max must be at least 2");

  StationaryEquilibrium eq;
  eq.partition = spec.partition;
  eq.sys = sys;
  eq.spec = spec;

  std::vector<Eigen::VectorXd> refs;
  bool nonzero_ref = false;
  for (int i = 0; i < spec.N(); ++i) {
    const auto& ref = spec.players[static_cast<std::size_t>(i)].ref;
    if (ref.bounded())
      throw InvalidInput("infinite_horizon_known: player " + std::to_string(i + 1) +
                         " has a per-stage reference; the stationary limit needs a "
                         "stage-invariant one");
    refs.push_back(ref.at(1));
    if (refs.back().cwiseAbs().maxCoeff() > 0.0) nonzero_ref = true;
  }
  if (nonzero_ref)
    eq.warning = "nonzero constant reference: gains converge as usual but the guarantees are "
                 "stated for regulation to zero";

  const Eigen::Index n = sys.n();
  const Eigen::Index m = sys.m();
  Eigen::MatrixXd Gamma(sys.p(), n + m);
  Gamma.leftCols(n) = sys.C;
  Gamma.rightCols(m) = sys.D;
  Eigen::MatrixXd Phi(n, n + m);
  Phi.leftCols(n) = sys.A;
  Phi.rightCols(m) = sys.B;

  // Each extra backward step extends the horizon by one, so the iterates are
  // exactly the first-stage gains of growing finite games.
  std::vector<Eigen::MatrixXd> P_next;
  std::vector<Eigen::VectorXd> S_next;
  std::vector<double> w_next;
  Eigen::MatrixXd K_prev;
  Eigen::VectorXd L_prev;
  bool converged = false;

  for (int it = 1; it <= T_max; ++it) {
    const StageSystem st = detail::assemble_stage_core(Gamma, &Phi, P_next, S_next, refs, spec);
    Eigen::MatrixXd rhs(m, n + 1);
    rhs.leftCols(n) = st.gtilde;
    rhs.col(n) = st.gtilde_prime;
    SquareSolve solved;
    try {
      solved = solve_square(st.Htilde, rhs);
    } catch (const SingularMatrix& e) {
      throw SingularStageMatrix("infinite_horizon_known: stage matrix singular at horizon " +
                                    std::to_string(it),
                                it, e.rcond);
    }
    const Eigen::MatrixXd K_it = solved.X.leftCols(n);
    const Eigen::VectorXd L_it = solved.X.col(n);

    detail::StageValues updated =
        detail::update_values_core(Gamma, &Phi, K_it, L_it, P_next, S_next, w_next, refs, spec);
    P_next = std::move(updated.P);
    S_next = std::move(updated.S);
    w_next = std::move(updated.w);

    if (it > 1) {
      const double change = std::max((K_it - K_prev).cwiseAbs().maxCoeff(),
                                     (L_it - L_prev).cwiseAbs().maxCoeff());
      if (change <= eps) {
        eq.K = K_it;
        eq.L = L_it;
        eq.iterations = it;
        eq.final_change = change;
        converged = true;
        break;
      }
    }
    K_prev = K_it;
    L_prev = L_it;
  }
  if (!converged)
    throw NoConvergence("infinite_horizon_known: gains did not settle within " +
                            std::to_string(T_max) + " backward steps",
                        T_max);

  // Closed-form evaluator on the stationary closed loop, when the discounted
  // loop contracts.
  const Eigen::MatrixXd F = sys.A + sys.B * eq.K;
  const Eigen::VectorXd b = sys.B * eq.L;
  const Eigen::MatrixXd Y = sys.C + sys.D * eq.K;   // closed-loop output map
  const Eigen::VectorXd y0 = sys.D * eq.L;          // constant output offset
  eq.spectral_radius = spectral_radius(F);

  eq.closed_form = true;
  std::string block_reason;
  for (int i = 0; i < spec.N() && eq.closed_form; ++i) {
    const double di = spec.players[static_cast<std::size_t>(i)].delta;
    if (std::sqrt(di) * eq.spectral_radius >= 1.0) {
      eq.closed_form = false;
      block_reason = "discounted closed loop does not contract for player " + std::to_string(i + 1);
    }
  }

  if (eq.closed_form) {
    eq.P.resize(spec.players.size());
    eq.s.resize(spec.players.size());
    eq.v.resize(spec.players.size());
    for (int i = 0; i < spec.N(); ++i) {
      const PlayerCost& cost = spec.players[static_cast<std::size_t>(i)];
      const double di = cost.delta;
      const Eigen::VectorXd e0 = y0 - refs[static_cast<std::size_t>(i)];

      Eigen::MatrixXd M = Y.transpose() * cost.Q * Y;
      Eigen::VectorXd q = Y.transpose() * (cost.Q * e0);
      double c = e0.dot(cost.Q * e0);
      for (int j = 0; j < spec.N(); ++j) {
        const Eigen::MatrixXd Kj = player_rows(eq.K, spec.partition, j);
        const Eigen::VectorXd Lj = player_segment(eq.L, spec.partition, j);
        const Eigen::MatrixXd& Rij = cost.R[static_cast<std::size_t>(j)];
        M += Kj.transpose() * Rij * Kj;
        q += Kj.transpose() * (Rij * Lj);
        c += Lj.dot(Rij * Lj);
      }

      // P = M + delta F' P F, vectorized into (I - delta F'(x)F') vec(P) = vec(M).
      const Eigen::Index n2 = n * n;
      Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(n2, n2);
      const Eigen::MatrixXd Ft = F.transpose();
      for (Eigen::Index bc = 0; bc < n; ++bc)
        for (Eigen::Index br = 0; br < n; ++br)
          lhs.block(br * n, bc * n, n, n) -= di * Ft(br, bc) * Ft;
      Eigen::VectorXd vecM(n2);
      for (Eigen::Index col = 0; col < n; ++col) vecM.segment(col * n, n) = M.col(col);
      const Eigen::VectorXd vecP = solve_square(lhs, vecM).X;
      Eigen::MatrixXd Pi(n, n);
      for (Eigen::Index col = 0; col < n; ++col) Pi.col(col) = vecP.segment(col * n, n);
      Pi = 0.5 * (Pi + Pi.transpose());

      const Eigen::VectorXd si =
          solve_square(Eigen::MatrixXd::Identity(n, n) - di * Ft, Eigen::MatrixXd(q + di * Ft * (Pi * b))).X;
      const double num = 0.5 * c + di * (0.5 * b.dot(Pi * b) + si.dot(b));
      double vi = 0.0;
      if (di < 1.0) {
        vi = num / (1.0 - di);
      } else if (std::abs(num) > 1e-12 * (1.0 + std::abs(c))) {
        eq.closed_form = false;
        block_reason = "undiscounted affine tail does not vanish for player " + std::to_string(i + 1);
        break;
      }
      eq.P[static_cast<std::size_t>(i)] = Pi;
      eq.s[static_cast<std::size_t>(i)] = si;
      eq.v[static_cast<std::size_t>(i)] = vi;
    }
  }

  if (!eq.closed_form) {
    eq.P.clear();
    eq.s.clear();
    eq.v.clear();
    if (!eq.warning.empty()) eq.warning += "; ";
    eq.warning += block_reason + "; cost queries fall back to simulation";
  }
  return eq;
}

}  // namespace gamekit
