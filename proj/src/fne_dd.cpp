#include "gamekit/fne_dd.hpp"

#include "gamekit/rng.hpp"
#include "stage_core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace gamekit {

namespace detail {

StageSystem assemble_stage_core(const Eigen::MatrixXd& Gamma, const Eigen::MatrixXd* Phi,
                                const std::vector<Eigen::MatrixXd>& P_next,
                                const std::vector<Eigen::VectorXd>& S_next,
                                const std::vector<Eigen::VectorXd>& refs, const GameSpec& spec) {
  const Eigen::Index m = spec.m();
  const Eigen::Index z = Gamma.cols() - m;
  const bool terminal = P_next.empty();

  StageSystem st;
  st.Htilde.setZero(m, m);
  st.gtilde.setZero(m, z);
  st.gtilde_prime.setZero(m);

  for (int i = 0; i < spec.N(); ++i) {
    const auto span = spec.player_span(i);
    const PlayerCost& cost = spec.players[static_cast<std::size_t>(i)];
    const double di = cost.delta;

    // Rows of player i's stationarity condition, the derivative of the stage
    // value with respect to the player's own input block.
    const Eigen::MatrixXd GQ = Gamma.middleCols(z + span.offset, span.width).transpose() * cost.Q;
    const Eigen::MatrixXd GQG = GQ * Gamma;

    Eigen::MatrixXd rowsP = Eigen::MatrixXd::Zero(span.width, Gamma.cols());
    Eigen::VectorXd rowsS = Eigen::VectorXd::Zero(span.width);
    if (!terminal) {
      const auto& Pn = P_next[static_cast<std::size_t>(i)];
      const auto& Sn = S_next[static_cast<std::size_t>(i)];
      if (Phi) {
        const Eigen::MatrixXd PhiU = Phi->middleCols(z + span.offset, span.width);
        rowsP = PhiU.transpose() * Pn * (*Phi);
        rowsS = PhiU.transpose() * Sn;
      } else {
        rowsP = Pn.middleRows(z + span.offset, span.width);
        rowsS = Sn.segment(z + span.offset, span.width);
      }
    }

    st.Htilde.middleRows(span.offset, span.width) = GQG.rightCols(m) + di * rowsP.rightCols(m);
    st.Htilde.block(span.offset, span.offset, span.width, span.width) +=
        cost.R[static_cast<std::size_t>(i)];
    st.gtilde.middleRows(span.offset, span.width) = -(GQG.leftCols(z) + di * rowsP.leftCols(z));
    st.gtilde_prime.segment(span.offset, span.width) =
        GQ * refs[static_cast<std::size_t>(i)] - di * rowsS;
  }
  return st;
}

StageValues update_values_core(const Eigen::MatrixXd& Gamma, const Eigen::MatrixXd* Phi,
                               const Eigen::MatrixXd& K_t, const Eigen::VectorXd& L_t,
                               const std::vector<Eigen::MatrixXd>& P_next,
                               const std::vector<Eigen::VectorXd>& S_next,
                               const std::vector<double>& w_next,
                               const std::vector<Eigen::VectorXd>& refs, const GameSpec& spec) {
  const Eigen::Index m = spec.m();
  const Eigen::Index z = Gamma.cols() - m;
  const bool terminal = P_next.empty();

  // Closed-loop composition col(z, u) = bK z + bL.
  Eigen::MatrixXd bK(z + m, z);
  bK.topRows(z) = Eigen::MatrixXd::Identity(z, z);
  bK.bottomRows(m) = K_t;
  Eigen::VectorXd bL = Eigen::VectorXd::Zero(z + m);
  bL.tail(m) = L_t;

  const Eigen::MatrixXd W = Gamma * bK;  // closed-loop output map
  const Eigen::VectorXd y_off = Gamma * bL;

  Eigen::MatrixXd AK;
  Eigen::VectorXd aL;
  if (Phi) {
    AK = (*Phi) * bK;
    aL = (*Phi) * bL;
  } else {
    AK = bK;
    aL = bL;
  }

  StageValues out;
  out.P.reserve(spec.players.size());
  out.S.reserve(spec.players.size());
  out.w.reserve(spec.players.size());

  for (int i = 0; i < spec.N(); ++i) {
    const PlayerCost& cost = spec.players[static_cast<std::size_t>(i)];
    const double di = cost.delta;
    const Eigen::VectorXd e = y_off - refs[static_cast<std::size_t>(i)];

    Eigen::MatrixXd Pi = W.transpose() * cost.Q * W;
    Eigen::VectorXd Si = W.transpose() * (cost.Q * e);
    double wi = 0.5 * e.dot(cost.Q * e);

    for (int j = 0; j < spec.N(); ++j) {
      const auto span_j = spec.player_span(j);
      const Eigen::MatrixXd Kj = K_t.middleRows(span_j.offset, span_j.width);
      const Eigen::VectorXd Lj = L_t.segment(span_j.offset, span_j.width);
      const Eigen::MatrixXd& Rij = cost.R[static_cast<std::size_t>(j)];
      Pi += Kj.transpose() * Rij * Kj;
      Si += Kj.transpose() * (Rij * Lj);
      wi += 0.5 * Lj.dot(Rij * Lj);
    }

    if (!terminal) {
      const auto& Pn = P_next[static_cast<std::size_t>(i)];
      const auto& Sn = S_next[static_cast<std::size_t>(i)];
      Pi += di * AK.transpose() * Pn * AK;
      Si += di * AK.transpose() * (Pn * aL + Sn);
      wi += di * (0.5 * aL.dot(Pn * aL) + Sn.dot(aL) + w_next[static_cast<std::size_t>(i)]);
    }

    out.P.push_back(0.5 * (Pi + Pi.transpose()));
    out.S.push_back(std::move(Si));
    out.w.push_back(wi);
  }
  return out;
}

}  // namespace detail

BlockLayout FneSolution::layout(int t) const { return stacked_layout(dims, t); }

Eigen::MatrixXd FneSolution::player_gain(int t, int i) const {
  if (t < 1 || t > T) throw InvalidInput("FneSolution: stage out of range");
  if (i < 0 || i >= N()) throw InvalidInput("FneSolution: player out of range");
  Eigen::Index offset = 0;
  for (int j = 0; j < i; ++j) offset += partition[static_cast<std::size_t>(j)];
  return K[static_cast<std::size_t>(t) - 1].middleRows(offset, partition[static_cast<std::size_t>(i)]);
}

Eigen::VectorXd FneSolution::player_offset(int t, int i) const {
  if (t < 1 || t > T) throw InvalidInput("FneSolution: stage out of range");
  if (i < 0 || i >= N()) throw InvalidInput("FneSolution: player out of range");
  Eigen::Index offset = 0;
  for (int j = 0; j < i; ++j) offset += partition[static_cast<std::size_t>(j)];
  return L[static_cast<std::size_t>(t) - 1].segment(offset, partition[static_cast<std::size_t>(i)]);
}

StageSystem assemble_stage(const Eigen::MatrixXd& G_t, const std::vector<Eigen::MatrixXd>& P_next,
                           const std::vector<Eigen::VectorXd>& S_next, const GameSpec& spec, int t) {
  spec.validate();
  if (t < 1) throw InvalidInput("assemble_stage: stage must be positive");
  if (G_t.rows() != spec.p) throw InvalidInput("assemble_stage: predictor row count differs from p");
  if (!P_next.empty() && (static_cast<int>(P_next.size()) != spec.N() ||
                          static_cast<int>(S_next.size()) != spec.N()))
    throw InvalidInput("assemble_stage: need one P/S block per player (or none for the terminal stage)");
  std::vector<Eigen::VectorXd> refs;
  refs.reserve(spec.players.size());
  for (const auto& pc : spec.players) refs.push_back(pc.ref.at(t));
  return detail::assemble_stage_core(G_t, nullptr, P_next, S_next, refs, spec);
}

FneSolution solve_finite_fne(const HankelBlocks& blocks, const PredictorFamily& pred,
                             const GameSpec& spec, int T, const SolveOptions& opts) {
  spec.validate();
  const HankelDims& d = blocks.dims;
  if (d.m != spec.m() || d.p != spec.p)
    throw InvalidInput("solve_finite_fne: data channel counts differ from the game spec");
  if (d.T_ini != spec.T_ini)
    throw InvalidInput("solve_finite_fne: data window length differs from the game spec");
  if (T < 1) throw InvalidInput("solve_finite_fne: horizon must be positive");
  if (static_cast<std::size_t>(T) > pred.G.size())
    throw InvalidInput("solve_finite_fne: horizon exceeds the predictor family");
  for (int i = 0; i < spec.N(); ++i) {
    const auto& ref = spec.players[static_cast<std::size_t>(i)].ref;
    if (ref.bounded() && ref.stages() < T)
      throw InvalidInput("solve_finite_fne: player " + std::to_string(i + 1) +
                         " reference covers fewer stages than the horizon");
  }

  FneSolution sol;
  sol.dims = d;
  sol.partition = spec.partition;
  sol.T = T;
  sol.K.resize(static_cast<std::size_t>(T));
  sol.L.resize(static_cast<std::size_t>(T));
  sol.stage_rcond.resize(static_cast<std::size_t>(T), 0.0);
  sol.full_values = opts.keep_stage_values;
  if (opts.keep_stage_values) {
    sol.P.resize(static_cast<std::size_t>(T));
    sol.S.resize(static_cast<std::size_t>(T));
    sol.w.resize(static_cast<std::size_t>(T));
  } else {
    sol.P.resize(1);
    sol.S.resize(1);
    sol.w.resize(1);
  }

  std::vector<Eigen::MatrixXd> P_next;  // empty means terminal
  std::vector<Eigen::VectorXd> S_next;
  std::vector<double> w_next;

  const Eigen::Index m = spec.m();
  for (int t = T; t >= 1; --t) {
    const Eigen::MatrixXd& G = pred.at(t);
    const Eigen::Index z = G.cols() - m;

    std::vector<Eigen::VectorXd> refs;
    refs.reserve(spec.players.size());
    for (const auto& pc : spec.players) refs.push_back(pc.ref.at(t));

    const StageSystem st = detail::assemble_stage_core(G, nullptr, P_next, S_next, refs, spec);

    Eigen::MatrixXd rhs(m, z + 1);
    rhs.leftCols(z) = st.gtilde;
    rhs.col(z) = st.gtilde_prime;

    SquareSolve solved;
    try {
      solved = solve_square(st.Htilde, rhs, opts.rcond_min);
    } catch (const SingularMatrix& e) {
      // Hand back the stages that did solve for diagnosis.
      auto partial = std::make_shared<FneSolution>(sol);
      std::ostringstream msg;
      msg << "solve_finite_fne: stage matrix singular at stage " << t << " (rcond " << e.rcond
          << "); stages " << t + 1 << ".." << T << " attached";
      throw SingularStageMatrix(msg.str(), t, e.rcond, std::move(partial));
    }

    sol.K[static_cast<std::size_t>(t) - 1] = solved.X.leftCols(z);
    sol.L[static_cast<std::size_t>(t) - 1] = solved.X.col(z);
    sol.stage_rcond[static_cast<std::size_t>(t) - 1] = solved.rcond;

    detail::StageValues updated = detail::update_values_core(
        G, nullptr, sol.K[static_cast<std::size_t>(t) - 1], sol.L[static_cast<std::size_t>(t) - 1],
        P_next, S_next, w_next, refs, spec);
    P_next = updated.P;
    S_next = updated.S;
    w_next = updated.w;
    if (opts.keep_stage_values || t == 1) {
      const std::size_t slot = opts.keep_stage_values ? static_cast<std::size_t>(t) - 1 : 0;
      sol.P[slot] = std::move(updated.P);
      sol.S[slot] = std::move(updated.S);
      sol.w[slot] = std::move(updated.w);
    }
  }
  return sol;
}

const ResidualReport::Entry* ResidualReport::worst() const {
  const Entry* out = nullptr;
  for (const auto& e : entries)
    if (!out || e.residual > out->residual) out = &e;
  return out;
}

ResidualReport verify_solution_residuals(const FneSolution& sol, const PredictorFamily& pred,
                                         const BehaviorBasis& basis, const GameSpec& spec,
                                         double tol) {
  if (!sol.full_values)
    throw InvalidInput("verify_solution_residuals: solution lacks per-stage value data "
                       "(solve with keep_stage_values)");
  if (basis.basis.rows() != static_cast<Eigen::Index>(sol.dims.T_ini) * (sol.dims.m + sol.dims.p))
    throw InvalidInput("verify_solution_residuals: basis window size mismatch");
  spec.validate();

  ResidualReport report;
  report.tol = tol;

  const Eigen::Index ini = static_cast<Eigen::Index>(sol.dims.T_ini) * (sol.dims.m + sol.dims.p);
  const std::vector<Eigen::MatrixXd> empty_P;
  const std::vector<Eigen::VectorXd> empty_S;
  const std::vector<double> empty_w;

  auto push = [&report](int t, int i, std::string eq, double r) {
    report.entries.push_back({t, i + 1, std::move(eq), r});
    report.max_residual = std::max(report.max_residual, r);
  };

  for (int t = 1; t <= sol.T; ++t) {
    const Eigen::MatrixXd& G = pred.at(t);
    const BlockLayout layout = sol.layout(t);

    std::vector<Eigen::VectorXd> refs;
    for (const auto& pc : spec.players) refs.push_back(pc.ref.at(t));

    const bool terminal = t == sol.T;
    const auto& Pn = terminal ? empty_P : sol.P[static_cast<std::size_t>(t)];
    const auto& Sn = terminal ? empty_S : sol.S[static_cast<std::size_t>(t)];
    const auto& wn = terminal ? empty_w : sol.w[static_cast<std::size_t>(t)];

    const StageSystem st = detail::assemble_stage_core(G, nullptr, Pn, Sn, refs, spec);
    const Eigen::MatrixXd& K_t = sol.K[static_cast<std::size_t>(t) - 1];
    const Eigen::VectorXd& L_t = sol.L[static_cast<std::size_t>(t) - 1];

    const Eigen::MatrixXd lhsK = st.Htilde * K_t;
    const Eigen::MatrixXd E = lhsK - st.gtilde;
    const Eigen::VectorXd e2 = st.Htilde * L_t - st.gtilde_prime;

    const double scale_K = std::max({1.0, st.gtilde.cwiseAbs().maxCoeff(), lhsK.cwiseAbs().maxCoeff()});
    const double scale_L =
        std::max({1.0, st.gtilde_prime.cwiseAbs().maxCoeff(), (st.Htilde * L_t).cwiseAbs().maxCoeff()});

    for (int i = 0; i < spec.N(); ++i) {
      const auto span = spec.player_span(i);
      const Eigen::MatrixXd Ei = E.middleRows(span.offset, span.width);

      // Stationarity on the reachable window set: the window columns of the
      // condition act only through feasible windows.
      push(t, i, "stationarity-window",
           (Ei.leftCols(ini) * basis.basis).cwiseAbs().maxCoeff() / scale_K);
      for (int k = 1; k < t; ++k) {
        const auto uk = layout.span("u_" + std::to_string(k));
        push(t, i, "stationarity-u_" + std::to_string(k),
             Ei.middleCols(uk.offset, uk.width).cwiseAbs().maxCoeff() / scale_K);
      }
      push(t, i, "offset", e2.segment(span.offset, span.width).cwiseAbs().maxCoeff() / scale_L);
    }

    // Value recursion recomputed from the stage above.
    const detail::StageValues recomputed =
        detail::update_values_core(G, nullptr, K_t, L_t, Pn, Sn, wn, refs, spec);
    for (int i = 0; i < spec.N(); ++i) {
      const auto& P_stored = sol.P[static_cast<std::size_t>(t) - 1][static_cast<std::size_t>(i)];
      const auto& S_stored = sol.S[static_cast<std::size_t>(t) - 1][static_cast<std::size_t>(i)];
      const double w_stored = sol.w[static_cast<std::size_t>(t) - 1][static_cast<std::size_t>(i)];
      push(t, i, "value-P",
           (recomputed.P[static_cast<std::size_t>(i)] - P_stored).cwiseAbs().maxCoeff() /
               std::max(1.0, P_stored.cwiseAbs().maxCoeff()));
      push(t, i, "value-S",
           (recomputed.S[static_cast<std::size_t>(i)] - S_stored).cwiseAbs().maxCoeff() /
               std::max(1.0, S_stored.cwiseAbs().maxCoeff()));
      push(t, i, "value-w",
           std::abs(recomputed.w[static_cast<std::size_t>(i)] - w_stored) /
               std::max(1.0, std::abs(w_stored)));
    }
  }

  report.pass = report.max_residual <= tol;
  return report;
}

Eigen::VectorXd value_function(const FneSolution& sol, const Eigen::VectorXd& U0) {
  const Eigen::Index ini = static_cast<Eigen::Index>(sol.dims.T_ini) * (sol.dims.m + sol.dims.p);
  if (U0.size() != ini) throw InvalidInput("value_function: window has wrong size");
  if (sol.P.empty() || sol.P[0].empty()) throw InvalidInput("value_function: solution lacks value data");

  Eigen::VectorXd out(sol.N());
  for (int i = 0; i < sol.N(); ++i) {
    const auto& P1 = sol.P[0][static_cast<std::size_t>(i)];
    const auto& S1 = sol.S[0][static_cast<std::size_t>(i)];
    out(i) = 0.5 * U0.dot(P1 * U0) + S1.dot(U0) + sol.w[0][static_cast<std::size_t>(i)];
  }
  return out;
}

namespace {

// Equilibrium playback with a caller-chosen output map and optional per-stage
// input override (used by the deviation audit).
RolloutResult rollout_impl(
    const FneSolution& sol, const GameSpec& spec, const Eigen::VectorXd& u_ini,
    const Eigen::VectorXd& y_ini,
    const std::function<Eigen::VectorXd(int, const Eigen::VectorXd&, const Eigen::VectorXd&)>& emit_y,
    const std::function<Eigen::VectorXd(int, const Eigen::VectorXd&, const Eigen::VectorXd&)>& pick_u) {
  const Eigen::Index m = sol.dims.m;
  const Eigen::Index p = sol.dims.p;
  const Eigen::Index ini = static_cast<Eigen::Index>(sol.dims.T_ini) * (m + p);
  if (u_ini.size() != static_cast<Eigen::Index>(sol.dims.T_ini) * m)
    throw InvalidInput("rollout_fne: u_ini has wrong size");
  if (y_ini.size() != static_cast<Eigen::Index>(sol.dims.T_ini) * p)
    throw InvalidInput("rollout_fne: y_ini has wrong size");

  Eigen::VectorXd U(ini + static_cast<Eigen::Index>(sol.T) * m);
  U.head(u_ini.size()) = u_ini;
  U.segment(u_ini.size(), y_ini.size()) = y_ini;

  RolloutResult out;
  out.traj.u.resize(m, sol.T);
  out.traj.y.resize(p, sol.T);

  for (int t = 1; t <= sol.T; ++t) {
    const Eigen::Index z = ini + static_cast<Eigen::Index>(t - 1) * m;
    const Eigen::VectorXd past = U.head(z);
    const Eigen::VectorXd u_eq =
        sol.K[static_cast<std::size_t>(t) - 1] * past + sol.L[static_cast<std::size_t>(t) - 1];
    const Eigen::VectorXd u_t = pick_u ? pick_u(t, past, u_eq) : u_eq;
    const Eigen::VectorXd y_t = emit_y(t, past, u_t);
    out.traj.u.col(t - 1) = u_t;
    out.traj.y.col(t - 1) = y_t;
    U.segment(z, m) = u_t;
  }
  out.costs = total_cost(spec, out.traj, sol.T);
  return out;
}

}  // namespace

RolloutResult rollout_fne(const FneSolution& sol, const LtiSystem& sys, const GameSpec& spec,
                          const Eigen::VectorXd& u_ini, const Eigen::VectorXd& y_ini) {
  sys.validate();
  Eigen::VectorXd x = match_initial_state(sys, u_ini, y_ini).x1;
  auto emit = [&sys, &x](int, const Eigen::VectorXd&, const Eigen::VectorXd& u) {
    const Eigen::VectorXd y = sys.C * x + sys.D * u;
    x = sys.A * x + sys.B * u;
    return y;
  };
  return rollout_impl(sol, spec, u_ini, y_ini, emit, nullptr);
}

RolloutResult rollout_fne(const FneSolution& sol, const PredictorFamily& pred, const GameSpec& spec,
                          const Eigen::VectorXd& u_ini, const Eigen::VectorXd& y_ini) {
  if (static_cast<std::size_t>(sol.T) > pred.G.size())
    throw InvalidInput("rollout_fne: predictor family shorter than the solution horizon");
  auto emit = [&pred](int t, const Eigen::VectorXd& past, const Eigen::VectorXd& u) {
    Eigen::VectorXd col(past.size() + u.size());
    col << past, u;
    return Eigen::VectorXd(pred.at(t) * col);
  };
  return rollout_impl(sol, spec, u_ini, y_ini, emit, nullptr);
}

BestResponseReport best_response_check(const FneSolution& sol, const LtiSystem& sys,
                                       const GameSpec& spec, const Eigen::VectorXd& u_ini,
                                       const Eigen::VectorXd& y_ini, int trials, std::uint64_t seed) {
  if (trials < 1) throw InvalidInput("best_response_check: need at least one trial");
  spec.validate();

  const Eigen::VectorXd base_costs = rollout_fne(sol, sys, spec, u_ini, y_ini).costs;
  const Eigen::VectorXd x_start = match_initial_state(sys, u_ini, y_ini).x1;
  static constexpr double kScales[3] = {1e-2, 1e-1, 1.0};

  BestResponseReport report;
  report.trials = trials;
  report.worst_margin = std::numeric_limits<double>::infinity();

  Rng rng(seed);
  for (int trial = 0; trial < trials; ++trial) {
    const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.N())));
    const int t0 = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(sol.T)));
    const double scale = kScales[rng.below(3)];
    const auto span = spec.player_span(i);

    // Draw one perturbation per deviated stage; sizes grow with the stage.
    std::vector<Eigen::MatrixXd> dK(static_cast<std::size_t>(sol.T));
    std::vector<Eigen::VectorXd> dL(static_cast<std::size_t>(sol.T));
    for (int t = t0; t <= sol.T; ++t) {
      const Eigen::Index z = sol.K[static_cast<std::size_t>(t) - 1].cols();
      Eigen::MatrixXd Kp(span.width, z);
      for (Eigen::Index r = 0; r < Kp.rows(); ++r)
        for (Eigen::Index c = 0; c < Kp.cols(); ++c) Kp(r, c) = scale * rng.normal();
      Eigen::VectorXd Lp(span.width);
      for (Eigen::Index r = 0; r < Lp.size(); ++r) Lp(r) = scale * rng.normal();
      dK[static_cast<std::size_t>(t) - 1] = std::move(Kp);
      dL[static_cast<std::size_t>(t) - 1] = std::move(Lp);
    }

    Eigen::VectorXd x = x_start;
    auto emit = [&sys, &x](int, const Eigen::VectorXd&, const Eigen::VectorXd& u) {
      const Eigen::VectorXd y = sys.C * x + sys.D * u;
      x = sys.A * x + sys.B * u;
      return y;
    };
    auto pick = [&](int t, const Eigen::VectorXd& past, const Eigen::VectorXd& u_eq) {
      if (t < t0) return u_eq;
      Eigen::VectorXd u = u_eq;
      u.segment(span.offset, span.width) +=
          dK[static_cast<std::size_t>(t) - 1] * past + dL[static_cast<std::size_t>(t) - 1];
      return u;
    };
    const RolloutResult dev = rollout_impl(sol, spec, u_ini, y_ini, emit, pick);

    const double margin = dev.costs(i) - base_costs(i);
    if (margin < report.worst_margin) {
      report.worst_margin = margin;
      report.worst_player = i + 1;
      report.worst_stage = t0;
      report.worst_scale = scale;
    }
  }

  report.pass = report.worst_margin >= report.margin_floor;
  return report;
}

}  // namespace gamekit
