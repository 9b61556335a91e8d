#include "gamekit/receding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

namespace gamekit {

Eigen::MatrixXd GainSet::stacked_gain() const {
  if (K.empty()) throw InvalidInput("GainSet: empty");
  Eigen::Index rows = 0;
  for (const auto& k : K) rows += k.rows();
  Eigen::MatrixXd out(rows, K.front().cols());
  Eigen::Index at = 0;
  for (const auto& k : K) {
    out.middleRows(at, k.rows()) = k;
    at += k.rows();
  }
  return out;
}

Eigen::VectorXd GainSet::stacked_offset() const {
  if (L.empty()) throw InvalidInput("GainSet: empty");
  Eigen::Index rows = 0;
  for (const auto& l : L) rows += l.size();
  Eigen::VectorXd out(rows);
  Eigen::Index at = 0;
  for (const auto& l : L) {
    out.segment(at, l.size()) = l;
    at += l.size();
  }
  return out;
}

namespace {

GainSet gains_from_solution(const FneSolution& sol, const GameSpec& spec) {
  GainSet out;
  out.T_ini = sol.dims.T_ini;
  out.m = sol.dims.m;
  out.p = sol.dims.p;
  for (int i = 0; i < spec.N(); ++i) {
    out.K.push_back(sol.player_gain(1, i));
    out.L.push_back(sol.player_offset(1, i));
    out.horizon.push_back(sol.T);
  }
  return out;
}

}  // namespace

GainSet first_stage_gain(const HankelBlocks& blocks, const PredictorFamily& pred,
                         const GameSpec& spec, int T, const SolveOptions& opts) {
  SolveOptions light = opts;
  light.keep_stage_values = false;
  return gains_from_solution(solve_finite_fne(blocks, pred, spec, T, light), spec);
}

GainSet first_stage_gain(const HankelBlocks& blocks, const PredictorFamily& pred,
                         const GameSpec& spec, const std::vector<int>& T_per_player,
                         const SolveOptions& opts) {
  if (static_cast<int>(T_per_player.size()) != spec.N())
    throw InvalidInput("first_stage_gain: need one horizon per player");
  SolveOptions light = opts;
  light.keep_stage_values = false;

  GainSet out;
  out.T_ini = blocks.dims.T_ini;
  out.m = blocks.dims.m;
  out.p = blocks.dims.p;
  out.K.resize(static_cast<std::size_t>(spec.N()));
  out.L.resize(static_cast<std::size_t>(spec.N()));
  out.horizon = T_per_player;

  // One solve per distinct horizon; each player takes its own row block.
  std::vector<int> distinct = T_per_player;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  for (int T : distinct) {
    const FneSolution sol = solve_finite_fne(blocks, pred, spec, T, light);
    for (int i = 0; i < spec.N(); ++i) {
      if (T_per_player[static_cast<std::size_t>(i)] != T) continue;
      out.K[static_cast<std::size_t>(i)] = sol.player_gain(1, i);
      out.L[static_cast<std::size_t>(i)] = sol.player_offset(1, i);
    }
  }
  return out;
}

SweepResult sweep_horizons(const HankelBlocks& blocks, const PredictorFamily& pred,
                           const GameSpec& spec, int T_min, int T_max, const SweepOptions& opts) {
  if (T_min < 1 || T_max < T_min) throw InvalidInput("sweep_horizons: bad horizon range");
  if (static_cast<std::size_t>(T_max) > pred.G.size())
    throw InvalidInput("sweep_horizons: range exceeds the predictor family");

  const int count = T_max - T_min + 1;
  SweepResult result;
  result.eps = opts.eps;
  result.entries.resize(static_cast<std::size_t>(count));

  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_lock;
  const int jobs = std::max(1, std::min(opts.jobs, count));

  auto worker = [&] {
    for (;;) {
      const int idx = next.fetch_add(1);
      if (idx >= count) return;
      try {
        const int T = T_min + idx;
        result.entries[static_cast<std::size_t>(idx)].T = T;
        result.entries[static_cast<std::size_t>(idx)].gains =
            first_stage_gain(blocks, pred, spec, T, opts.solve);
      } catch (...) {
        std::lock_guard<std::mutex> g(error_lock);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  for (int idx = 0; idx + 1 < count; ++idx) {
    const GainSet& a = result.entries[static_cast<std::size_t>(idx)].gains;
    const GainSet& b = result.entries[static_cast<std::size_t>(idx) + 1].gains;
    double diff = 0.0;
    for (std::size_t i = 0; i < a.K.size(); ++i) {
      diff = std::max(diff, (a.K[i] - b.K[i]).cwiseAbs().maxCoeff());
      diff = std::max(diff, (a.L[i] - b.L[i]).cwiseAbs().maxCoeff());
    }
    result.entries[static_cast<std::size_t>(idx)].gain_diff = diff;
    if (!result.converged && diff <= opts.eps) {
      result.converged = true;
      result.T_converged = result.entries[static_cast<std::size_t>(idx)].T;
    }
  }
  return result;
}

namespace {

RecedingRun receding_impl(const GainSet& gains, const GameSpec& spec, const Eigen::VectorXd& u_ini,
                          const Eigen::VectorXd& y_ini, const RecedingOptions& opts,
                          const std::function<Eigen::VectorXd(const Eigen::VectorXd&,
                                                              const Eigen::VectorXd&)>& emit_y) {
  spec.validate();
  const int m = gains.m;
  const int p = gains.p;
  const int T_ini = gains.T_ini;
  if (static_cast<int>(gains.K.size()) != spec.N())
    throw InvalidInput("run_receding_horizon: gain set does not cover every player");
  if (u_ini.size() != static_cast<Eigen::Index>(T_ini) * m)
    throw InvalidInput("run_receding_horizon: u_ini has wrong size");
  if (y_ini.size() != static_cast<Eigen::Index>(T_ini) * p)
    throw InvalidInput("run_receding_horizon: y_ini has wrong size");
  if (opts.M < 1) throw InvalidInput("run_receding_horizon: M must be positive");

  Eigen::VectorXd uw = u_ini;
  Eigen::VectorXd yw = y_ini;

  RecedingRun run;
  run.traj.u.resize(m, opts.M);
  run.traj.y.resize(p, opts.M);
  run.costs = Eigen::VectorXd::Zero(spec.N());

  const int tail_n = std::min(opts.tail_window, opts.M);
  Eigen::VectorXd tail_kernels = Eigen::VectorXd::Zero(spec.N());

  Eigen::VectorXd window(uw.size() + yw.size());
  for (int t = 1; t <= opts.M; ++t) {
    window.head(uw.size()) = uw;
    window.tail(yw.size()) = yw;
    if (opts.drift_monitor)
      run.max_drift = std::max(run.max_drift, window_infeasibility(*opts.drift_monitor, window));

    Eigen::VectorXd u(m);
    for (int i = 0; i < spec.N(); ++i) {
      const auto span = spec.player_span(i);
      u.segment(span.offset, span.width) =
          gains.K[static_cast<std::size_t>(i)] * window + gains.L[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd y = emit_y(window, u);

    if (u.cwiseAbs().maxCoeff() > opts.divergence_limit ||
        y.cwiseAbs().maxCoeff() > opts.divergence_limit)
      throw Diverged("run_receding_horizon: trajectory magnitude exceeded " +
                         std::to_string(opts.divergence_limit) + " at stage " + std::to_string(t),
                     t);

    run.traj.u.col(t - 1) = u;
    run.traj.y.col(t - 1) = y;
    for (int i = 0; i < spec.N(); ++i) {
      run.costs(i) += stage_cost(spec, i, y, u, t);
      // Undiscounted kernel for the tail estimate: evaluate as stage 1.
      if (t > opts.M - tail_n) tail_kernels(i) += stage_cost(spec, i, y, u, 1);
    }

    // Slide the window one stage.
    uw.head(uw.size() - m) = uw.tail(uw.size() - m).eval();
    uw.tail(m) = u;
    yw.head(yw.size() - p) = yw.tail(yw.size() - p).eval();
    yw.tail(p) = y;
  }

  run.tail_bound.resize(spec.N());
  for (int i = 0; i < spec.N(); ++i) {
    const double avg = tail_kernels(i) / tail_n;
    const double delta = spec.players[static_cast<std::size_t>(i)].delta;
    if (delta < 1.0)
      run.tail_bound(i) = avg * std::pow(delta, opts.M) / (1.0 - delta);
    else
      run.tail_bound(i) = avg == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return run;
}

}  // namespace

RecedingRun run_receding_horizon(const GainSet& gains, const LtiSystem& sys, const GameSpec& spec,
                                 const Eigen::VectorXd& u_ini, const Eigen::VectorXd& y_ini,
                                 const RecedingOptions& opts) {
  sys.validate();
  Eigen::VectorXd x = match_initial_state(sys, u_ini, y_ini).x1;
  auto emit = [&sys, &x](const Eigen::VectorXd&, const Eigen::VectorXd& u) {
    const Eigen::VectorXd y = sys.C * x + sys.D * u;
    x = sys.A * x + sys.B * u;
    return y;
  };
  return receding_impl(gains, spec, u_ini, y_ini, opts, emit);
}

RecedingRun run_receding_horizon(const GainSet& gains, const PredictorFamily& pred,
                                 const GameSpec& spec, const Eigen::VectorXd& u_ini,
                                 const Eigen::VectorXd& y_ini, const RecedingOptions& opts) {
  if (pred.G.empty()) throw InvalidInput("run_receding_horizon: empty predictor family");
  const Eigen::MatrixXd& G1 = pred.at(1);
  auto emit = [&G1](const Eigen::VectorXd& window, const Eigen::VectorXd& u) {
    Eigen::VectorXd col(window.size() + u.size());
    col << window, u;
    return Eigen::VectorXd(G1 * col);
  };
  return receding_impl(gains, spec, u_ini, y_ini, opts, emit);
}

std::string ConvergenceReport::table() const {
  std::ostringstream os;
  os << "    T    gain_diff";
  const int N = rows.empty() ? 0 : static_cast<int>(rows.front().costs.size());
  for (int i = 1; i <= N; ++i) os << "        J_" << i;
  const bool has_gap = !rows.empty() && rows.front().gap.size() > 0;
  if (has_gap) {
    for (int i = 1; i <= N; ++i) os << "      gap_" << i;
    os << "   ratio";
  }
  os << "\n";
  char buf[64];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf, "%5d %12.4e", row.T, row.gain_diff);
    os << buf;
    for (Eigen::Index i = 0; i < row.costs.size(); ++i) {
      std::snprintf(buf, sizeof buf, " %10.4f", row.costs(i));
      os << buf;
    }
    if (has_gap) {
      for (Eigen::Index i = 0; i < row.gap.size(); ++i) {
        std::snprintf(buf, sizeof buf, " %10.3e", row.gap(i));
        os << buf;
      }
      std::snprintf(buf, sizeof buf, " %7.3f", row.gap_ratio);
      os << buf;
    }
    os << "\n";
  }
  if (!note.empty()) os << note << "\n";
  return os.str();
}

ConvergenceReport convergence_report(const SweepResult& sweep,
                                     const std::vector<Eigen::VectorXd>& costs_per_entry,
                                     const Eigen::VectorXd& reference) {
  if (!costs_per_entry.empty() && costs_per_entry.size() != sweep.entries.size())
    throw InvalidInput("convergence_report: cost list does not match the sweep entries");

  ConvergenceReport report;
  report.gains_converged = sweep.converged;
  report.T_converged = sweep.T_converged;

  for (std::size_t k = 0; k < sweep.entries.size(); ++k) {
    ConvergenceRow row;
    row.T = sweep.entries[k].T;
    row.gain_diff = sweep.entries[k].gain_diff;
    if (!costs_per_entry.empty()) {
      row.costs = costs_per_entry[k];
      if (reference.size() > 0 && reference.size() == row.costs.size()) {
        row.gap = (row.costs - reference).cwiseAbs();
        if (k > 0 && report.rows[k - 1].gap.size() > 0) {
          double ratio = 0.0;
          for (Eigen::Index i = 0; i < row.gap.size(); ++i) {
            const double prev = report.rows[k - 1].gap(i);
            if (prev > 0.0) ratio = std::max(ratio, row.gap(i) / prev);
          }
          row.gap_ratio = ratio;
        }
      }
    }
    report.rows.push_back(std::move(row));
  }

  std::ostringstream note;
  if (sweep.converged)
    note << "gains settled at T=" << sweep.T_converged << " (threshold " << sweep.eps << ")";
  else
    note << "gains did not settle within the swept range (threshold " << sweep.eps << ")";
  report.note = note.str();
  return report;
}

}  // namespace gamekit
