#include "gamekit/lti.hpp"

#include "gamekit/errors.hpp"
#include "gamekit/numerics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace gamekit {

void LtiSystem::validate() const {
  if (A.rows() == 0 || A.rows() != A.cols()) throw InvalidInput("LtiSystem: A must be square and nonempty");
  if (B.rows() != A.rows() || B.cols() < 1) throw InvalidInput("LtiSystem: B must be n x m with m >= 1");
  if (C.cols() != A.rows() || C.rows() < 1) throw InvalidInput("LtiSystem: C must be p x n with p >= 1");
  if (D.rows() != C.rows() || D.cols() != B.cols()) throw InvalidInput("LtiSystem: D must be p x m");
  if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !D.allFinite())
    throw InvalidInput("LtiSystem: matrices must be finite");
}

void Trajectory::validate() const {
  if (u.cols() != y.cols()) throw InvalidInput("Trajectory: input and output lengths differ");
  if (u.rows() < 1 || y.rows() < 1) throw InvalidInput("Trajectory: need at least one input and one output channel");
  if (!u.allFinite() || !y.allFinite()) throw InvalidInput("Trajectory: values must be finite");
}

Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& A, int k) {
  if (k < 0) throw InvalidInput("matrix_power: negative exponent");
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  for (int i = 0; i < k; ++i) out = out * A;
  return out;
}

SimulationResult simulate(const LtiSystem& sys, const Eigen::VectorXd& x1, const Eigen::MatrixXd& u) {
  sys.validate();
  if (x1.size() != sys.n()) throw InvalidInput("simulate: initial state has wrong dimension");
  if (u.rows() != sys.m()) throw InvalidInput("simulate: input has wrong channel count");

  const Eigen::Index L = u.cols();
  SimulationResult out;
  out.states.resize(sys.n(), L + 1);
  out.traj.u = u;
  out.traj.y.resize(sys.p(), L);

  Eigen::VectorXd x = x1;
  for (Eigen::Index t = 0; t < L; ++t) {
    out.states.col(t) = x;
    out.traj.y.col(t) = sys.C * x + sys.D * u.col(t);
    x = sys.A * x + sys.B * u.col(t);
  }
  out.states.col(L) = x;
  return out;
}

namespace {

Eigen::MatrixXd observability_stack(const LtiSystem& sys, int depth) {
  Eigen::MatrixXd O(depth * sys.p(), sys.n());
  Eigen::MatrixXd Ak = Eigen::MatrixXd::Identity(sys.n(), sys.n());
  for (int k = 0; k < depth; ++k) {
    O.middleRows(k * sys.p(), sys.p()) = sys.C * Ak;
    Ak = Ak * sys.A;
  }
  return O;
}

// Output of the window forced by the inputs alone (zero pre-window state),
// stacked oldest-first.
Eigen::VectorXd forced_output(const LtiSystem& sys, const Eigen::VectorXd& u_ini, int T_ini) {
  Eigen::MatrixXd u(sys.m(), T_ini);
  for (int t = 0; t < T_ini; ++t) u.col(t) = u_ini.segment(t * sys.m(), sys.m());
  const SimulationResult sim = simulate(sys, Eigen::VectorXd::Zero(sys.n()), u);
  Eigen::VectorXd out(T_ini * sys.p());
  for (int t = 0; t < T_ini; ++t) out.segment(t * sys.p(), sys.p()) = sim.traj.y.col(t);
  return out;
}

// State reached after applying the stacked window inputs from x_start.
Eigen::VectorXd propagate(const LtiSystem& sys, const Eigen::VectorXd& x_start,
                          const Eigen::VectorXd& u_ini, int T_ini) {
  Eigen::VectorXd x = x_start;
  for (int t = 0; t < T_ini; ++t) x = sys.A * x + sys.B * u_ini.segment(t * sys.m(), sys.m());
  return x;
}

}  // namespace

int lag(const LtiSystem& sys, std::optional<double> tol) {
  sys.validate();
  for (int l = 1; l <= sys.n(); ++l) {
    if (numerical_rank(observability_stack(sys, l), tol) == sys.n()) return l;
  }
  throw NotObservable("lag: observability stack never reaches full rank; the system is not observable");
}

bool is_controllable(const LtiSystem& sys, std::optional<double> tol) {
  sys.validate();
  Eigen::MatrixXd ctrb(sys.n(), sys.n() * sys.m());
  Eigen::MatrixXd Ak = Eigen::MatrixXd::Identity(sys.n(), sys.n());
  for (Eigen::Index k = 0; k < sys.n(); ++k) {
    ctrb.middleCols(k * sys.m(), sys.m()) = Ak * sys.B;
    Ak = Ak * sys.A;
  }
  return numerical_rank(ctrb, tol) == sys.n();
}

Trajectory generate_offline_data(const LtiSystem& sys, const OfflineDataOptions& opts) {
  sys.validate();
  if (opts.length < 1) throw InvalidInput("generate_offline_data: length must be positive");
  if (opts.amplitude <= 0.0) throw InvalidInput("generate_offline_data: amplitude must be positive");

  Eigen::VectorXd x1 = opts.x1.value_or(Eigen::VectorXd::Zero(sys.n()));
  if (x1.size() != sys.n()) throw InvalidInput("generate_offline_data: x1 has wrong dimension");

  Rng rng(opts.seed);
  Eigen::MatrixXd u(sys.m(), opts.length);
  // Column-major draw order (all channels of sample 1, then sample 2, ...)
  // is part of the reproducibility contract for seeded datasets.
  for (Eigen::Index t = 0; t < opts.length; ++t)
    for (Eigen::Index i = 0; i < sys.m(); ++i) u(i, t) = rng.uniform(-opts.amplitude, opts.amplitude);

  return simulate(sys, x1, u).traj;
}

MatchedState match_initial_state(const LtiSystem& sys, const Eigen::VectorXd& u_ini,
                                 const Eigen::VectorXd& y_ini, std::optional<double> tol) {
  sys.validate();
  if (u_ini.size() % sys.m() != 0) throw InvalidInput("match_initial_state: u_ini size not a multiple of m");
  const int T_ini = static_cast<int>(u_ini.size() / sys.m());
  if (T_ini < 1) throw InvalidInput("match_initial_state: empty window");
  if (y_ini.size() != T_ini * sys.p())
    throw InvalidInput("match_initial_state: y_ini size inconsistent with u_ini window length");

  const Eigen::MatrixXd O = observability_stack(sys, T_ini);
  if (numerical_rank(O) < sys.n())
    throw NotObservable("match_initial_state: window shorter than the lag; state not determined");

  const Eigen::VectorXd free_part = y_ini - forced_output(sys, u_ini, T_ini);
  const Eigen::VectorXd x_window = O.colPivHouseholderQr().solve(free_part);

  const double scale = std::max(1.0, y_ini.norm());
  const double residual = (O * x_window - free_part).norm() / scale;
  const double limit = tol.value_or(1e-8);
  if (residual > limit) {
    std::ostringstream msg;
    msg << "match_initial_state: window inconsistent with the dynamics (relative residual " << residual
        << " > " << limit << ")";
    throw InconsistentInitialData(msg.str(), residual);
  }

  MatchedState out;
  out.x_window = x_window;
  out.x1 = propagate(sys, x_window, u_ini, T_ini);
  out.residual = residual;
  return out;
}

Window window_for_state(const LtiSystem& sys, const Eigen::VectorXd& x1, int T_ini,
                        std::optional<Eigen::VectorXd> u_ini) {
  sys.validate();
  if (x1.size() != sys.n()) throw InvalidInput("window_for_state: x1 has wrong dimension");
  if (T_ini < 1) throw InvalidInput("window_for_state: T_ini must be positive");

  const Eigen::MatrixXd An = matrix_power(sys.A, T_ini);

  Eigen::VectorXd u;
  Eigen::VectorXd x_start;
  if (u_ini) {
    u = *u_ini;
    if (u.size() != T_ini * sys.m()) throw InvalidInput("window_for_state: pinned u_ini has wrong size");
    const Eigen::VectorXd target = x1 - propagate(sys, Eigen::VectorXd::Zero(sys.n()), u, T_ini);
    x_start = pinv(An) * target;
    const double res = (An * x_start - target).norm() / std::max(1.0, x1.norm());
    if (res > 1e-8)
      throw InvalidInput("window_for_state: x1 unreachable with the pinned inputs (residual " +
                         std::to_string(res) + ")");
  } else {
    // Reachability map of (pre-window state, stacked inputs): minimum-norm
    // preimage of x1.
    Eigen::MatrixXd R(sys.n(), sys.n() + T_ini * sys.m());
    R.leftCols(sys.n()) = An;
    for (int k = 0; k < T_ini; ++k)
      R.middleCols(sys.n() + k * sys.m(), sys.m()) = matrix_power(sys.A, T_ini - 1 - k) * sys.B;
    const Eigen::VectorXd z = pinv(R) * x1;
    const double res = (R * z - x1).norm() / std::max(1.0, x1.norm());
    if (res > 1e-8)
      throw InvalidInput("window_for_state: x1 not reachable in T_ini steps (residual " +
                         std::to_string(res) + ")");
    x_start = z.head(sys.n());
    u = z.tail(T_ini * sys.m());
  }

  Eigen::MatrixXd u_mat(sys.m(), T_ini);
  for (int t = 0; t < T_ini; ++t) u_mat.col(t) = u.segment(t * sys.m(), sys.m());
  const SimulationResult sim = simulate(sys, x_start, u_mat);

  Window out;
  out.u_ini = u;
  out.y_ini.resize(T_ini * sys.p());
  for (int t = 0; t < T_ini; ++t) out.y_ini.segment(t * sys.p(), sys.p()) = sim.traj.y.col(t);
  out.x1 = sim.states.col(T_ini);
  return out;
}

Window sample_window(const LtiSystem& sys, int T_ini, double amplitude, Rng& rng) {
  sys.validate();
  if (T_ini < 1) throw InvalidInput("sample_window: T_ini must be positive");
  if (amplitude <= 0.0) throw InvalidInput("sample_window: amplitude must be positive");

  Eigen::VectorXd x_start(sys.n());
  for (Eigen::Index i = 0; i < sys.n(); ++i) x_start(i) = rng.uniform(-amplitude, amplitude);
  Eigen::MatrixXd u_mat(sys.m(), T_ini);
  for (int t = 0; t < T_ini; ++t)
    for (Eigen::Index i = 0; i < sys.m(); ++i) u_mat(i, t) = rng.uniform(-amplitude, amplitude);

  const SimulationResult sim = simulate(sys, x_start, u_mat);
  Window out;
  out.u_ini.resize(T_ini * sys.m());
  out.y_ini.resize(T_ini * sys.p());
  for (int t = 0; t < T_ini; ++t) {
    out.u_ini.segment(t * sys.m(), sys.m()) = u_mat.col(t);
    out.y_ini.segment(t * sys.p(), sys.p()) = sim.traj.y.col(t);
  }
  out.x1 = sim.states.col(T_ini);
  return out;
}

namespace {

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  traj.validate();
  std::ofstream f(path);
  if (!f) throw IoError("write_trajectory_csv: cannot open '" + path + "' for writing");

  f << "t";
  for (Eigen::Index i = 0; i < traj.u.rows(); ++i) f << ",u_" << (i + 1);
  for (Eigen::Index i = 0; i < traj.y.rows(); ++i) f << ",y_" << (i + 1);
  f << "\n";
  for (Eigen::Index t = 0; t < traj.length(); ++t) {
    f << (t + 1);
    for (Eigen::Index i = 0; i < traj.u.rows(); ++i) f << "," << format_value(traj.u(i, t));
    for (Eigen::Index i = 0; i < traj.y.rows(); ++i) f << "," << format_value(traj.y(i, t));
    f << "\n";
  }
  if (!f) throw IoError("write_trajectory_csv: write failure on '" + path + "'");
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("read_trajectory_csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(f, line)) throw IoError("read_trajectory_csv: '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = split_csv_line(line);
  if (header.empty() || header[0] != "t")
    throw IoError("read_trajectory_csv: '" + path + "' header must start with column 't'");
  Eigen::Index m = 0, p = 0;
  for (std::size_t k = 1; k < header.size(); ++k) {
    const std::string& name = header[k];
    if (name.rfind("u_", 0) == 0 && p == 0)
      ++m;
    else if (name.rfind("y_", 0) == 0)
      ++p;
    else
      throw IoError("read_trajectory_csv: unexpected column '" + name + "' in '" + path + "'");
  }
  if (m == 0 || p == 0)
    throw IoError("read_trajectory_csv: '" + path + "' needs at least one u_ and one y_ column");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw IoError("read_trajectory_csv: line " + std::to_string(line_no) + " of '" + path +
                    "' has " + std::to_string(fields.size()) + " fields, expected " +
                    std::to_string(header.size()));
    std::vector<double> row;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      try {
        std::size_t used = 0;
        const double v = std::stod(fields[k], &used);
        if (used != fields[k].size()) throw std::invalid_argument("trailing characters");
        row.push_back(v);
      } catch (const std::exception&) {
        throw IoError("read_trajectory_csv: non-numeric field '" + fields[k] + "' at line " +
                      std::to_string(line_no) + " of '" + path + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("read_trajectory_csv: '" + path + "' has no data rows");

  Trajectory traj;
  traj.u.resize(m, static_cast<Eigen::Index>(rows.size()));
  traj.y.resize(p, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (Eigen::Index i = 0; i < m; ++i) traj.u(i, static_cast<Eigen::Index>(t)) = rows[t][i];
    for (Eigen::Index i = 0; i < p; ++i) traj.y(i, static_cast<Eigen::Index>(t)) = rows[t][m + i];
  }
  return traj;
}

}  // namespace gamekit
