#include "gamekit/game.hpp"

#include "gamekit/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace gamekit {

ReferenceTraj ReferenceTraj::zero(Eigen::Index p) {
  if (p < 1) throw InvalidInput("ReferenceTraj: output dimension must be positive");
  ReferenceTraj r;
  r.kind_ = Kind::zero;
  r.p_ = p;
  return r;
}

ReferenceTraj ReferenceTraj::constant(Eigen::VectorXd value) {
  if (value.size() < 1) throw InvalidInput("ReferenceTraj: constant value must be nonempty");
  ReferenceTraj r;
  r.kind_ = Kind::constant;
  r.p_ = value.size();
  r.cols_ = value;
  return r;
}

ReferenceTraj ReferenceTraj::per_stage(Eigen::MatrixXd columns) {
  if (columns.rows() < 1 || columns.cols() < 1)
    throw InvalidInput("ReferenceTraj: per-stage reference must be nonempty");
  ReferenceTraj r;
  r.kind_ = Kind::per_stage;
  r.p_ = columns.rows();
  r.cols_ = std::move(columns);
  return r;
}

Eigen::VectorXd ReferenceTraj::at(int t) const {
  if (t < 1) throw InvalidInput("ReferenceTraj: stage must be positive");
  switch (kind_) {
    case Kind::zero: return Eigen::VectorXd::Zero(p_);
    case Kind::constant: return cols_.col(0);
    case Kind::per_stage:
      if (t > cols_.cols())
        throw InvalidInput("ReferenceTraj: stage " + std::to_string(t) + " beyond the " +
                           std::to_string(cols_.cols()) + " stages provided");
      return cols_.col(t - 1);
  }
  throw InvalidInput("ReferenceTraj: corrupt kind");
}

Eigen::Index ReferenceTraj::dim() const { return p_; }

int ReferenceTraj::stages() const { return kind_ == Kind::per_stage ? static_cast<int>(cols_.cols()) : -1; }

Eigen::Index GameSpec::m() const {
  Eigen::Index total = 0;
  for (int w : partition) total += w;
  return total;
}

BlockLayout::Span GameSpec::player_span(int i) const {
  if (i < 0 || i >= N()) throw InvalidInput("GameSpec: player index out of range");
  Eigen::Index offset = 0;
  for (int j = 0; j < i; ++j) offset += partition[static_cast<std::size_t>(j)];
  return {offset, partition[static_cast<std::size_t>(i)]};
}

BlockLayout GameSpec::input_layout() const {
  BlockLayout layout;
  for (int i = 0; i < N(); ++i)
    layout.append("u^" + std::to_string(i + 1), partition[static_cast<std::size_t>(i)]);
  return layout;
}

namespace {

bool symmetric_enough(const Eigen::MatrixXd& M) {
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + M.cwiseAbs().maxCoeff());
}

double min_eigenvalue_sym(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

void GameSpec::validate() const {
  if (partition.empty()) throw InvalidInput("GameSpec: empty input partition");
  if (players.empty()) throw InvalidInput("GameSpec: no players");
  if (players.size() != partition.size())
    throw InvalidInput("GameSpec: partition and player list sizes differ");
  for (std::size_t i = 0; i < partition.size(); ++i)
    if (partition[i] < 1)
      throw InvalidInput("GameSpec: player " + std::to_string(i + 1) + " has nonpositive input width");
  if (p < 1) throw InvalidInput("GameSpec: output dimension must be positive");
  if (T_ini < 1) throw InvalidInput("GameSpec: T_ini must be positive");

  for (std::size_t i = 0; i < players.size(); ++i) {
    const PlayerCost& c = players[i];
    const std::string who = "player " + std::to_string(i + 1);
    if (c.Q.rows() != p || c.Q.cols() != p) throw InvalidInput("GameSpec: " + who + ": Q must be p x p");
    if (!symmetric_enough(c.Q)) throw InvalidInput("GameSpec: " + who + ": Q is not symmetric");
    if (min_eigenvalue_sym(c.Q) < -1e-10)
      throw InvalidInput("GameSpec: " + who + ": Q is not positive semidefinite");
    if (c.ref.dim() != p) throw InvalidInput("GameSpec: " + who + ": reference dimension differs from p");
    if (c.R.size() != players.size())
      throw InvalidInput("GameSpec: " + who + ": needs one R block per player");
    for (std::size_t j = 0; j < c.R.size(); ++j) {
      const Eigen::Index mj = partition[j];
      if (c.R[j].rows() != mj || c.R[j].cols() != mj)
        throw InvalidInput("GameSpec: " + who + ": R block " + std::to_string(j + 1) + " must be " +
                           std::to_string(mj) + " x " + std::to_string(mj));
      if (!symmetric_enough(c.R[j]))
        throw InvalidInput("GameSpec: " + who + ": R block " + std::to_string(j + 1) + " is not symmetric");
    }
    if (min_eigenvalue_sym(c.R[i]) <= 1e-12)
      throw InvalidInput("GameSpec: " + who + ": own input weight must be positive definite");
    if (!(c.delta > 0.0) || c.delta > 1.0)
      throw InvalidInput("GameSpec: " + who + ": discount must lie in (0, 1]");
  }
}

double stage_cost(const GameSpec& spec, int i, const Eigen::VectorXd& y_t,
                  const Eigen::VectorXd& u_t, int t) {
  if (i < 0 || i >= spec.N()) throw InvalidInput("stage_cost: player index out of range");
  if (t < 1) throw InvalidInput("stage_cost: stage must be positive");
  if (y_t.size() != spec.p) throw InvalidInput("stage_cost: output has wrong dimension");
  if (u_t.size() != spec.m()) throw InvalidInput("stage_cost: input has wrong dimension");

  const PlayerCost& c = spec.players[static_cast<std::size_t>(i)];
  const Eigen::VectorXd err = y_t - c.ref.at(t);
  double kernel = err.dot(c.Q * err);
  for (int j = 0; j < spec.N(); ++j) {
    const auto span = spec.player_span(j);
    const Eigen::VectorXd uj = u_t.segment(span.offset, span.width);
    kernel += uj.dot(c.R[static_cast<std::size_t>(j)] * uj);
  }
  return 0.5 * std::pow(c.delta, t - 1) * kernel;
}

double total_cost(const GameSpec& spec, int i, const Trajectory& traj, int horizon) {
  if (horizon < 1) throw InvalidInput("total_cost: horizon must be positive");
  if (traj.length() < horizon)
    throw InvalidInput("total_cost: trajectory shorter than the horizon");
  double sum = 0.0;
  for (int t = 1; t <= horizon; ++t) sum += stage_cost(spec, i, traj.y.col(t - 1), traj.u.col(t - 1), t);
  return sum;
}

Eigen::VectorXd total_cost(const GameSpec& spec, const Trajectory& traj, int horizon) {
  Eigen::VectorXd out(spec.N());
  for (int i = 0; i < spec.N(); ++i) out(i) = total_cost(spec, i, traj, horizon);
  return out;
}

}  // namespace gamekit
