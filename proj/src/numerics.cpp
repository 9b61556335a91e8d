#include "gamekit/numerics.hpp"

#include "gamekit/errors.hpp"

#include <cstdlib>
#include <sstream>

namespace gamekit {

double default_tolerance() {
  static const double value = [] {
    if (const char* env = std::getenv("GAMEKIT_TOL")) {
      char* end = nullptr;
      const double parsed = std::strtod(env, &end);
      if (end != env && parsed > 0.0) return parsed;
    }
    return 1e-10;
  }();
  return value;
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& M, std::optional<double> tol, Eigen::Index* rank_out) {
  if (M.size() == 0) throw InvalidInput("pinv: empty matrix");
  const double rel = tol.value_or(default_tolerance());
  if (rel <= 0.0) throw InvalidInput("pinv: tolerance must be positive");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? rel * sv(0) : 0.0;

  Eigen::Index rank = 0;
  Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    if (sv(k) > cutoff) {
      inv_sv(k) = 1.0 / sv(k);
      ++rank;
    }
  }
  if (rank_out) *rank_out = rank;
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::Index numerical_rank(const Eigen::MatrixXd& M, std::optional<double> tol) {
  if (M.size() == 0) return 0;
  const double rel = tol.value_or(default_tolerance());
  if (rel <= 0.0) throw InvalidInput("numerical_rank: tolerance must be positive");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cutoff = rel * sv(0);
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > cutoff) ++rank;
  return rank;
}

SquareSolve solve_square(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double rcond_min) {
  if (A.rows() != A.cols()) throw InvalidInput("solve_square: matrix is not square");
  if (A.rows() != B.rows()) throw InvalidInput("solve_square: dimension mismatch between A and B");
  if (A.size() == 0) throw InvalidInput("solve_square: empty system");

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  double rc = lu.rcond();
  if (!std::isfinite(rc)) rc = 0.0;
  if (rc < rcond_min) {
    std::ostringstream msg;
    msg << "solve_square: matrix singular to working precision (rcond " << rc << " < " << rcond_min << ")";
    throw SingularMatrix(msg.str(), rc);
  }
  return SquareSolve{lu.solve(B), rc};
}

BlockLayout& BlockLayout::append(std::string name, Eigen::Index width) {
  if (name.empty()) throw InvalidInput("BlockLayout: segment name must be nonempty");
  if (width <= 0) throw InvalidInput("BlockLayout: segment '" + name + "' must have positive width");
  if (contains(name)) throw InvalidInput("BlockLayout: duplicate segment '" + name + "'");
  segments_.emplace_back(std::move(name), Span{total_, width});
  total_ += width;
  return *this;
}

bool BlockLayout::contains(std::string_view name) const {
  for (const auto& [seg_name, span] : segments_)
    if (seg_name == name) return true;
  return false;
}

BlockLayout::Span BlockLayout::span(std::string_view name) const {
  for (const auto& [seg_name, span] : segments_)
    if (seg_name == name) return span;
  throw InvalidInput("BlockLayout: unknown segment '" + std::string(name) + "'");
}

std::vector<Eigen::Index> BlockLayout::indices(const std::vector<std::string>& names) const {
  std::vector<Eigen::Index> out;
  for (const auto& name : names) {
    const Span s = span(name);
    for (Eigen::Index k = 0; k < s.width; ++k) out.push_back(s.offset + k);
  }
  return out;
}

}  // namespace gamekit
