#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gamekit {

// Process-wide relative tolerance for rank decisions and pseudo-inverse
// cutoffs. Defaults to 1e-10; the environment variable GAMEKIT_TOL overrides
// it once at first use. Call sites may still pass an explicit tolerance,
// which wins over both.
double default_tolerance();

// Moore-Penrose pseudo-inverse via SVD. Singular values at or below
// tol * sigma_max are treated as zero. rank_out, when given, receives the
// number of retained singular values.
Eigen::MatrixXd pinv(const Eigen::MatrixXd& M, std::optional<double> tol = std::nullopt,
                     Eigen::Index* rank_out = nullptr);

Eigen::Index numerical_rank(const Eigen::MatrixXd& M, std::optional<double> tol = std::nullopt);

struct SquareSolve {
  Eigen::MatrixXd X;
  double rcond = 0.0;  // reciprocal condition estimate from the LU factorization
};

// Solves A X = B for square A by partial-pivot LU. Throws SingularMatrix,
// carrying the reciprocal condition estimate, when that estimate falls below
// rcond_min.
SquareSolve solve_square(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double rcond_min = 1e-12);

// Named contiguous segments tiling one index axis [0, total). Every block
// extraction from stacked vectors and gain matrices goes through this; raw
// offset arithmetic stays out of the solvers.
class BlockLayout {
 public:
  struct Span {
    Eigen::Index offset = 0;
    Eigen::Index width = 0;
  };

  BlockLayout() = default;

  // Appends a segment after the current end. Names must be unique and
  // nonempty; widths must be positive. Returns *this for chaining.
  BlockLayout& append(std::string name, Eigen::Index width);

  bool contains(std::string_view name) const;
  Span span(std::string_view name) const;  // throws InvalidInput on unknown name
  Eigen::Index total() const { return total_; }

  std::size_t size() const { return segments_.size(); }
  const std::pair<std::string, Span>& segment(std::size_t k) const { return segments_.at(k); }

  // Concatenation of the spans of the given names, as a flat index list in
  // the order given. Used to gather non-contiguous column subsets.
  std::vector<Eigen::Index> indices(const std::vector<std::string>& names) const;

 private:
  std::vector<std::pair<std::string, Span>> segments_;
  Eigen::Index total_ = 0;
};

}  // namespace gamekit
