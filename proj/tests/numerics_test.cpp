#include "doctest.h"

#include "gamekit/errors.hpp"
#include "gamekit/numerics.hpp"
#include "gamekit/rng.hpp"

#include <Eigen/Dense>

using namespace gamekit;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) M(r, c) = rng.normal();
  return M;
}

}  // namespace

TEST_CASE("pinv satisfies the Moore-Penrose identities on a rank-deficient matrix") {
  Rng rng(7);
  // 7x4 of rank 3 by construction.
  const Eigen::MatrixXd A = random_matrix(7, 3, rng) * random_matrix(3, 4, rng);
  Eigen::Index rank = 0;
  const Eigen::MatrixXd Ap = pinv(A, std::nullopt, &rank);

  CHECK(rank == 3);
  CHECK(Ap.rows() == 4);
  CHECK(Ap.cols() == 7);
  CHECK((A * Ap * A - A).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((Ap * A * Ap - Ap).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(((A * Ap) - (A * Ap).transpose()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(((Ap * A) - (Ap * A).transpose()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pinv of a zero matrix is the zero matrix of transposed shape") {
  const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(3, 5);
  Eigen::Index rank = 7;
  const Eigen::MatrixXd Zp = pinv(Z, std::nullopt, &rank);
  CHECK(rank == 0);
  CHECK(Zp.rows() == 5);
  CHECK(Zp.cols() == 3);
  CHECK(Zp.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pinv inverts invertible matrices") {
  Rng rng(11);
  const Eigen::MatrixXd A =
      random_matrix(5, 5, rng) + 5.0 * Eigen::MatrixXd::Identity(5, 5);
  const Eigen::MatrixXd Ap = pinv(A);
  CHECK((Ap * A - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("numerical_rank sees through products and tolerances") {
  Rng rng(3);
  const Eigen::MatrixXd A = random_matrix(6, 2, rng) * random_matrix(2, 6, rng);
  CHECK(numerical_rank(A) == 2);
  CHECK(numerical_rank(Eigen::MatrixXd::Identity(4, 4)) == 4);
  CHECK(numerical_rank(Eigen::MatrixXd::Zero(3, 3)) == 0);
  // A generous tolerance collapses small directions.
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(3, 3);
  B(2, 2) = 1e-9;
  CHECK(numerical_rank(B, 1e-6) == 2);
  CHECK(numerical_rank(B, 1e-12) == 3);
}

TEST_CASE("solve_square returns the exact solution and a sane rcond") {
  Rng rng(19);
  const Eigen::MatrixXd A =
      random_matrix(6, 6, rng) + 6.0 * Eigen::MatrixXd::Identity(6, 6);
  const Eigen::MatrixXd B = random_matrix(6, 2, rng);
  const SquareSolve sol = solve_square(A, B);
  CHECK((A * sol.X - B).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(sol.rcond > 1e-6);
}

TEST_CASE("solve_square rejects singular systems with the measured rcond") {
  Eigen::MatrixXd A(2, 2);
  A << 1.0, 2.0, 2.0, 4.0;
  const Eigen::MatrixXd b = Eigen::MatrixXd::Ones(2, 1);
  CHECK_THROWS_AS(solve_square(A, b), SingularMatrix);
  try {
    solve_square(A, b);
  } catch (const SingularMatrix& e) {
    CHECK(e.rcond < 1e-12);
    CHECK(e.code() == ErrorCode::singular_matrix);
  }
}

TEST_CASE("default_tolerance is the documented fallback") {
  CHECK(default_tolerance() == doctest::Approx(1e-10));
}

TEST_CASE("BlockLayout tracks offsets, widths and segments") {
  BlockLayout layout;
  layout.append("u_ini", 4).append("y_ini", 4).append("u_1", 2);
  CHECK(layout.total() == 10);
  CHECK(layout.size() == 3);
  CHECK(layout.contains("y_ini"));
  CHECK(!layout.contains("x"));
  CHECK(layout.span("u_ini").offset == 0);
  CHECK(layout.span("y_ini").offset == 4);
  CHECK(layout.span("u_1").offset == 8);
  CHECK(layout.span("u_1").width == 2);

  Eigen::VectorXd v(10);
  for (int i = 0; i < 10; ++i) v(i) = i;
  const auto y_span = layout.span("y_ini");
  const Eigen::VectorXd seg = v.segment(y_span.offset, y_span.width);
  CHECK(seg.size() == 4);
  CHECK(seg(0) == 4.0);
  CHECK(seg(3) == 7.0);

  CHECK(layout.segment(1).first == "y_ini");
  const std::vector<Eigen::Index> idx = layout.indices({"u_ini", "u_1"});
  REQUIRE(idx.size() == 6);
  CHECK(idx[0] == 0);
  CHECK(idx[4] == 8);
  CHECK(idx[5] == 9);

  CHECK_THROWS_AS(layout.span("nope"), InvalidInput);
  CHECK_THROWS_AS(BlockLayout().append("a", 0), InvalidInput);
  CHECK_THROWS_AS(BlockLayout().append("a", 1).append("a", 2), InvalidInput);
}

TEST_CASE("Rng streams are deterministic per seed and uniform bounds hold") {
  Rng a(42), b(42), c(43);
  bool same = true, diff = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform(-5.0, 5.0);
    same = same && (x == b.uniform(-5.0, 5.0));
    diff = diff || (x != c.uniform(-5.0, 5.0));
    CHECK(x >= -5.0);
    CHECK(x < 5.0);
  }
  CHECK(same);
  CHECK(diff);
}
