#pragma once

#include "gamekit/lti.hpp"
#include "gamekit/numerics.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace gamekit {

// Block-Hankel matrix of a signal (rows = channels, cols = time) with L block
// rows. The series must be at least L samples long.
Eigen::MatrixXd hankel(const Eigen::MatrixXd& series, int L);

// Horizontal concatenation of the per-record Hankel matrices. Every record
// must be long enough; callers that tolerate short records filter first.
Eigen::MatrixXd hankel_mosaic(const std::vector<Eigen::MatrixXd>& series, int L);

struct HankelDims {
  int m = 0;      // input channels
  int p = 0;      // output channels
  int T_ini = 0;  // window length
  int T = 0;      // prediction horizon
  int L() const { return T_ini + T; }
};

// Outcome of the offline-data richness certificate: the joint input/output
// Hankel matrix of depth L = T_ini + T must have rank m*L + n. This reports
// rather than throws so callers can print the table before deciding.
struct CertificationReport {
  int L = 0;
  Eigen::Index rank = 0;
  Eigen::Index required = 0;
  Eigen::Index columns = 0;  // usable Hankel columns across records
  double tol = 0.0;
  bool pass = false;
  std::vector<std::string> rejected;  // reasons for records excluded from the mosaic
  std::string summary() const;
};

CertificationReport check_excitation(const std::vector<Trajectory>& data, int T_ini, int T,
                                      int n_states, std::optional<double> tol = std::nullopt);

// The four data blocks the solver consumes: depth-L Hankel matrices of inputs
// and outputs, split at T_ini block rows into past and future.
struct HankelBlocks {
  HankelDims dims;
  Eigen::MatrixXd Up, Yp;  // T_ini*m resp. T_ini*p rows
  Eigen::MatrixXd Uf, Yf;  // T*m resp. T*p rows
  CertificationReport certificate;
};

struct PartitionOptions {
  int n_states = -1;                // state dimension for the certificate
  bool skip_certification = false;  // explicitly unsafe; for exploration only
  std::optional<double> tol;
};

// Builds the blocks and certifies the data on the way (unless explicitly
// bypassed). Throws CertificationFailed when the rank condition fails.
HankelBlocks partition(const std::vector<Trajectory>& data, int T_ini, int T,
                       const PartitionOptions& opts);

// Layout of the stacked decision vector of stage t,
//   U_{t-1} = col(u_ini, y_ini, u_1, ..., u_{t-1}),
// all segments oldest-first. Width T_ini(m+p) + (t-1)m.
BlockLayout stacked_layout(const HankelDims& dims, int t);

// One multistep predictor per stage: y_t = G_t col(U_{t-1}, u_t). G_t depends
// only on the system behavior, not on the particular certified dataset.
struct PredictorFamily {
  HankelDims dims;
  std::vector<Eigen::MatrixXd> G;  // G[t-1] is p x (T_ini(m+p) + t*m)

  const Eigen::MatrixXd& at(int t) const;  // 1-based stage
  BlockLayout layout(int t) const;         // columns of G_t: U_{t-1} then u_t
};

PredictorFamily predictors(const HankelBlocks& blocks, std::optional<double> tol = std::nullopt);

// Orthonormal basis of the set of feasible T_ini-step windows, stacked inputs
// over outputs (each oldest-first). Dimension is m*T_ini + n once T_ini
// reaches the lag.
struct BehaviorBasis {
  int m = 0, p = 0, T_ini = 0;
  Eigen::MatrixXd basis;  // (T_ini*(m+p)) x r, orthonormal columns
  std::string warning;    // nonempty when T_ini does not exceed the known lag

  Eigen::Index rank() const { return basis.cols(); }
};

// n_states, when given, turns the dimension count into a hard check
// (RankShortfall on mismatch). lag_hint, when given, only produces the
// warning above; windows at exactly the lag length are usable but leave no
// redundancy for the consistency checks downstream.
BehaviorBasis behavior_basis(const std::vector<Trajectory>& data, int T_ini,
                             std::optional<int> n_states = std::nullopt,
                             std::optional<int> lag_hint = std::nullopt,
                             std::optional<double> tol = std::nullopt);

// Distance from a stacked window to the feasible set, ||w - BB^T w||_2.
double window_infeasibility(const BehaviorBasis& basis, const Eigen::VectorXd& window);

// Reporting-order helpers. The canonical in-memory order is oldest-first;
// published tables list windows newest-first. perm[k] gives the canonical
// index shown at newest-first position k.
Eigen::VectorXi newest_first_window_permutation(int m, int p, int T_ini);
Eigen::VectorXd window_to_newest_first(const Eigen::VectorXd& window, int m, int p, int T_ini);
// Column permutation of a gain acting on a window, K_newest = K_canonical o perm.
Eigen::MatrixXd window_gain_to_newest_first(const Eigen::MatrixXd& K, int m, int p, int T_ini);

}  // namespace gamekit
