#include "gamekit/behavior.hpp"

#include "gamekit/errors.hpp"

#include <sstream>

namespace gamekit {

Eigen::MatrixXd hankel(const Eigen::MatrixXd& series, int L) {
  if (L < 1) throw InvalidInput("hankel: depth must be positive");
  const Eigen::Index r = series.rows();
  const Eigen::Index len = series.cols();
  if (r < 1) throw InvalidInput("hankel: series has no channels");
  if (len < L)
    throw InvalidInput("hankel: series of length " + std::to_string(len) +
                       " is shorter than depth " + std::to_string(L));

  const Eigen::Index cols = len - L + 1;
  Eigen::MatrixXd H(r * L, cols);
  for (int block = 0; block < L; ++block)
    H.middleRows(block * r, r) = series.middleCols(block, cols);
  return H;
}

Eigen::MatrixXd hankel_mosaic(const std::vector<Eigen::MatrixXd>& series, int L) {
  if (series.empty()) throw InvalidInput("hankel_mosaic: no records");
  const Eigen::Index r = series.front().rows();
  Eigen::Index cols = 0;
  for (const auto& s : series) {
    if (s.rows() != r) throw InvalidInput("hankel_mosaic: records have differing channel counts");
    if (s.cols() < L)
      throw InvalidInput("hankel_mosaic: a record is shorter than depth " + std::to_string(L));
    cols += s.cols() - L + 1;
  }
  Eigen::MatrixXd H(r * L, cols);
  Eigen::Index at = 0;
  for (const auto& s : series) {
    const Eigen::Index c = s.cols() - L + 1;
    H.middleCols(at, c) = hankel(s, L);
    at += c;
  }
  return H;
}

std::string CertificationReport::summary() const {
  std::ostringstream os;
  os << "depth L=" << L << ": rank " << rank << " of " << required << " required over " << columns
     << " columns -> " << (pass ? "certified" : "FAILED");
  for (const auto& r : rejected) os << "\n  rejected record: " << r;
  return os.str();
}

namespace {

// Interleaved channel stack col(u_t, y_t) per sample, the joint signal whose
// Hankel rank certifies the data.
Eigen::MatrixXd joint_signal(const Trajectory& traj) {
  Eigen::MatrixXd w(traj.u.rows() + traj.y.rows(), traj.length());
  w.topRows(traj.u.rows()) = traj.u;
  w.bottomRows(traj.y.rows()) = traj.y;
  return w;
}

}  // namespace

CertificationReport check_excitation(const std::vector<Trajectory>& data, int T_ini, int T,
                                      int n_states, std::optional<double> tol) {
  if (T_ini < 1 || T < 1) throw InvalidInput("check_excitation: T_ini and T must be positive");
  if (n_states < 1) throw InvalidInput("check_excitation: state dimension must be positive");
  if (data.empty()) throw InvalidInput("check_excitation: no data records");

  const Eigen::Index m = data.front().u.rows();
  const int L = T_ini + T;

  CertificationReport report;
  report.L = L;
  report.required = m * L + n_states;
  report.tol = tol.value_or(default_tolerance());

  std::vector<Eigen::MatrixXd> usable;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const Trajectory& rec = data[k];
    rec.validate();
    if (rec.u.rows() != m || rec.y.rows() != data.front().y.rows()) {
      report.rejected.push_back("record " + std::to_string(k + 1) + ": channel counts differ from record 1");
      continue;
    }
    if (rec.length() < L) {
      report.rejected.push_back("record " + std::to_string(k + 1) + ": length " +
                                std::to_string(rec.length()) + " below depth " + std::to_string(L));
      continue;
    }
    usable.push_back(joint_signal(rec));
  }

  if (usable.empty()) {
    report.pass = false;
    return report;
  }

  const Eigen::MatrixXd H = hankel_mosaic(usable, L);
  report.columns = H.cols();
  report.rank = numerical_rank(H, report.tol);
  report.pass = report.rank == report.required;
  return report;
}

HankelBlocks partition(const std::vector<Trajectory>& data, int T_ini, int T,
                       const PartitionOptions& opts) {
  if (T_ini < 1 || T < 1) throw InvalidInput("partition: T_ini and T must be positive");
  if (data.empty()) throw InvalidInput("partition: no data records");

  HankelBlocks out;
  out.dims.m = static_cast<int>(data.front().u.rows());
  out.dims.p = static_cast<int>(data.front().y.rows());
  out.dims.T_ini = T_ini;
  out.dims.T = T;
  const int L = T_ini + T;

  if (!opts.skip_certification) {
    if (opts.n_states < 1)
      throw InvalidInput("partition: state dimension needed for certification (or bypass explicitly)");
    out.certificate = check_excitation(data, T_ini, T, opts.n_states, opts.tol);
    if (!out.certificate.pass)
      throw CertificationFailed("partition: offline data failed the rank certificate: " +
                                out.certificate.summary());
  }

  std::vector<Eigen::MatrixXd> u_records, y_records;
  for (const auto& rec : data) {
    rec.validate();
    if (rec.u.rows() != out.dims.m || rec.y.rows() != out.dims.p)
      throw InvalidInput("partition: records have differing channel counts");
    if (rec.length() < L) continue;  // certification already reported these
    u_records.push_back(rec.u);
    y_records.push_back(rec.y);
  }
  if (u_records.empty()) throw InvalidInput("partition: no record is long enough for depth " + std::to_string(L));

  const Eigen::MatrixXd Hu = hankel_mosaic(u_records, L);
  const Eigen::MatrixXd Hy = hankel_mosaic(y_records, L);
  out.Up = Hu.topRows(T_ini * out.dims.m);
  out.Uf = Hu.bottomRows(T * out.dims.m);
  out.Yp = Hy.topRows(T_ini * out.dims.p);
  out.Yf = Hy.bottomRows(T * out.dims.p);
  return out;
}

BlockLayout stacked_layout(const HankelDims& dims, int t) {
  if (t < 1) throw InvalidInput("stacked_layout: stage must be positive");
  BlockLayout layout;
  layout.append("u_ini", static_cast<Eigen::Index>(dims.m) * dims.T_ini);
  layout.append("y_ini", static_cast<Eigen::Index>(dims.p) * dims.T_ini);
  for (int k = 1; k < t; ++k) layout.append("u_" + std::to_string(k), dims.m);
  return layout;
}

const Eigen::MatrixXd& PredictorFamily::at(int t) const {
  if (t < 1 || static_cast<std::size_t>(t) > G.size())
    throw InvalidInput("PredictorFamily: stage " + std::to_string(t) + " out of range");
  return G[static_cast<std::size_t>(t) - 1];
}

BlockLayout PredictorFamily::layout(int t) const {
  BlockLayout l = stacked_layout(dims, t);
  l.append("u_" + std::to_string(t), dims.m);
  return l;
}

PredictorFamily predictors(const HankelBlocks& blocks, std::optional<double> tol) {
  const HankelDims& d = blocks.dims;
  PredictorFamily fam;
  fam.dims = d;
  fam.G.reserve(d.T);

  const Eigen::Index base = blocks.Up.rows() + blocks.Yp.rows();
  const Eigen::Index cols = blocks.Up.cols();
  for (int t = 1; t <= d.T; ++t) {
    Eigen::MatrixXd M(base + static_cast<Eigen::Index>(t) * d.m, cols);
    M.topRows(blocks.Up.rows()) = blocks.Up;
    M.middleRows(blocks.Up.rows(), blocks.Yp.rows()) = blocks.Yp;
    M.bottomRows(static_cast<Eigen::Index>(t) * d.m) = blocks.Uf.topRows(static_cast<Eigen::Index>(t) * d.m);
    fam.G.push_back(blocks.Yf.middleRows(static_cast<Eigen::Index>(t - 1) * d.p, d.p) * pinv(M, tol));
  }
  return fam;
}

BehaviorBasis behavior_basis(const std::vector<Trajectory>& data, int T_ini,
                             std::optional<int> n_states, std::optional<int> lag_hint,
                             std::optional<double> tol) {
  if (T_ini < 1) throw InvalidInput("behavior_basis: T_ini must be positive");
  if (data.empty()) throw InvalidInput("behavior_basis: no data records");

  const Eigen::Index m = data.front().u.rows();
  const Eigen::Index p = data.front().y.rows();
  std::vector<Eigen::MatrixXd> u_records, y_records;
  for (const auto& rec : data) {
    rec.validate();
    if (rec.u.rows() != m || rec.y.rows() != p)
      throw InvalidInput("behavior_basis: records have differing channel counts");
    if (rec.length() < T_ini) continue;
    u_records.push_back(rec.u);
    y_records.push_back(rec.y);
  }
  if (u_records.empty()) throw InvalidInput("behavior_basis: no record reaches length T_ini");

  Eigen::MatrixXd H(T_ini * (m + p), 0);
  {
    const Eigen::MatrixXd Hu = hankel_mosaic(u_records, T_ini);
    const Eigen::MatrixXd Hy = hankel_mosaic(y_records, T_ini);
    H.resize(Hu.rows() + Hy.rows(), Hu.cols());
    H.topRows(Hu.rows()) = Hu;
    H.bottomRows(Hy.rows()) = Hy;
  }

  const Eigen::Index r = numerical_rank(H, tol);
  if (n_states) {
    const Eigen::Index expected = m * T_ini + *n_states;
    if (r != expected)
      throw RankShortfall("behavior_basis: window space has rank " + std::to_string(r) +
                              ", expected " + std::to_string(expected) +
                              "; the offline data does not span the feasible windows",
                          r, expected);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(H);
  Eigen::MatrixXd Q = qr.householderQ();

  BehaviorBasis out;
  out.m = static_cast<int>(m);
  out.p = static_cast<int>(p);
  out.T_ini = T_ini;
  out.basis = Q.leftCols(r);
  if (lag_hint) {
    if (T_ini < *lag_hint)
      out.warning = "T_ini is below the lag; windows do not determine the state uniquely";
    else if (T_ini == *lag_hint)
      out.warning = "T_ini equals the lag; windows pin the state down with no redundancy margin";
  }
  return out;
}

double window_infeasibility(const BehaviorBasis& basis, const Eigen::VectorXd& window) {
  if (window.size() != basis.basis.rows())
    throw InvalidInput("window_infeasibility: window has wrong size");
  return (window - basis.basis * (basis.basis.transpose() * window)).norm();
}

Eigen::VectorXi newest_first_window_permutation(int m, int p, int T_ini) {
  if (m < 1 || p < 1 || T_ini < 1)
    throw InvalidInput("newest_first_window_permutation: dimensions must be positive");
  Eigen::VectorXi perm(T_ini * (m + p));
  Eigen::Index at = 0;
  for (int b = 0; b < T_ini; ++b)  // newest input block first
    for (int i = 0; i < m; ++i) perm(at++) = (T_ini - 1 - b) * m + i;
  const int y0 = m * T_ini;
  for (int b = 0; b < T_ini; ++b)
    for (int i = 0; i < p; ++i) perm(at++) = y0 + (T_ini - 1 - b) * p + i;
  return perm;
}

Eigen::VectorXd window_to_newest_first(const Eigen::VectorXd& window, int m, int p, int T_ini) {
  const Eigen::VectorXi perm = newest_first_window_permutation(m, p, T_ini);
  if (window.size() != perm.size()) throw InvalidInput("window_to_newest_first: window has wrong size");
  Eigen::VectorXd out(window.size());
  for (Eigen::Index k = 0; k < perm.size(); ++k) out(k) = window(perm(k));
  return out;
}

Eigen::MatrixXd window_gain_to_newest_first(const Eigen::MatrixXd& K, int m, int p, int T_ini) {
  const Eigen::VectorXi perm = newest_first_window_permutation(m, p, T_ini);
  if (K.cols() != perm.size()) throw InvalidInput("window_gain_to_newest_first: gain has wrong width");
  Eigen::MatrixXd out(K.rows(), K.cols());
  for (Eigen::Index k = 0; k < perm.size(); ++k) out.col(k) = K.col(perm(k));
  return out;
}

}  // namespace gamekit
