#pragma once

#include <stdexcept>
#include <string>

namespace gamekit {

// Error identity shared across the library. The codes mirror the status
// values of the C boundary so exceptions can cross it without losing which
// failure occurred.
enum class ErrorCode : int {
  invalid_input = 1,
  io_error = 2,
  not_observable = 3,
  certification_failed = 4,
  rank_shortfall = 5,
  singular_matrix = 6,
  singular_stage = 7,
  inconsistent_initial_data = 8,
  no_convergence = 9,
  diverged = 10,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct InvalidInput final : Error {
  explicit InvalidInput(const std::string& w) : Error(ErrorCode::invalid_input, w) {}
};

struct IoError final : Error {
  explicit IoError(const std::string& w) : Error(ErrorCode::io_error, w) {}
};

// No finite window length determines the internal state uniquely.
struct NotObservable final : Error {
  explicit NotObservable(const std::string& w) : Error(ErrorCode::not_observable, w) {}
};

// The offline data failed the depth-(T_ini + T) richness certificate.
struct CertificationFailed final : Error {
  explicit CertificationFailed(const std::string& w) : Error(ErrorCode::certification_failed, w) {}
};

struct RankShortfall final : Error {
  RankShortfall(const std::string& w, long long rank_found, long long rank_required)
      : Error(ErrorCode::rank_shortfall, w), rank_found(rank_found), rank_required(rank_required) {}
  long long rank_found;
  long long rank_required;
};

// A square solve met a matrix that is singular to working precision. Carries
// the reciprocal condition estimate that triggered the rejection.
struct SingularMatrix final : Error {
  SingularMatrix(const std::string& w, double rcond) : Error(ErrorCode::singular_matrix, w), rcond(rcond) {}
  double rcond;
};

struct InconsistentInitialData final : Error {
  InconsistentInitialData(const std::string& w, double residual)
      : Error(ErrorCode::inconsistent_initial_data, w), residual(residual) {}
  double residual;
};

struct NoConvergence final : Error {
  NoConvergence(const std::string& w, int horizon) : Error(ErrorCode::no_convergence, w), horizon(horizon) {}
  int horizon;
};

struct Diverged final : Error {
  Diverged(const std::string& w, long long stage) : Error(ErrorCode::diverged, w), stage(stage) {}
  long long stage;
};

}  // namespace gamekit
