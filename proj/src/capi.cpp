#include "gamekit.h"

#include "gamekit/behavior.hpp"
#include "gamekit/errors.hpp"
#include "gamekit/experiment.hpp"
#include "gamekit/fne_dd.hpp"

#include <cstring>
#include <exception>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

thread_local std::string g_last_error;

gk_status status_of(const gamekit::Error& e) {
  using gamekit::ErrorCode;
  switch (e.code()) {
    case ErrorCode::invalid_input:
    case ErrorCode::not_observable:
      return GK_ERR_INVALID;
    case ErrorCode::io_error:
      return GK_ERR_IO;
    case ErrorCode::certification_failed:
    case ErrorCode::rank_shortfall:
      return GK_ERR_CERTIFICATION;
    case ErrorCode::singular_matrix:
    case ErrorCode::singular_stage:
      return GK_ERR_SINGULAR;
    case ErrorCode::inconsistent_initial_data:
      return GK_ERR_INCONSISTENT;
    case ErrorCode::no_convergence:
      return GK_ERR_NO_CONVERGENCE;
    case ErrorCode::diverged:
      return GK_ERR_DIVERGED;
  }
  return GK_ERR_INTERNAL;
}

template <class Fn>
gk_status guarded(Fn&& fn) {
  try {
    fn();
    return GK_OK;
  } catch (const gamekit::Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GK_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return GK_ERR_INTERNAL;
  }
}

gk_status fail(gk_status s, const std::string& message) {
  g_last_error = message;
  return s;
}

int parse_int(const char* value, const char* key) {
  try {
    return std::stoi(value);
  } catch (...) {
    throw gamekit::InvalidInput(std::string("value for '") + key + "' is not an integer: " + value);
  }
}

double parse_double(const char* value, const char* key) {
  try {
    return std::stod(value);
  } catch (...) {
    throw gamekit::InvalidInput(std::string("value for '") + key + "' is not a number: " + value);
  }
}

}  // namespace

struct gk_experiment {
  gamekit::ExperimentConfig cfg;
  std::vector<int> depths;
  std::string report;
  std::string report_json;
};

struct gk_session {
  gamekit::ExperimentConfig cfg;
  std::vector<gamekit::Trajectory> data;
  std::optional<gamekit::FneSolution> solution;
  Eigen::VectorXd values;
};

extern "C" {

int gk_exit_code(gk_status status) {
  switch (status) {
    case GK_OK:
      return 0;
    case GK_ERR_CERTIFICATION:
      return 2;
    case GK_ERR_SINGULAR:
      return 3;
    case GK_ERR_MISMATCH:
      return 4;
    default:
      return 1;
  }
}

const char* gk_status_name(gk_status status) {
  switch (status) {
    case GK_OK:
      return "ok";
    case GK_ERR_INVALID:
      return "invalid input";
    case GK_ERR_IO:
      return "io error";
    case GK_ERR_CERTIFICATION:
      return "certification failed";
    case GK_ERR_SINGULAR:
      return "singular stage";
    case GK_ERR_INCONSISTENT:
      return "inconsistent initial window";
    case GK_ERR_NO_CONVERGENCE:
      return "no convergence";
    case GK_ERR_DIVERGED:
      return "diverged";
    case GK_ERR_MISMATCH:
      return "verification mismatch";
    case GK_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown";
}

const char* gk_last_error(void) { return g_last_error.c_str(); }

const char* gk_version(void) { return "0.1.0"; }

gk_status gk_experiment_open(const char* config_path, gk_experiment** out) {
  if (!config_path || !out) return fail(GK_ERR_INVALID, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto e = std::make_unique<gk_experiment>();
    e->cfg = gamekit::load_config(config_path);
    *out = e.release();
  });
}

gk_status gk_experiment_open_builtin(gk_experiment** out) {
  if (!out) return fail(GK_ERR_INVALID, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto e = std::make_unique<gk_experiment>();
    e->cfg = gamekit::builtin_study();
    *out = e.release();
  });
}

void gk_experiment_free(gk_experiment* e) { delete e; }

gk_status gk_experiment_set(gk_experiment* e, const char* key, const char* value) {
  if (!e || !key || !value) return fail(GK_ERR_INVALID, "null argument");
  return guarded([&] {
    const std::string k = key;
    auto& cfg = e->cfg;
    if (k == "T") {
      cfg.horizon = parse_int(value, key);
    } else if (k == "T_min") {
      cfg.sweep.T_min = parse_int(value, key);
    } else if (k == "T_max") {
      cfg.sweep.T_max = parse_int(value, key);
    } else if (k == "eps") {
      cfg.eps = parse_double(value, key);
    } else if (k == "M") {
      cfg.M = parse_int(value, key);
    } else if (k == "seed") {
      if (!cfg.recipe) cfg.recipe.emplace();
      cfg.recipe->seed = static_cast<std::uint64_t>(parse_int(value, key));
    } else if (k == "jobs") {
      cfg.jobs = parse_int(value, key);
    } else if (k == "plot") {
      cfg.plot = std::strcmp(value, "0") != 0 && std::strcmp(value, "false") != 0;
    } else if (k == "out_dir") {
      cfg.out_dir = value;
    } else if (k == "tol") {
      cfg.tol = parse_double(value, key);
    } else if (k == "depths") {
      e->depths.clear();
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) e->depths.push_back(parse_int(item.c_str(), key));
    } else {
      throw gamekit::InvalidInput("unknown override key '" + k + "'");
    }
  });
}

gk_status gk_experiment_run(gk_experiment* e, const char* command, int* exit_code_out) {
  if (!e || !command) return fail(GK_ERR_INVALID, "null argument");
  gamekit::CommandResult result;
  const gk_status st = guarded([&] {
    const std::string cmd = command;
    if (cmd == "gen-data")
      result = gamekit::cmd_gen_data(e->cfg);
    else if (cmd == "check")
      result = gamekit::cmd_check(e->cfg, e->depths);
    else if (cmd == "solve")
      result = gamekit::cmd_solve(e->cfg);
    else if (cmd == "sweep")
      result = gamekit::cmd_sweep(e->cfg);
    else if (cmd == "reproduce-paper")
      result = gamekit::cmd_reproduce(e->cfg);
    else
      throw gamekit::InvalidInput("unknown command '" + cmd + "'");
  });
  if (st != GK_OK) {
    if (exit_code_out) *exit_code_out = gk_exit_code(st);
    return st;
  }
  e->report = result.text;
  e->report_json = result.summary.dump(2);
  if (exit_code_out) *exit_code_out = result.exit_code;
  switch (result.exit_code) {
    case 0:
      return GK_OK;
    case 2:
      return fail(GK_ERR_CERTIFICATION, "data failed the rank certificate");
    case 3:
      return fail(GK_ERR_SINGULAR, "singular stage matrix");
    case 4:
      return fail(GK_ERR_MISMATCH, "a verification or comparison check failed");
    default:
      return fail(GK_ERR_INVALID, "command reported failure");
  }
}

const char* gk_experiment_report(const gk_experiment* e) {
  return e ? e->report.c_str() : "";
}

const char* gk_experiment_report_json(const gk_experiment* e) {
  return e ? e->report_json.c_str() : "";
}

gk_status gk_session_open(const char* config_path, gk_session** out) {
  if (!config_path || !out) return fail(GK_ERR_INVALID, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto s = std::make_unique<gk_session>();
    s->cfg = gamekit::load_config(config_path);
    *out = s.release();
  });
}

gk_status gk_session_open_builtin(gk_session** out) {
  if (!out) return fail(GK_ERR_INVALID, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto s = std::make_unique<gk_session>();
    s->cfg = gamekit::builtin_study();
    *out = s.release();
  });
}

void gk_session_free(gk_session* s) { delete s; }

gk_status gk_session_solve(gk_session* s, int T) {
  if (!s) return fail(GK_ERR_INVALID, "null session");
  if (T < 1) return fail(GK_ERR_INVALID, "horizon must be at least 1");
  return guarded([&] {
    if (s->data.empty()) {
      if (!s->cfg.data_files.empty()) {
        for (const auto& f : s->cfg.data_files) s->data.push_back(gamekit::read_trajectory_csv(f));
      } else if (s->cfg.recipe && s->cfg.system) {
        s->data.push_back(gamekit::generate_offline_data(*s->cfg.system, *s->cfg.recipe));
      } else {
        throw gamekit::InvalidInput("no data source configured");
      }
    }
    gamekit::PartitionOptions popts;
    popts.n_states = s->cfg.n_states;
    popts.tol = s->cfg.tol;
    const gamekit::HankelBlocks blocks = gamekit::partition(s->data, s->cfg.game.T_ini, T, popts);
    const gamekit::PredictorFamily pred = gamekit::predictors(blocks, s->cfg.tol);
    gamekit::SolveOptions sopts;
    sopts.tol = s->cfg.tol;
    s->solution = gamekit::solve_finite_fne(blocks, pred, s->cfg.game, T, sopts);
    const auto [u_ini, y_ini] = gamekit::initial_window(s->cfg);
    Eigen::VectorXd U0(u_ini.size() + y_ini.size());
    U0 << u_ini, y_ini;
    s->values = gamekit::value_function(*s->solution, U0);
  });
}

gk_status gk_session_players(const gk_session* s, int* out) {
  if (!s || !out) return fail(GK_ERR_INVALID, "null argument");
  *out = s->cfg.game.N();
  return GK_OK;
}

gk_status gk_session_horizon(const gk_session* s, int* out) {
  if (!s || !out) return fail(GK_ERR_INVALID, "null argument");
  if (!s->solution) return fail(GK_ERR_INVALID, "no solution yet; call gk_session_solve");
  *out = s->solution->T;
  return GK_OK;
}

gk_status gk_session_gain(const gk_session* s, int stage, int player, double* buf,
                          size_t* rows, size_t* cols) {
  if (!s || !rows || !cols) return fail(GK_ERR_INVALID, "null argument");
  if (!s->solution) return fail(GK_ERR_INVALID, "no solution yet; call gk_session_solve");
  return guarded([&] {
    if (stage < 1 || stage > s->solution->T)
      throw gamekit::InvalidInput("stage out of range");
    if (player < 1 || player > s->solution->N())
      throw gamekit::InvalidInput("player out of range");
    const Eigen::MatrixXd K = s->solution->player_gain(stage, player - 1);
    *rows = static_cast<size_t>(K.rows());
    *cols = static_cast<size_t>(K.cols());
    if (buf)
      for (Eigen::Index r = 0; r < K.rows(); ++r)
        for (Eigen::Index c = 0; c < K.cols(); ++c)
          buf[static_cast<size_t>(r * K.cols() + c)] = K(r, c);
  });
}

gk_status gk_session_offset(const gk_session* s, int stage, int player, double* buf,
                            size_t* len) {
  if (!s || !len) return fail(GK_ERR_INVALID, "null argument");
  if (!s->solution) return fail(GK_ERR_INVALID, "no solution yet; call gk_session_solve");
  return guarded([&] {
    if (stage < 1 || stage > s->solution->T)
      throw gamekit::InvalidInput("stage out of range");
    if (player < 1 || player > s->solution->N())
      throw gamekit::InvalidInput("player out of range");
    const Eigen::VectorXd L = s->solution->player_offset(stage, player - 1);
    *len = static_cast<size_t>(L.size());
    if (buf)
      for (Eigen::Index i = 0; i < L.size(); ++i) buf[static_cast<size_t>(i)] = L(i);
  });
}

gk_status gk_session_values(const gk_session* s, double* buf, size_t* len) {
  if (!s || !len) return fail(GK_ERR_INVALID, "null argument");
  if (!s->solution) return fail(GK_ERR_INVALID, "no solution yet; call gk_session_solve");
  *len = static_cast<size_t>(s->values.size());
  if (buf)
    for (Eigen::Index i = 0; i < s->values.size(); ++i) buf[static_cast<size_t>(i)] = s->values(i);
  return GK_OK;
}

}  // extern "C"
