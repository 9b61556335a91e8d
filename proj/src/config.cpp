#include "gamekit/config.hpp"

#include "gamekit/errors.hpp"

#include <fstream>
#include <set>

namespace gamekit {

using nlohmann::json;

Eigen::MatrixXd json_to_matrix(const json& j, const std::string& what) {
  if (j.is_number()) {  // scalar shorthand for 1x1
    Eigen::MatrixXd M(1, 1);
    M(0, 0) = j.get<double>();
    return M;
  }
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw InvalidInput("config: " + what + " must be a matrix (array of rows) or a scalar");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw InvalidInput("config: " + what + " has ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number())
        throw InvalidInput("config: " + what + " has a non-numeric entry");
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return M;
}

Eigen::VectorXd json_to_vector(const json& j, const std::string& what) {
  if (j.is_number()) {
    Eigen::VectorXd v(1);
    v(0) = j.get<double>();
    return v;
  }
  if (!j.is_array() || j.empty())
    throw InvalidInput("config: " + what + " must be a nonempty array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw InvalidInput("config: " + what + " has a non-numeric entry");
    v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
  }
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw InvalidInput("config: unknown key '" + it.key() + "' in " + where);
}

LtiSystem parse_system(const json& j) {
  reject_unknown_keys(j, {"A", "B", "C", "D"}, "system");
  for (const char* key : {"A", "B", "C", "D"})
    if (!j.contains(key)) throw InvalidInput(std::string("config: system: missing ") + key);
  LtiSystem sys{json_to_matrix(j["A"], "system.A"), json_to_matrix(j["B"], "system.B"),
                json_to_matrix(j["C"], "system.C"), json_to_matrix(j["D"], "system.D")};
  sys.validate();
  return sys;
}

ReferenceTraj parse_ref(const json& j, Eigen::Index p) {
  if (j.is_null()) return ReferenceTraj::zero(p);
  if (j.is_string()) {
    if (j.get<std::string>() == "zero") return ReferenceTraj::zero(p);
    throw InvalidInput("config: ref string must be \"zero\"");
  }
  if (j.is_array() && !j.empty() && j[0].is_array()) {
    // list of per-stage vectors
    const Eigen::MatrixXd stages = json_to_matrix(j, "ref").transpose();  // p x T
    if (stages.rows() != p) throw InvalidInput("config: per-stage ref entries must have length p");
    return ReferenceTraj::per_stage(stages);
  }
  const Eigen::VectorXd v = json_to_vector(j, "ref");
  if (v.size() != p) throw InvalidInput("config: constant ref must have length p");
  return ReferenceTraj::constant(v);
}

GameSpec parse_game(const json& j) {
  reject_unknown_keys(j, {"input_partition", "outputs", "T_ini", "players"}, "game");
  GameSpec spec;
  if (!j.contains("input_partition") || !j["input_partition"].is_array())
    throw InvalidInput("config: game.input_partition must be an array of widths");
  for (const auto& w : j["input_partition"]) {
    if (!w.is_number_integer() || w.get<int>() < 1)
      throw InvalidInput("config: game.input_partition entries must be positive integers");
    spec.partition.push_back(w.get<int>());
  }
  if (!j.contains("outputs") || !j["outputs"].is_number_integer())
    throw InvalidInput("config: game.outputs must be an integer");
  spec.p = j["outputs"].get<int>();
  if (!j.contains("T_ini") || !j["T_ini"].is_number_integer())
    throw InvalidInput("config: game.T_ini must be an integer");
  spec.T_ini = j["T_ini"].get<int>();

  if (!j.contains("players") || !j["players"].is_array() || j["players"].empty())
    throw InvalidInput("config: game.players must be a nonempty array");
  for (std::size_t i = 0; i < j["players"].size(); ++i) {
    const json& pj = j["players"][i];
    const std::string who = "game.players[" + std::to_string(i) + "]";
    reject_unknown_keys(pj, {"Q", "ref", "R", "delta"}, who);
    PlayerCost cost;
    if (!pj.contains("Q")) throw InvalidInput("config: " + who + ": missing Q");
    cost.Q = json_to_matrix(pj["Q"], who + ".Q");
    cost.ref = parse_ref(pj.contains("ref") ? pj["ref"] : json(), spec.p);
    if (!pj.contains("R") || !pj["R"].is_array())
      throw InvalidInput("config: " + who + ": R must be an array with one block per player");
    for (std::size_t b = 0; b < pj["R"].size(); ++b)
      cost.R.push_back(json_to_matrix(pj["R"][b], who + ".R[" + std::to_string(b) + "]"));
    if (pj.contains("delta")) {
      if (!pj["delta"].is_number()) throw InvalidInput("config: " + who + ".delta must be a number");
      cost.delta = pj["delta"].get<double>();
    }
    spec.players.push_back(std::move(cost));
  }
  spec.validate();
  return spec;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  reject_unknown_keys(j,
                      {"system", "game", "n_states", "horizon", "sweep", "receding", "data",
                       "window", "out_dir", "tolerance", "jobs", "plot", "best_response"},
                      "top level");
  ExperimentConfig cfg;

  if (j.contains("system")) cfg.system = parse_system(j["system"]);
  if (!j.contains("game")) throw InvalidInput("config: missing game section");
  cfg.game = parse_game(j["game"]);

  if (cfg.system) {
    if (cfg.system->m() != cfg.game.m() || cfg.system->p() != cfg.game.p)
      throw InvalidInput("config: system channel counts differ from the game spec");
    cfg.n_states = static_cast<int>(cfg.system->n());
  }
  if (j.contains("n_states")) {
    if (!j["n_states"].is_number_integer() || j["n_states"].get<int>() < 1)
      throw InvalidInput("config: n_states must be a positive integer");
    cfg.n_states = j["n_states"].get<int>();
  }

  if (j.contains("horizon")) {
    if (!j["horizon"].is_number_integer() || j["horizon"].get<int>() < 1)
      throw InvalidInput("config: horizon must be a positive integer");
    cfg.horizon = j["horizon"].get<int>();
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    reject_unknown_keys(s, {"T_min", "T_max", "eps"}, "sweep");
    if (s.contains("T_min")) cfg.sweep.T_min = s["T_min"].get<int>();
    if (s.contains("T_max")) cfg.sweep.T_max = s["T_max"].get<int>();
    if (s.contains("eps")) cfg.eps = s["eps"].get<double>();
    if (cfg.sweep.T_min < 1 || cfg.sweep.T_max < cfg.sweep.T_min)
      throw InvalidInput("config: sweep range must satisfy 1 <= T_min <= T_max");
  }
  if (j.contains("receding")) {
    const json& r = j["receding"];
    reject_unknown_keys(r, {"M"}, "receding");
    if (r.contains("M")) cfg.M = r["M"].get<int>();
    if (cfg.M < 1) throw InvalidInput("config: receding.M must be positive");
  }

  if (j.contains("data")) {
    const json& d = j["data"];
    reject_unknown_keys(d, {"files", "generate", "out"}, "data");
    if (d.contains("files")) {
      if (!d["files"].is_array()) throw InvalidInput("config: data.files must be an array of paths");
      for (const auto& f : d["files"]) cfg.data_files.push_back(f.get<std::string>());
    }
    if (d.contains("generate")) {
      const json& g = d["generate"];
      reject_unknown_keys(g, {"length", "amplitude", "seed", "x1"}, "data.generate");
      OfflineDataOptions recipe;
      if (g.contains("length")) recipe.length = g["length"].get<Eigen::Index>();
      if (g.contains("amplitude")) recipe.amplitude = g["amplitude"].get<double>();
      if (g.contains("seed")) recipe.seed = g["seed"].get<std::uint64_t>();
      if (g.contains("x1")) recipe.x1 = json_to_vector(g["x1"], "data.generate.x1");
      cfg.recipe = recipe;
    }
    if (d.contains("out")) cfg.data_out = d["out"].get<std::string>();
  }

  if (j.contains("window")) {
    const json& w = j["window"];
    reject_unknown_keys(w, {"u_ini", "y_ini", "x1"}, "window");
    if (w.contains("u_ini")) cfg.u_ini = json_to_vector(w["u_ini"], "window.u_ini");
    if (w.contains("y_ini")) cfg.y_ini = json_to_vector(w["y_ini"], "window.y_ini");
    if (w.contains("x1")) cfg.x1 = json_to_vector(w["x1"], "window.x1");
    if (cfg.y_ini && !cfg.u_ini)
      throw InvalidInput("config: window.y_ini without window.u_ini");
    if (cfg.u_ini && !cfg.y_ini && !cfg.x1)
      throw InvalidInput("config: window.u_ini alone needs window.x1 to construct outputs");
  }

  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("tolerance")) {
    cfg.tol = j["tolerance"].get<double>();
    if (*cfg.tol <= 0.0) throw InvalidInput("config: tolerance must be positive");
  }
  if (j.contains("jobs")) {
    cfg.jobs = j["jobs"].get<int>();
    if (cfg.jobs < 1) throw InvalidInput("config: jobs must be positive");
  }
  if (j.contains("plot")) cfg.plot = j["plot"].get<bool>();
  if (j.contains("best_response")) {
    const json& b = j["best_response"];
    reject_unknown_keys(b, {"trials", "seed"}, "best_response");
    if (b.contains("trials")) cfg.br_trials = b["trials"].get<int>();
    if (b.contains("seed")) cfg.br_seed = b["seed"].get<std::uint64_t>();
    if (cfg.br_trials < 1) throw InvalidInput("config: best_response.trials must be positive");
  }

  // Window sizes, when given, must fit the game dimensions.
  const Eigen::Index mw = static_cast<Eigen::Index>(cfg.game.T_ini) * cfg.game.m();
  const Eigen::Index pw = static_cast<Eigen::Index>(cfg.game.T_ini) * cfg.game.p;
  if (cfg.u_ini && cfg.u_ini->size() != mw)
    throw InvalidInput("config: window.u_ini must have length T_ini * m");
  if (cfg.y_ini && cfg.y_ini->size() != pw)
    throw InvalidInput("config: window.y_ini must have length T_ini * p");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("load_config: cannot open '" + path + "'");
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw IoError("load_config: '" + path + "' is not valid JSON: " + e.what());
  }
  try {
    return parse_config(j);
  } catch (const json::exception& e) {
    throw InvalidInput("load_config: '" + path + "': " + e.what());
  }
}

}  // namespace gamekit
