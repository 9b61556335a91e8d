#include "doctest.h"

#include "gamekit/config.hpp"
#include "gamekit/errors.hpp"

#include <filesystem>
#include <fstream>

using namespace gamekit;
using nlohmann::json;

namespace {

json minimal_config() {
  return json::parse(R"({
    "system": {
      "A": [[0.9, 0.2, -0.6], [-0.4, 0.8, 0.2], [0.5, 0.3, 0.1]],
      "B": [[1.0, -0.3], [-2.0, 0.5], [-0.3, 0.3]],
      "C": [[-1.0, 0.3, -0.2], [-0.1, 0.5, 1.0]],
      "D": [[0.1, 0.5], [-0.4, 0.1]]
    },
    "game": {
      "input_partition": [1, 1],
      "outputs": 2,
      "T_ini": 2,
      "players": [
        {"Q": [[2.0, 0.2], [0.2, 2.0]], "ref": [-1.0, 0.3],
         "R": [0.5, -0.1], "delta": 0.8},
        {"Q": [[3.0, 0.5], [0.5, 3.0]], "ref": [0.4, -0.3],
         "R": [-0.3, 1.0], "delta": 0.9}
      ]
    },
    "horizon": 12,
    "data": {"generate": {"length": 400, "amplitude": 5.0, "seed": 1}}
  })");
}

}  // namespace

TEST_CASE("a full configuration parses into the expected structure") {
  const ExperimentConfig cfg = parse_config(minimal_config());
  REQUIRE(cfg.system.has_value());
  CHECK(cfg.system->n() == 3);
  CHECK(cfg.n_states == 3);
  CHECK(cfg.horizon == 12);
  CHECK(cfg.game.N() == 2);
  CHECK(cfg.game.T_ini == 2);
  CHECK(cfg.game.players[0].delta == doctest::Approx(0.8));
  // Scalar shorthand turned the R entries into 1x1 blocks.
  CHECK(cfg.game.players[0].R[1](0, 0) == doctest::Approx(-0.1));
  CHECK((cfg.game.players[1].ref.at(3) - Eigen::Vector2d(0.4, -0.3)).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(cfg.recipe.has_value());
  CHECK(cfg.recipe->length == 400);
  CHECK(cfg.recipe->seed == 1);
  CHECK(cfg.out_dir == "out");
  CHECK(cfg.M == 1000);
}

TEST_CASE("unknown keys are named, wherever they hide") {
  json j = minimal_config();
  j["horizont"] = 3;
  CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("horizont"), InvalidInput);

  j = minimal_config();
  j["game"]["playerz"] = json::array();
  CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("playerz"), InvalidInput);

  j = minimal_config();
  j["game"]["players"][0]["S"] = 1.0;
  CHECK_THROWS_AS(parse_config(j), InvalidInput);

  j = minimal_config();
  j["data"]["generate"]["lenght"] = 10;
  CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("lenght"), InvalidInput);
}

TEST_CASE("window constraints are enforced at parse time") {
  json j = minimal_config();
  j["window"] = {{"u_ini", {0.1, 0.2, 0.3, 0.4}}, {"y_ini", {1.0, 2.0, 3.0, 4.0}}};
  const ExperimentConfig cfg = parse_config(j);
  REQUIRE(cfg.u_ini.has_value());
  CHECK(cfg.u_ini->size() == 4);

  j["window"] = {{"y_ini", {1.0, 2.0, 3.0, 4.0}}};
  CHECK_THROWS_AS(parse_config(j), InvalidInput);

  j["window"] = {{"u_ini", {0.1, 0.2, 0.3, 0.4}}};
  CHECK_THROWS_AS(parse_config(j), InvalidInput);  // needs x1 to build outputs

  j["window"] = {{"u_ini", {0.1, 0.2, 0.3}}, {"y_ini", {1.0, 2.0, 3.0, 4.0}}};
  CHECK_THROWS_AS(parse_config(j), InvalidInput);  // length != T_ini * m
}

TEST_CASE("per-stage references transpose into one column per stage") {
  json j = minimal_config();
  j["game"]["players"][0]["ref"] = {{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}};
  const ExperimentConfig cfg = parse_config(j);
  const ReferenceTraj& ref = cfg.game.players[0].ref;
  CHECK(ref.bounded());
  CHECK(ref.stages() == 3);
  CHECK(ref.at(2)(0) == 3.0);
  CHECK(ref.at(2)(1) == 4.0);

  j["game"]["players"][0]["ref"] = "zero";
  CHECK(parse_config(j).game.players[0].ref.at(1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mismatched system and game dimensions are rejected") {
  json j = minimal_config();
  j["game"]["outputs"] = 3;
  j["game"]["players"][0]["Q"] = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
  j["game"]["players"][0]["ref"] = {0.0, 0.0, 0.0};
  j["game"]["players"][1]["Q"] = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
  j["game"]["players"][1]["ref"] = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(parse_config(j), InvalidInput);

  j = minimal_config();
  j["sweep"] = {{"T_min", 5}, {"T_max", 2}};
  CHECK_THROWS_AS(parse_config(j), InvalidInput);

  j = minimal_config();
  j["tolerance"] = -1.0;
  CHECK_THROWS_AS(parse_config(j), InvalidInput);
}

TEST_CASE("load_config distinguishes missing files from malformed ones") {
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);

  const auto path = std::filesystem::temp_directory_path() / "gamekit_bad_config.json";
  {
    std::ofstream f(path);
    f << "{ not json";
  }
  CHECK_THROWS_AS(load_config(path.string()), IoError);

  {
    std::ofstream f(path);
    f << minimal_config().dump();
  }
  CHECK_NOTHROW(load_config(path.string()));
  std::filesystem::remove(path);
}

TEST_CASE("matrix and vector JSON helpers round-trip") {
  Eigen::MatrixXd M(2, 3);
  M << 1, 2, 3, 4, 5, 6;
  CHECK((json_to_matrix(matrix_to_json(M), "t") - M).cwiseAbs().maxCoeff() == 0.0);
  Eigen::VectorXd v(3);
  v << 1.5, -2.5, 3.5;
  CHECK((json_to_vector(vector_to_json(v), "t") - v).cwiseAbs().maxCoeff() == 0.0);
  CHECK(json_to_matrix(json(2.5), "t")(0, 0) == 2.5);
  CHECK_THROWS_AS(json_to_matrix(json::parse("[[1,2],[3]]"), "t"), InvalidInput);
}
