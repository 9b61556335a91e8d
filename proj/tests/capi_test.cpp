#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

// Everything here goes through the C header on purpose: this is the contract
// external callers get, so no internal C++ types may leak into the test.
#include "gamekit.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

TEST_CASE("status plumbing: names, exit codes, version") {
  CHECK(gk_exit_code(GK_OK) == 0);
  CHECK(gk_exit_code(GK_ERR_INVALID) == 1);
  CHECK(gk_exit_code(GK_ERR_IO) == 1);
  CHECK(gk_exit_code(GK_ERR_CERTIFICATION) == 2);
  CHECK(gk_exit_code(GK_ERR_SINGULAR) == 3);
  CHECK(gk_exit_code(GK_ERR_MISMATCH) == 4);
  CHECK(gk_exit_code(GK_ERR_INTERNAL) == 1);

  for (int s = 0; s <= 9; ++s) {
    const char* name = gk_status_name(static_cast<gk_status>(s));
    REQUIRE(name != nullptr);
    CHECK(std::strlen(name) > 0);
  }
  REQUIRE(gk_version() != nullptr);
  CHECK(std::string(gk_version()).find('.') != std::string::npos);
}

TEST_CASE("sessions solve the bundled study and expose gains by value") {
  gk_session* s = nullptr;
  REQUIRE(gk_session_open_builtin(&s) == GK_OK);
  REQUIRE(s != nullptr);

  int players = 0;
  CHECK(gk_session_players(s, &players) == GK_OK);
  CHECK(players == 2);

  // Querying results before solving is an error, not a crash.
  size_t rows = 0, cols = 0;
  CHECK(gk_session_gain(s, 1, 1, nullptr, &rows, &cols) == GK_ERR_INVALID);
  CHECK(std::strlen(gk_last_error()) > 0);

  REQUIRE(gk_session_solve(s, 10) == GK_OK);
  int T = 0;
  CHECK(gk_session_horizon(s, &T) == GK_OK);
  CHECK(T == 10);

  // Stage 1 acts on the 8-wide window; stage 10 also sees 9 applied inputs.
  REQUIRE(gk_session_gain(s, 1, 1, nullptr, &rows, &cols) == GK_OK);
  CHECK(rows == 1);
  CHECK(cols == 8);
  REQUIRE(gk_session_gain(s, 10, 2, nullptr, &rows, &cols) == GK_OK);
  CHECK(rows == 1);
  CHECK(cols == 8 + 9 * 2);

  std::vector<double> buf(rows * cols, 0.0);
  REQUIRE(gk_session_gain(s, 10, 2, buf.data(), &rows, &cols) == GK_OK);
  bool any = false;
  for (double v : buf) any = any || v != 0.0;
  CHECK(any);

  size_t len = 0;
  REQUIRE(gk_session_offset(s, 1, 1, nullptr, &len) == GK_OK);
  CHECK(len == 1);
  double off = 0.0;
  CHECK(gk_session_offset(s, 1, 1, &off, &len) == GK_OK);

  REQUIRE(gk_session_values(s, nullptr, &len) == GK_OK);
  CHECK(len == 2);
  double values[2] = {0.0, 0.0};
  CHECK(gk_session_values(s, values, &len) == GK_OK);
  CHECK(values[0] == values[0]);  // finite, not NaN
  CHECK(values[1] != 0.0);

  // Out-of-range queries are rejected.
  CHECK(gk_session_gain(s, 0, 1, nullptr, &rows, &cols) == GK_ERR_INVALID);
  CHECK(gk_session_gain(s, 11, 1, nullptr, &rows, &cols) == GK_ERR_INVALID);
  CHECK(gk_session_gain(s, 1, 3, nullptr, &rows, &cols) == GK_ERR_INVALID);

  gk_session_free(s);
}

TEST_CASE("experiments run commands and keep reports on the handle") {
  gk_experiment* e = nullptr;
  REQUIRE(gk_experiment_open_builtin(&e) == GK_OK);

  const auto out = std::filesystem::temp_directory_path() / "gamekit_capi_out";
  CHECK(gk_experiment_set(e, "out_dir", out.string().c_str()) == GK_OK);
  CHECK(gk_experiment_set(e, "depths", "7,9") == GK_OK);
  CHECK(gk_experiment_set(e, "bogus_key", "1") == GK_ERR_INVALID);

  int exit_code = -1;
  REQUIRE(gk_experiment_run(e, "check", &exit_code) == GK_OK);
  CHECK(exit_code == 0);
  const std::string report = gk_experiment_report(e);
  CHECK(report.find("certified") != std::string::npos);
  const std::string summary = gk_experiment_report_json(e);
  CHECK(summary.find("\"pass\"") != std::string::npos);

  CHECK(gk_experiment_run(e, "frobnicate", &exit_code) == GK_ERR_INVALID);
  gk_experiment_free(e);
  std::filesystem::remove_all(out);
}

TEST_CASE("null and broken inputs surface as statuses, never as crashes") {
  CHECK(gk_experiment_open(nullptr, nullptr) == GK_ERR_INVALID);
  CHECK(gk_session_open(nullptr, nullptr) == GK_ERR_INVALID);

  gk_experiment* e = nullptr;
  CHECK(gk_experiment_open("/nonexistent/config.json", &e) == GK_ERR_IO);
  CHECK(e == nullptr);
  CHECK(gk_exit_code(GK_ERR_IO) == 1);

  const auto bad = std::filesystem::temp_directory_path() / "gamekit_capi_bad.json";
  {
    std::ofstream f(bad);
    f << "{ nope";
  }
  gk_status st = gk_experiment_open(bad.string().c_str(), &e);
  CHECK(st != GK_OK);
  CHECK(gk_exit_code(st) == 1);
  CHECK(e == nullptr);
  std::filesystem::remove(bad);

  gk_experiment_free(nullptr);  // must be a no-op
  gk_session_free(nullptr);
}
