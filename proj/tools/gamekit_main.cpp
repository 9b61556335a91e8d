// gamekit command line front end. Talks to the library exclusively through
// the C interface in gamekit.h.

#include "CLI11.hpp"
#include "gamekit.h"

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace {

struct ExperimentDeleter {
  void operator()(gk_experiment* e) const { gk_experiment_free(e); }
};
using ExperimentPtr = std::unique_ptr<gk_experiment, ExperimentDeleter>;

struct CommonOpts {
  std::string config;
  bool builtin = false;
  std::string out_dir;
  double tol = -1.0;
  int jobs = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  auto* cfg = cmd->add_option("-c,--config", opts.config, "experiment configuration (JSON)");
  cmd->add_flag("--builtin", opts.builtin, "use the bundled two-player study");
  cfg->excludes("--builtin");
  cmd->add_option("--out", opts.out_dir, "output directory override");
  cmd->add_option("--tol", opts.tol, "numerical rank tolerance override");
  cmd->add_option("--jobs", opts.jobs, "worker threads for horizon sweeps");
}

int open_experiment(const CommonOpts& opts, ExperimentPtr& out) {
  gk_experiment* raw = nullptr;
  gk_status st;
  if (opts.builtin || opts.config.empty())
    st = gk_experiment_open_builtin(&raw);
  else
    st = gk_experiment_open(opts.config.c_str(), &raw);
  if (st != GK_OK) {
    std::fprintf(stderr, "error: %s (%s)\n", gk_last_error(), gk_status_name(st));
    return gk_exit_code(st);
  }
  out.reset(raw);
  if (!opts.out_dir.empty()) gk_experiment_set(out.get(), "out_dir", opts.out_dir.c_str());
  if (opts.tol > 0) gk_experiment_set(out.get(), "tol", std::to_string(opts.tol).c_str());
  if (opts.jobs > 0) gk_experiment_set(out.get(), "jobs", std::to_string(opts.jobs).c_str());
  return 0;
}

int set_or_die(gk_experiment* e, const char* key, const std::string& value) {
  const gk_status st = gk_experiment_set(e, key, value.c_str());
  if (st != GK_OK) {
    std::fprintf(stderr, "error: %s (%s)\n", gk_last_error(), gk_status_name(st));
    return gk_exit_code(st);
  }
  return 0;
}

int run(gk_experiment* e, const char* command, bool as_json) {
  int exit_code = 0;
  const gk_status st = gk_experiment_run(e, command, &exit_code);
  if (st != GK_OK && *gk_experiment_report(e) == '\0') {
    // The command failed before producing a report.
    std::fprintf(stderr, "error: %s (%s)\n", gk_last_error(), gk_status_name(st));
    return gk_exit_code(st);
  }
  std::fputs(as_json ? gk_experiment_report_json(e) : gk_experiment_report(e), stdout);
  if (as_json) std::fputc('\n', stdout);
  if (st != GK_OK) std::fprintf(stderr, "status: %s\n", gk_status_name(st));
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"data-driven feedback equilibria for linear-quadratic dynamic games"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("gamekit ") + gk_version());
  bool as_json = false;
  app.add_flag("--json", as_json, "print the structured summary instead of the report");

  CommonOpts gen_opts;
  auto* gen = app.add_subcommand("gen-data", "generate an offline excitation dataset");
  add_common(gen, gen_opts);
  int gen_seed = -1;
  gen->add_option("--seed", gen_seed, "excitation seed override");

  CommonOpts check_opts;
  auto* check = app.add_subcommand("check", "certify the dataset rank condition");
  add_common(check, check_opts);
  std::vector<int> depths;
  check->add_option("--depths", depths, "window depths L to tabulate")->delimiter(',');

  CommonOpts solve_opts;
  auto* solve = app.add_subcommand("solve", "solve the lookahead game and verify the result");
  add_common(solve, solve_opts);
  int solve_T = 0;
  solve->add_option("-T,--horizon", solve_T, "lookahead horizon (stages past the window)");

  CommonOpts sweep_opts;
  auto* sweep = app.add_subcommand("sweep", "sweep horizons and play receding-horizon strategies");
  add_common(sweep, sweep_opts);
  int T_min = 0, T_max = 0, M = 0;
  double eps = -1.0;
  bool plot = false;
  sweep->add_option("--T-min", T_min, "smallest horizon");
  sweep->add_option("--T-max", T_max, "largest horizon");
  sweep->add_option("--eps", eps, "gain settling threshold");
  sweep->add_option("-M,--stages", M, "receding-horizon playback length");
  sweep->add_flag("--plot", plot, "write SVG charts next to the CSV tables");

  CommonOpts repro_opts;
  auto* repro = app.add_subcommand(
      "reproduce-paper", "run the bundled study end to end and compare against its published tables");
  add_common(repro, repro_opts);

  CLI11_PARSE(app, argc, argv);

  ExperimentPtr exp;
  int rc = 0;

  if (gen->parsed()) {
    if ((rc = open_experiment(gen_opts, exp))) return rc;
    if (gen_seed >= 0 && (rc = set_or_die(exp.get(), "seed", std::to_string(gen_seed)))) return rc;
    return run(exp.get(), "gen-data", as_json);
  }
  if (check->parsed()) {
    if ((rc = open_experiment(check_opts, exp))) return rc;
    if (!depths.empty()) {
      std::string joined;
      for (std::size_t i = 0; i < depths.size(); ++i)
        joined += (i ? "," : "") + std::to_string(depths[i]);
      if ((rc = set_or_die(exp.get(), "depths", joined))) return rc;
    }
    return run(exp.get(), "check", as_json);
  }
  if (solve->parsed()) {
    if ((rc = open_experiment(solve_opts, exp))) return rc;
    if (solve_T > 0 && (rc = set_or_die(exp.get(), "T", std::to_string(solve_T)))) return rc;
    return run(exp.get(), "solve", as_json);
  }
  if (sweep->parsed()) {
    if ((rc = open_experiment(sweep_opts, exp))) return rc;
    if (T_min > 0 && (rc = set_or_die(exp.get(), "T_min", std::to_string(T_min)))) return rc;
    if (T_max > 0 && (rc = set_or_die(exp.get(), "T_max", std::to_string(T_max)))) return rc;
    if (eps > 0 && (rc = set_or_die(exp.get(), "eps", std::to_string(eps)))) return rc;
    if (M > 0 && (rc = set_or_die(exp.get(), "M", std::to_string(M)))) return rc;
    if (plot && (rc = set_or_die(exp.get(), "plot", "1"))) return rc;
    return run(exp.get(), "sweep", as_json);
  }
  if (repro->parsed()) {
    if ((rc = open_experiment(repro_opts, exp))) return rc;
    return run(exp.get(), "reproduce-paper", as_json);
  }
  return 1;
}
