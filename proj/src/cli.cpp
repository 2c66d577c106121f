#include "nscrit/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "nscrit/error.hpp"
#include "nscrit/examples.hpp"
#include "nscrit/property_suite.hpp"
#include "nscrit/study.hpp"

namespace nscrit {

namespace {

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

constexpr Flag kFlags[] = {
    {"--example", "example", "example1 | example2 | manufactured"},
    {"--T", "T", "final time"},
    {"--mu", "mu", "viscosity"},
    {"--alpha", "alpha", "grading exponent in (0.5, 0.8]"},
    {"--k", "k", "velocity degree (2, 3 or 4)"},
    {"--eps", "eps", "initial data exponent offset"},
    {"--n", "n", "mesh subdivisions per side (h = 1/n)"},
    {"--h", "h", "mesh size 1/n (a bare n is accepted)"},
    {"--tau", "tau", "maximal stepsize, e.g. 1/160"},
    {"--taus", "taus", "study stepsizes, comma separated"},
    {"--tau-ref", "tau_ref", "reference stepsize"},
    {"--hs", "hs", "study mesh sizes, comma separated"},
    {"--h-ref", "h_ref", "reference mesh size"},
    {"--data-exactness", "data_exactness", "quadrature exactness for the initial data"},
    {"--backend", "backend", "direct | iterative"},
    {"--tolerance", "tolerance", "solver relative residual target"},
    {"--max-iterations", "max_iterations", "iterative solver limit"},
    {"--restart", "restart", "GMRES restart length"},
    {"--seed", "seed", "seed for randomized checks"},
    {"--output", "output", "output CSV path (stdout when empty)"},
    {"--checkpoint", "checkpoint", "write the final state to this checkpoint file"},
};

/// Writes to the configured path, or to `fallback` when none is set.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw Error(ErrorKind::Io, "cannot write " + path);
      stream_ = file_.get();
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

int do_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const int n = mesh_subdivisions(config.h);
  const Problem problem = build_problem(n, config.k);
  const GradedGrid grid = build_graded_grid(config.T, config.tau.value(), config.alpha);
  RunOptions options;
  options.solver = config.solver;
  if (!config.checkpoint.empty()) options.checkpoints = {grid.N};
  const RunResult result = run(initial_velocity(config, problem.disc), grid, config.mu, problem.disc, options);
  if (!config.checkpoint.empty()) write_checkpoint(config.checkpoint, result.checkpoints.back());
  Sink sink(config.output, out);
  write_ledger_csv(*sink, result.ledger);
  const double res = result.ledger.max_relative_residual();
  const bool ok = res <= 1e-9 && result.ledger.monotone();
  if (!ok) err << "energy ledger check failed: max residual " << res << "\n";
  return ok ? 0 : 1;
}

int do_study(const RunConfig& config, bool time, std::ostream& out) {
  const StudyReport report = time ? run_time_study(config) : run_space_study(config);
  Sink sink(config.output, out);
  write_report_csv(*sink, report);
  return 0;
}

int do_project(const RunConfig& config, std::ostream& out) {
  const Problem problem = build_problem(mesh_subdivisions(config.h), config.k);
  const FEFunction u0 = initial_velocity(config, problem.disc);
  const double div = max_pointwise_divergence(u0, quadrature(assembly_exactness(config.k)));
  Sink sink(config.output, out);
  std::ostringstream s;
  s.precision(17);
  s << "# example=" << to_string(config.example) << "\n# k=" << config.k << "\n# h=" << config.h.str()
    << "\nquantity,value\n"
    << "l2_norm," << l2_norm(u0) << "\nh1_seminorm," << h1_seminorm(u0) << "\nmax_divergence," << div
    << "\nvelocity_dofs," << problem.disc.num_free() << "\npressure_dofs," << problem.disc.num_pressure() << '\n';
  *sink << s.str();
  return 0;
}

int do_check(const RunConfig& config, const std::vector<SuiteCase>& cases, std::ostream& out) {
  const auto results = run_property_suite(cases, config);
  int failed = 0;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << "  " << r.detail << '\n';
    failed += r.passed ? 0 : 1;
  }
  out << results.size() - failed << '/' << results.size() << " checks passed\n";
  return failed == 0 ? 0 : 1;
}

int do_infsup(const RunConfig& config, std::ostream& out) {
  const int n = mesh_subdivisions(config.h);
  const Problem problem = build_problem(n, config.k);
  const InfSupResult r = infsup_constant(problem.disc, 3000, config.solver);
  std::ostringstream s;
  s.precision(12);
  s << "family,n,pressure_dofs,kernel_dimension,method,beta\n"
    << family_name(config.k) << ',' << n << ',' << problem.disc.num_pressure() << ',' << r.kernel_dimension
    << ',' << (r.dense ? "dense" : "iterative") << ',' << r.beta << '\n';
  Sink sink(config.output, out);
  *sink << s.str();
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Navier-Stokes with critical initial data: Scott-Vogelius elements on graded time grids",
               "ns_critical"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(0, 1);

  std::string config_file;
  bool show_config = false;
  std::string jobs;
  app.add_option("--config", config_file, "key = value configuration file");
  app.add_flag("--print-config", show_config, "print the effective configuration and exit");
  app.add_option("--jobs", jobs, "parallel study rows")->envname("NS_CRITICAL_THREADS");

  std::map<std::string, std::string> values;
  std::vector<std::pair<const Flag*, CLI::Option*>> flags;
  for (const Flag& f : kFlags) flags.emplace_back(&f, app.add_option(f.name, values[f.key], f.help));

  auto* run_cmd = app.add_subcommand("run", "one run; writes the energy ledger CSV");
  auto* time_cmd = app.add_subcommand("study-time", "time convergence study; writes the report CSV");
  auto* space_cmd = app.add_subcommand("study-space", "space convergence study; writes the report CSV");
  auto* project_cmd = app.add_subcommand("project", "project the initial data and report its norms");
  auto* check_cmd = app.add_subcommand("check", "run the property suite");
  auto* infsup_cmd = app.add_subcommand("infsup", "discrete inf-sup constant");
  bool fast = false;
  check_cmd->add_flag("--fast", fast, "single small case: k = 2 on the Alfeld split of n = 4");
  for (auto* sub : {run_cmd, time_cmd, space_cmd, project_cmd, check_cmd, infsup_cmd}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return 2;
  }

  RunConfig config;
  try {
    if (!config_file.empty()) config = load_config_file(config_file, config);
    for (const auto& [flag, option] : flags)
      if (option->count() > 0) apply_setting(config, flag->key, values[flag->key]);
    if (!jobs.empty()) apply_setting(config, "jobs", jobs);
    config.validate();
  } catch (const Error& e) {
    err << e.what() << '\n' << app.help();
    return 2;
  }

  if (show_config) {
    print_config(out, config);
    return 0;
  }
  if (app.get_subcommands().empty()) {
    err << app.help();
    return 2;
  }

  try {
    if (run_cmd->parsed()) return do_run(config, out, err);
    if (time_cmd->parsed()) return do_study(config, true, out);
    if (space_cmd->parsed()) return do_study(config, false, out);
    if (project_cmd->parsed()) return do_project(config, out);
    if (infsup_cmd->parsed()) return do_infsup(config, out);
    if (check_cmd->parsed()) {
      std::vector<SuiteCase> cases;
      const bool explicit_case = flags[4].second->count() + flags[6].second->count() + flags[7].second->count() > 0;
      if (fast) cases = {{2, 4}};
      else if (explicit_case) cases = {{config.k, mesh_subdivisions(config.h)}};
      else cases = {{4, 4}, {2, 8}};
      return do_check(config, cases, out);
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    return e.kind() == ErrorKind::Usage ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace nscrit
