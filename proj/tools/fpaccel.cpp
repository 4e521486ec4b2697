// Command-line front end: run | reproduce | verify | export-matrix.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fpaccel/error.hpp"
#include "fpaccel/experiment.hpp"

#ifndef FPACCEL_CONFIG_DIR
#define FPACCEL_CONFIG_DIR "configs"
#endif

namespace {

using namespace fpaccel;

// Flags shared by run and verify. Only flags given on the command line
// override values loaded from --config.
struct ProblemFlags {
  std::string config;
  std::optional<std::string> problem;
  std::optional<std::size_t> n;
  std::optional<double> c1, c2;
  std::optional<std::string> precond;
  std::vector<std::string> methods;
  std::optional<double> tol;
  std::optional<std::size_t> maxit;
  std::optional<std::string> out;
  bool relative = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON experiment config")->check(CLI::ExistingFile);
    app->add_option("--problem", problem, "laplace | convdiff");
    app->add_option("--n", n, "grid size N (matrix is N^2 x N^2)");
    app->add_option("--c1", c1, "convection parameter c1 (convdiff)");
    app->add_option("--c2", c2, "convection parameter c2 (convdiff)");
    app->add_option("--precond", precond, "identity | omega:<x> | lower-tri");
    app->add_option("--method", methods, "NAME:DEPTH, gmres-right, gmres-left or richardson")
        ->take_all();
    app->add_option("--tol", tol, "relative tolerance on the preconditioned residual");
    app->add_option("--maxit", maxit, "iteration limit");
    app->add_option("--out", out, "output directory");
    app->add_flag("--relative", relative, "divide norm columns by their k=0 value");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c = config.empty() ? ExperimentConfig{} : load_config(config);
    if (problem) c.problem = *problem;
    if (n) c.n = *n;
    if (c1) c.c1 = *c1;
    if (c2) c.c2 = *c2;
    if (precond) c.preconditioner = *precond;
    if (!methods.empty()) {
      c.methods.clear();
      for (const std::string& m : methods) c.methods.push_back(parse_method_spec(m));
    }
    if (tol) c.tol = *tol;
    if (maxit) c.maxit = *maxit;
    if (out) c.output_dir = *out;
    if (relative) c.relative = true;
    validate(c);
    return c;
  }
};

struct ThresholdFlags {
  DiagnosticThresholds t;
  void attach(CLI::App* app) {
    app->add_option("--orth-tol", t.orthogonality, "orthogonality defect threshold")
        ->capture_default_str();
    app->add_option("--mono-slack", t.monotonicity_slack, "monotonicity slack (relative)")
        ->capture_default_str();
    app->add_option("--equiv-tol", t.equivalence, "trajectory equivalence threshold")
        ->capture_default_str();
    app->add_option("--identity-tol", t.identity, "step identity threshold")
        ->capture_default_str();
  }
};

int cmd_run(const ProblemFlags& flags) {
  const ExperimentConfig c = flags.resolve();
  const RunOutcome r = run_experiment(c, std::cout);
  std::cout << "wrote " << r.files.size() << " files to " << c.output_dir.string() << '\n';
  return r.exit_code;
}

int cmd_verify(const ProblemFlags& flags, const std::vector<std::string>& checks,
               const DiagnosticThresholds& t) {
  ExperimentConfig c = flags.resolve();
  const VerifyOutcome v = run_verify(c, checks.empty() ? c.checks : checks, t, std::cout);
  std::cout << "check report: " << (c.output_dir / "checks.jsonl").string() << '\n';
  return v.exit_code;
}

int cmd_reproduce(const std::string& figure, const std::string& config_dir,
                  const std::optional<std::string>& out, bool relative, bool verify,
                  const DiagnosticThresholds& t) {
  ExperimentConfig c = load_config(std::filesystem::path(config_dir) / (figure + ".json"));
  if (out) c.output_dir = *out;
  if (relative) c.relative = true;
  validate(c);
  std::cout << "== " << figure << (c.title.empty() ? "" : ": " + c.title) << '\n';
  const RunOutcome r = run_experiment(c, std::cout);
  if (r.exit_code != kExitOk) return r.exit_code;
  if (!verify || c.checks.empty()) return kExitOk;
  std::cout << "== checks\n";
  return run_verify(c, c.checks, t, std::cout).exit_code;
}

int cmd_export(const std::string& problem, std::size_t n, double c1, double c2,
               const std::optional<std::string>& out, const std::optional<std::string>& rhs) {
  ExperimentConfig c;
  c.problem = problem;
  c.n = n;
  c.c1 = c1;
  c.c2 = c2;
  c.methods.push_back(parse_method_spec("richardson"));
  validate(c);
  const ProblemInstance p = build_problem(c);
  if (out) {
    std::ofstream f(*out);
    if (!f) throw InvalidArgument("cannot write " + *out);
    write_matrix_market(f, p.a);
  } else {
    write_matrix_market(std::cout, p.a);
  }
  if (rhs) {
    std::ofstream f(*rhs);
    if (!f) throw InvalidArgument("cannot write " + *rhs);
    f.precision(17);
    f << "%%MatrixMarket matrix array real general\n" << p.b.size() << " 1\n";
    for (double v : p.b) f << v << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Windowed acceleration of preconditioned Richardson iterations"};
  app.require_subcommand(1);

  ProblemFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "run methods and write CSV traces");
  run_flags.attach(run);

  ProblemFlags verify_flags;
  ThresholdFlags verify_thresholds;
  std::vector<std::string> checks;
  CLI::App* verify = app.add_subcommand("verify", "run methods and evaluate invariant checks");
  verify_flags.attach(verify);
  verify_thresholds.attach(verify);
  verify->add_option("--check", checks, "check to run (repeatable; default all)")
      ->check(CLI::IsMember(kAllChecks))
      ->take_all();

  std::string figure;
  std::string config_dir = FPACCEL_CONFIG_DIR;
  std::optional<std::string> repro_out;
  bool repro_relative = false;
  bool no_verify = false;
  ThresholdFlags repro_thresholds;
  CLI::App* reproduce = app.add_subcommand("reproduce", "run a pinned figure configuration");
  reproduce->add_option("figure", figure, "fig1 | fig2 | fig3 | fig4 | fig5")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig2", "fig3", "fig4", "fig5"}));
  reproduce->add_option("--config-dir", config_dir, "directory holding figN.json")
      ->capture_default_str();
  reproduce->add_option("--out", repro_out, "output directory (overrides the config)");
  reproduce->add_flag("--relative", repro_relative, "divide norm columns by their k=0 value");
  reproduce->add_flag("--no-verify", no_verify, "skip the checks listed in the config");
  repro_thresholds.attach(reproduce);

  std::string ex_problem = "laplace";
  std::size_t ex_n = 16;
  double ex_c1 = 0.0, ex_c2 = 0.0;
  std::optional<std::string> ex_out, ex_rhs;
  CLI::App* exp = app.add_subcommand("export-matrix", "write the problem matrix (MatrixMarket)");
  exp->add_option("--problem", ex_problem, "laplace | convdiff")->capture_default_str();
  exp->add_option("--n", ex_n, "grid size N")->capture_default_str();
  exp->add_option("--c1", ex_c1, "convection parameter c1");
  exp->add_option("--c2", ex_c2, "convection parameter c2");
  exp->add_option("--out", ex_out, "matrix file (default stdout)");
  exp->add_option("--rhs", ex_rhs, "also write b to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*verify) return cmd_verify(verify_flags, checks, verify_thresholds.t);
    if (*reproduce)
      return cmd_reproduce(figure, config_dir, repro_out, repro_relative, !no_verify,
                           repro_thresholds.t);
    if (*exp) return cmd_export(ex_problem, ex_n, ex_c1, ex_c2, ex_out, ex_rhs);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolverError;
  }
  return kExitUsage;
}
