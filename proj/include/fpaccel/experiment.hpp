#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpaccel/diagnostics.hpp"

namespace fpaccel {

/// One entry of a method list: "AA:5", "NGMRES:full", "gmres-right",
/// "gmres-left" or "richardson".
struct MethodSpec {
  enum class Kind { Accelerated, GmresRight, GmresLeft, Richardson };
  Kind kind = Kind::Accelerated;
  AcceleratorVariant variant = AcceleratorVariant::AA;
  Depth depth = Depth::of(0);

  /// Display label, matching SolveReport::method ("AA(5)", "GMRES-right", ...).
  std::string label() const;
  /// Spec string that parses back to this value.
  std::string spec() const;
  /// File-name-safe form ("AA_5", "GMRES-right", ...).
  std::string file_stem() const;

  bool operator==(const MethodSpec&) const = default;
};

/// Throws InvalidArgument on anything unrecognized.
MethodSpec parse_method_spec(const std::string& text);

enum class NormKind { Classical, Preconditioned };

struct ExperimentConfig {
  std::string problem = "laplace";  // laplace | convdiff
  std::size_t n = 16;
  double c1 = 0.0;
  double c2 = 0.0;
  std::string preconditioner = "lower-tri";  // identity | omega:<x> | lower-tri
  std::vector<MethodSpec> methods;
  double tol = kDefaultTolerance;
  std::size_t maxit = kDefaultMaxIterations;
  std::uint64_t seed = 0;  // reserved; every code path is deterministic
  std::filesystem::path output_dir = "out";
  bool relative = false;
  NormKind plot_norm = NormKind::Preconditioned;
  std::vector<std::string> checks;  // diagnostics run by verify / reproduce
  std::string title;
};

/// Throws InvalidArgument when an invariant fails (no methods, n < 1, tol <= 0, ...).
void validate(const ExperimentConfig& config);

/// Missing keys keep their defaults; unknown keys are rejected. The result is
/// not validated, so a file may leave fields to command-line flags.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

ProblemInstance build_problem(const ExperimentConfig& config);
/// identity | omega:<x> | lower-tri (lower triangle of the problem matrix).
Preconditioner parse_preconditioner(const std::string& text, const ProblemInstance& problem);

SolveReport run_method(const ProblemInstance& problem, const Preconditioner& p,
                       const MethodSpec& spec, const SolveOptions& options);

/// Runs every method (concurrently; results are in input order).
std::vector<SolveReport> run_methods(const ProblemInstance& problem, const Preconditioner& p,
                                     const std::vector<MethodSpec>& methods,
                                     const SolveOptions& options);

/// Columns k, classical_norm, preconditioned_norm, lsq_rank, status. With
/// `relative` both norm columns are divided by their k = 0 value.
void write_trace_csv(std::ostream& out, const SolveReport& report, bool relative);

/// Columns method, status, iterations, iterations_to_tol, final_classical_norm,
/// final_preconditioned_norm (absolute norms).
void write_summary_csv(std::ostream& out, const std::vector<SolveReport>& reports);

/// Plain-text gnuplot script plotting the chosen norm column of each trace file.
void write_plot_script(std::ostream& out, const std::vector<std::string>& trace_files,
                       const std::vector<std::string>& labels, NormKind norm,
                       const std::string& title, bool relative);

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitSolverError = 2,
  kExitUsage = 64,
};

struct RunOutcome {
  std::vector<SolveReport> reports;
  std::vector<std::filesystem::path> files;
  int exit_code = kExitOk;
};

/// Runs the configured methods and writes one CSV per method, summary.csv and
/// plot.gp into config.output_dir. Breakdown or divergence gives kExitSolverError.
RunOutcome run_experiment(const ExperimentConfig& config, std::ostream& log);

inline const std::vector<std::string> kAllChecks = {
    "orthogonality", "identity",  "monotonicity",         "equivalence",
    "windowed-equivalence", "oracle", "lsq-objective",
};

struct VerifyOutcome {
  std::vector<CheckResult> results;
  int exit_code = kExitOk;
};

/// Runs the configured methods with vectors retained, evaluates the selected
/// checks (all of kAllChecks when `checks` is empty), prints a table to `log`
/// and writes checks.jsonl into config.output_dir.
VerifyOutcome run_verify(const ExperimentConfig& config, const std::vector<std::string>& checks,
                         const DiagnosticThresholds& thresholds, std::ostream& log);

/// Pass/fail table, one line per check.
void print_check_table(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace fpaccel
