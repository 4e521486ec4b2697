#include "fpaccel/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <ostream>
#include <set>
#include <tuple>

#include "fpaccel/error.hpp"

namespace fpaccel {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Method specs
// ---------------------------------------------------------------------------

std::string MethodSpec::label() const {
  switch (kind) {
    case Kind::GmresRight: return "GMRES-right";
    case Kind::GmresLeft: return "GMRES-left";
    case Kind::Richardson: return "Richardson";
    case Kind::Accelerated: break;
  }
  return to_string(variant) + "(" + depth.describe() + ")";
}

std::string MethodSpec::spec() const {
  switch (kind) {
    case Kind::GmresRight: return "gmres-right";
    case Kind::GmresLeft: return "gmres-left";
    case Kind::Richardson: return "richardson";
    case Kind::Accelerated: break;
  }
  return to_string(variant) + ":" + depth.describe();
}

std::string MethodSpec::file_stem() const {
  if (kind != Kind::Accelerated) return label();
  return to_string(variant) + "_" + depth.describe();
}

namespace {

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Whole-string numeric parses; std::sto* accept trailing garbage.
double parse_real(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v))
    throw InvalidArgument(what + ": not a finite number: '" + text + "'");
  return v;
}

std::size_t parse_count(const std::string& text, const std::string& what) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
    throw InvalidArgument(what + ": not a nonnegative integer: '" + text + "'");
  try {
    return static_cast<std::size_t>(std::stoull(text));
  } catch (const std::exception&) {
    throw InvalidArgument(what + ": out of range: '" + text + "'");
  }
}

}  // namespace

MethodSpec parse_method_spec(const std::string& text) {
  const std::string lower = lowercase(text);
  MethodSpec s;
  if (lower == "gmres-right" || lower == "gmres:right") {
    s.kind = MethodSpec::Kind::GmresRight;
    return s;
  }
  if (lower == "gmres-left" || lower == "gmres:left") {
    s.kind = MethodSpec::Kind::GmresLeft;
    return s;
  }
  if (lower == "richardson") {
    s.kind = MethodSpec::Kind::Richardson;
    return s;
  }
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw InvalidArgument("method '" + text + "': expected NAME:DEPTH, gmres-right, gmres-left "
                          "or richardson");
  const auto variant = parse_variant(text.substr(0, colon));
  if (!variant) throw InvalidArgument("method '" + text + "': unknown variant");
  const std::string depth = lowercase(text.substr(colon + 1));
  s.variant = *variant;
  s.depth = depth == "full" ? Depth::full() : Depth::of(parse_count(depth, "method depth"));
  return s;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

void validate(const ExperimentConfig& c) {
  if (c.problem != "laplace" && c.problem != "convdiff")
    throw InvalidArgument("problem must be 'laplace' or 'convdiff', got '" + c.problem + "'");
  if (c.n < 1) throw InvalidArgument("grid size N must be at least 1");
  if (c.methods.empty()) throw InvalidArgument("at least one method is required");
  if (!(c.tol > 0.0) || !std::isfinite(c.tol)) throw InvalidArgument("tol must be positive");
  if (c.maxit < 1) throw InvalidArgument("maxit must be at least 1");
  if (!std::isfinite(c.c1) || !std::isfinite(c.c2))
    throw InvalidArgument("convection parameters must be finite");
  const std::string p = lowercase(c.preconditioner);
  if (p != "identity" && p != "lower-tri" && p.rfind("omega:", 0) != 0)
    throw InvalidArgument("preconditioner must be identity, omega:<x> or lower-tri");
  for (const std::string& check : c.checks) {
    if (std::find(kAllChecks.begin(), kAllChecks.end(), check) == kAllChecks.end())
      throw InvalidArgument("unknown check '" + check + "'");
  }
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  static const std::set<std::string> known = {
      "problem", "n",    "c1",   "c2",     "preconditioner", "methods",  "tol",
      "maxit",   "seed", "output_dir", "relative", "plot_norm", "checks", "title"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw InvalidArgument("config: unknown key '" + key + "'");
  }
  ExperimentConfig c;
  try {
    if (j.contains("problem")) c.problem = j.at("problem").get<std::string>();
    if (j.contains("n")) c.n = j.at("n").get<std::size_t>();
    if (j.contains("c1")) c.c1 = j.at("c1").get<double>();
    if (j.contains("c2")) c.c2 = j.at("c2").get<double>();
    if (j.contains("preconditioner")) c.preconditioner = j.at("preconditioner").get<std::string>();
    if (j.contains("methods")) {
      for (const auto& m : j.at("methods")) c.methods.push_back(parse_method_spec(m.get<std::string>()));
    }
    if (j.contains("tol")) c.tol = j.at("tol").get<double>();
    if (j.contains("maxit")) c.maxit = j.at("maxit").get<std::size_t>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("relative")) c.relative = j.at("relative").get<bool>();
    if (j.contains("plot_norm")) {
      const std::string norm = j.at("plot_norm").get<std::string>();
      if (norm == "classical") c.plot_norm = NormKind::Classical;
      else if (norm == "preconditioned") c.plot_norm = NormKind::Preconditioned;
      else throw InvalidArgument("plot_norm must be 'classical' or 'preconditioned'");
    }
    if (j.contains("checks")) c.checks = j.at("checks").get<std::vector<std::string>>();
    if (j.contains("title")) c.title = j.at("title").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["problem"] = c.problem;
  j["n"] = c.n;
  j["c1"] = c.c1;
  j["c2"] = c.c2;
  j["preconditioner"] = c.preconditioner;
  j["methods"] = nlohmann::json::array();
  for (const MethodSpec& m : c.methods) j["methods"].push_back(m.spec());
  j["tol"] = c.tol;
  j["maxit"] = c.maxit;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir.string();
  j["relative"] = c.relative;
  j["plot_norm"] = c.plot_norm == NormKind::Classical ? "classical" : "preconditioned";
  j["checks"] = c.checks;
  if (!c.title.empty()) j["title"] = c.title;
  return j;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

ProblemInstance build_problem(const ExperimentConfig& c) {
  if (c.problem == "laplace") return build_laplace_2d(c.n);
  if (c.problem == "convdiff") return build_convection_diffusion_2d(c.n, c.c1, c.c2);
  throw InvalidArgument("unknown problem '" + c.problem + "'");
}

Preconditioner parse_preconditioner(const std::string& text, const ProblemInstance& problem) {
  const std::string lower = lowercase(text);
  if (lower == "identity") return Preconditioner::identity();
  if (lower == "lower-tri") return Preconditioner::lower_triangular_of(problem.a);
  if (lower.rfind("omega:", 0) == 0)
    return Preconditioner::scaled_identity(parse_real(text.substr(6), "omega"));
  throw InvalidArgument("preconditioner '" + text + "': expected identity, omega:<x> or lower-tri");
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

SolveReport run_method(const ProblemInstance& problem, const Preconditioner& p,
                       const MethodSpec& spec, const SolveOptions& options) {
  switch (spec.kind) {
    case MethodSpec::Kind::GmresRight:
      return gmres_preconditioned(problem, p, GmresSide::Right, options);
    case MethodSpec::Kind::GmresLeft:
      return gmres_preconditioned(problem, p, GmresSide::Left, options);
    case MethodSpec::Kind::Richardson:
      return run_richardson(RichardsonOperator(problem, p), options);
    case MethodSpec::Kind::Accelerated:
      return run_accelerated(RichardsonOperator(problem, p), spec.variant, spec.depth, options);
  }
  throw InvalidArgument("unknown method kind");
}

std::vector<SolveReport> run_methods(const ProblemInstance& problem, const Preconditioner& p,
                                     const std::vector<MethodSpec>& methods,
                                     const SolveOptions& options) {
  std::vector<std::future<SolveReport>> jobs;
  jobs.reserve(methods.size());
  for (const MethodSpec& m : methods) {
    jobs.push_back(std::async(std::launch::async,
                              [&problem, &p, m, options] { return run_method(problem, p, m, options); }));
  }
  std::vector<SolveReport> out;
  out.reserve(jobs.size());
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

namespace {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool solver_failed(const SolveReport& r) {
  return r.status == SolveStatus::Diverged || r.status == SolveStatus::Breakdown;
}

}  // namespace

void write_trace_csv(std::ostream& out, const SolveReport& report, bool relative) {
  out << "k,classical_norm,preconditioned_norm,lsq_rank,status\n";
  if (report.trace.empty()) return;
  const double c0 = report.trace.front().classical_norm;
  const double p0 = report.trace.front().preconditioned_norm;
  for (std::size_t i = 0; i < report.trace.size(); ++i) {
    const StepRecord& rec = report.trace[i];
    double c = rec.classical_norm;
    double p = rec.preconditioned_norm;
    if (relative) {
      c = c0 > 0.0 ? c / c0 : 0.0;
      p = p0 > 0.0 ? p / p0 : 0.0;
    }
    const bool last = i + 1 == report.trace.size();
    out << rec.k << ',' << format_real(c) << ',' << format_real(p) << ',' << rec.lsq_rank << ','
        << (last ? to_string(report.status) : std::string("running")) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SolveReport>& reports) {
  out << "method,status,iterations,iterations_to_tol,final_classical_norm,"
         "final_preconditioned_norm\n";
  for (const SolveReport& r : reports) {
    const StepRecord* last = r.trace.empty() ? nullptr : &r.trace.back();
    out << r.method << ',' << to_string(r.status) << ',' << r.iterations << ',';
    if (r.converged()) out << r.iterations;
    out << ',' << (last ? format_real(last->classical_norm) : "") << ','
        << (last ? format_real(last->preconditioned_norm) : "") << '\n';
  }
}

void write_plot_script(std::ostream& out, const std::vector<std::string>& trace_files,
                       const std::vector<std::string>& labels, NormKind norm,
                       const std::string& title, bool relative) {
  const int column = norm == NormKind::Classical ? 2 : 3;
  const std::string what = norm == NormKind::Classical ? "classical" : "preconditioned";
  out << "# gnuplot script; run from this directory: gnuplot -p plot.gp\n";
  out << "set datafile separator ','\n";
  out << "set logscale y\n";
  out << "set format y '10^{%L}'\n";
  out << "set xlabel 'iteration'\n";
  out << "set ylabel '" << (relative ? "relative " : "") << what << " residual norm'\n";
  if (!title.empty()) out << "set title '" << title << "'\n";
  out << "set key outside right\n";
  out << "plot \\\n";
  for (std::size_t i = 0; i < trace_files.size(); ++i) {
    out << "  '" << trace_files[i] << "' using 1:" << column << " skip 1 with lines title '"
        << (i < labels.size() ? labels[i] : trace_files[i]) << "'"
        << (i + 1 < trace_files.size() ? ", \\\n" : "\n");
  }
}

RunOutcome run_experiment(const ExperimentConfig& config, std::ostream& log) {
  validate(config);
  const ProblemInstance problem = build_problem(config);
  const Preconditioner p = parse_preconditioner(config.preconditioner, problem);
  SolveOptions options;
  options.tol = config.tol;
  options.maxit = config.maxit;

  RunOutcome outcome;
  outcome.reports = run_methods(problem, p, config.methods, options);
  fs::create_directories(config.output_dir);

  std::vector<std::string> files, labels;
  for (std::size_t i = 0; i < config.methods.size(); ++i) {
    const SolveReport& r = outcome.reports[i];
    const std::string name = config.methods[i].file_stem() + ".csv";
    const fs::path path = config.output_dir / name;
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    write_trace_csv(out, r, config.relative);
    outcome.files.push_back(path);
    files.push_back(name);
    labels.push_back(r.method);
    log << r.method << ": " << to_string(r.status) << " after " << r.iterations
        << " iterations";
    if (!r.message.empty()) log << " (" << r.message << ")";
    log << '\n';
    if (solver_failed(r)) outcome.exit_code = kExitSolverError;
  }
  {
    const fs::path path = config.output_dir / "summary.csv";
    std::ofstream out(path);
    write_summary_csv(out, outcome.reports);
    outcome.files.push_back(path);
  }
  {
    const fs::path path = config.output_dir / "plot.gp";
    std::ofstream out(path);
    write_plot_script(out, files, labels, config.plot_norm, config.title, config.relative);
    outcome.files.push_back(path);
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

void print_check_table(std::ostream& out, const std::vector<CheckResult>& results) {
  for (const CheckResult& c : results) {
    char line[128];
    std::snprintf(line, sizeof line, "%-4s  defect %-10.3e  threshold %-8.1e  k=%-5zu  ",
                  c.skipped ? "SKIP" : (c.passed ? "PASS" : "FAIL"), c.max_defect, c.threshold,
                  c.location);
    out << line << c.name;
    if (!c.note.empty()) out << "  [" << c.note << "]";
    out << '\n';
  }
}

namespace {

// Dense SVD / eigenvalue cost is cubic; above this the AAg/AAr decrease
// claims are reported as skipped rather than stalling the run.
constexpr std::size_t kVerifyNormDimension = 1024;

}  // namespace

VerifyOutcome run_verify(const ExperimentConfig& config, const std::vector<std::string>& checks,
                         const DiagnosticThresholds& th, std::ostream& log) {
  validate(config);
  std::set<std::string> wanted(checks.begin(), checks.end());
  if (wanted.empty()) wanted.insert(kAllChecks.begin(), kAllChecks.end());
  for (const std::string& c : wanted) {
    if (std::find(kAllChecks.begin(), kAllChecks.end(), c) == kAllChecks.end())
      throw InvalidArgument("unknown check '" + c + "'");
  }
  auto want = [&](const char* c) { return wanted.count(c) > 0; };

  const ProblemInstance problem = build_problem(config);
  const Preconditioner p = parse_preconditioner(config.preconditioner, problem);
  const RichardsonOperator op(problem, p);
  SolveOptions options;
  options.tol = config.tol;
  options.maxit = config.maxit;
  options.keep_vectors = want("orthogonality") || want("identity") || want("equivalence") ||
                         want("oracle") || want("lsq-objective");

  // Equivalence needs the side-matched GMRES runs; add them when missing.
  std::vector<MethodSpec> methods = config.methods;
  auto ensure = [&](MethodSpec::Kind kind) {
    for (const MethodSpec& m : methods)
      if (m.kind == kind) return;
    MethodSpec s;
    s.kind = kind;
    methods.push_back(s);
  };
  bool full_ng = false, full_ngr = false;
  for (const MethodSpec& m : config.methods) {
    if (m.kind != MethodSpec::Kind::Accelerated || !m.depth.is_full()) continue;
    if (m.variant == AcceleratorVariant::NGMRES) full_ng = true;
    if (m.variant == AcceleratorVariant::NGMRESr) full_ngr = true;
  }
  if (want("equivalence") && full_ng) ensure(MethodSpec::Kind::GmresRight);
  if (want("equivalence") && full_ngr) ensure(MethodSpec::Kind::GmresLeft);

  VerifyOutcome outcome;
  const std::vector<SolveReport> reports = run_methods(problem, p, methods, options);
  bool solver_error = false;
  for (const SolveReport& r : reports) {
    log << r.method << ": " << to_string(r.status) << " after " << r.iterations << " iterations\n";
    if (solver_failed(r)) solver_error = true;
  }

  OperatorNorms norms;
  norms.norm_b = norms.norm_h = std::numeric_limits<double>::infinity();
  bool needs_norms = false;
  for (const MethodSpec& m : methods) {
    if (m.kind == MethodSpec::Kind::Accelerated &&
        (m.variant == AcceleratorVariant::AAg || m.variant == AcceleratorVariant::AAr))
      needs_norms = true;
  }
  if (want("monotonicity") && needs_norms && problem.dimension() <= kVerifyNormDimension)
    norms = compute_operator_norms(problem, p);

  auto add = [&](const std::string& method, CheckResult c) {
    c.name = method + " " + c.name;
    outcome.results.push_back(std::move(c));
  };

  for (std::size_t i = 0; i < methods.size(); ++i) {
    const MethodSpec& m = methods[i];
    const SolveReport& r = reports[i];
    if (m.kind != MethodSpec::Kind::Accelerated) continue;
    if (want("orthogonality"))
      for (CheckResult& c : check_orthogonality(r, m.variant, op, th.orthogonality))
        add(r.method, std::move(c));
    if (want("identity")) add(r.method, check_step_identity(r, m.variant, op, th.identity));
    if (want("monotonicity"))
      add(r.method, check_monotonicity(r, m.variant, norms, th.monotonicity_slack));
    if (want("oracle") && m.variant == AcceleratorVariant::AA)
      add(r.method, check_aa_inverse_oracle(r, op, th.orthogonality));
    if (want("lsq-objective")) add(r.method, check_lsq_objective(r, m.variant, op));
  }

  if (want("equivalence")) {
    auto find = [&](auto pred) -> const SolveReport* {
      for (std::size_t i = 0; i < methods.size(); ++i)
        if (pred(methods[i])) return &reports[i];
      return nullptr;
    };
    for (const auto& [variant, kind, side] :
         {std::tuple{AcceleratorVariant::NGMRES, MethodSpec::Kind::GmresRight, GmresSide::Right},
          std::tuple{AcceleratorVariant::NGMRESr, MethodSpec::Kind::GmresLeft, GmresSide::Left}}) {
      const SolveReport* ng = find([&](const MethodSpec& m) {
        return m.kind == MethodSpec::Kind::Accelerated && m.variant == variant && m.depth.is_full();
      });
      const SolveReport* gm = find([&](const MethodSpec& m) { return m.kind == kind; });
      if (!ng || !gm) continue;
      const std::size_t upto = strictly_decreasing_range(*gm, side);
      CheckResult c = check_equivalence(*ng, *gm, upto, th.equivalence);
      c.note = "k* = " + std::to_string(upto) + (c.note.empty() ? "" : "; " + c.note);
      outcome.results.push_back(std::move(c));
    }
  }

  if (want("windowed-equivalence")) {
    for (AcceleratorVariant v : {AcceleratorVariant::NGMRES, AcceleratorVariant::NGMRESr}) {
      std::vector<Depth> depths;
      for (const MethodSpec& m : config.methods)
        if (m.kind == MethodSpec::Kind::Accelerated && m.variant == v) depths.push_back(m.depth);
      if (depths.empty()) continue;
      if (problem.dimension() > kMaxDenseDimension) {
        CheckResult c;
        c.name = "windowed-equivalence/" + to_string(v);
        c.threshold = th.equivalence;
        c.skipped = true;
        c.note = "dimension too large for the symmetry oracle";
        outcome.results.push_back(c);
        continue;
      }
      SolveOptions plain = options;
      plain.keep_vectors = false;
      outcome.results.push_back(
          check_windowed_equivalence(problem, p, v, depths, th.equivalence, plain));
    }
  }

  print_check_table(log, outcome.results);
  fs::create_directories(config.output_dir);
  {
    std::ofstream out(config.output_dir / "checks.jsonl");
    write_check_report(out, outcome.results);
  }
  for (const CheckResult& c : outcome.results)
    if (!c.skipped && !c.passed) outcome.exit_code = kExitCheckFailed;
  if (outcome.exit_code == kExitOk && solver_error) outcome.exit_code = kExitSolverError;
  return outcome;
}

}  // namespace fpaccel
