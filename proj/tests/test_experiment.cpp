#include <doctest.h>

#include <fstream>
#include <sstream>

#include "fpaccel/error.hpp"
#include "fpaccel/experiment.hpp"

using namespace fpaccel;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fpaccel_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig small_config(const std::string& name) {
  ExperimentConfig c;
  c.n = 6;
  c.methods = {parse_method_spec("AA:3"), parse_method_spec("NGMRES:full"),
               parse_method_spec("gmres-right")};
  c.output_dir = scratch_dir(name);
  return c;
}

}  // namespace

TEST_CASE("method specs parse and round trip") {
  const MethodSpec aa = parse_method_spec("aa:5");
  CHECK(aa.kind == MethodSpec::Kind::Accelerated);
  CHECK(aa.variant == AcceleratorVariant::AA);
  CHECK(aa.depth == Depth::of(5));
  CHECK(aa.label() == "AA(5)");
  CHECK(aa.spec() == "AA:5");
  CHECK(aa.file_stem() == "AA_5");

  const MethodSpec full = parse_method_spec("NGMRESr:FULL");
  CHECK(full.depth.is_full());
  CHECK(full.label() == "NGMRESr(full)");
  CHECK(parse_method_spec("gmres:right").kind == MethodSpec::Kind::GmresRight);
  CHECK(parse_method_spec("GMRES-left").label() == "GMRES-left");
  CHECK(parse_method_spec("richardson").label() == "Richardson");

  for (const char* s : {"AA:0", "AAg:15", "AAr:full", "NGMRES:1", "gmres-right", "gmres-left",
                        "richardson"})
    CHECK(parse_method_spec(parse_method_spec(s).spec()) == parse_method_spec(s));

  for (const char* bad : {"", "AA", "AA:", "AA:-1", "AA:1.5", "XX:3", "gmres", "AA:5x"})
    CHECK_THROWS_AS(parse_method_spec(bad), InvalidArgument);
}

TEST_CASE("preconditioner strings") {
  const ProblemInstance p = build_laplace_2d(3);
  CHECK(parse_preconditioner("identity", p).describe() == "identity");
  CHECK(parse_preconditioner("lower-tri", p).describe() == "lower-tri");
  CHECK(parse_preconditioner("omega:0.25", p).apply(Vector{4.0}) == Vector{1.0});
  for (const char* bad : {"omega:", "omega:abc", "omega:0.2x", "omega:0", "jacobi"})
    CHECK_THROWS_AS(parse_preconditioner(bad, p), InvalidArgument);
}

TEST_CASE("config JSON") {
  const nlohmann::json j = nlohmann::json::parse(R"({
    "problem": "convdiff", "n": 8, "c1": 0.5, "c2": 0.25,
    "methods": ["AA:5", "NGMRES:full", "gmres-right"],
    "tol": 1e-8, "maxit": 300, "plot_norm": "classical",
    "checks": ["orthogonality"], "title": "t"
  })");
  const ExperimentConfig c = config_from_json(j);
  CHECK(c.problem == "convdiff");
  CHECK(c.n == 8);
  CHECK(c.c2 == 0.25);
  CHECK(c.methods.size() == 3);
  CHECK(c.plot_norm == NormKind::Classical);
  CHECK(c.preconditioner == "lower-tri");  // default kept
  CHECK_NOTHROW(validate(c));

  const ExperimentConfig back = config_from_json(config_to_json(c));
  CHECK(back.methods == c.methods);
  CHECK(back.tol == c.tol);
  CHECK(back.checks == c.checks);
  CHECK(back.title == c.title);

  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"grid": 4})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"n": "four"})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"plot_norm": "energy"})")),
                  InvalidArgument);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse("[1]")), InvalidArgument);

  ExperimentConfig bad = c;
  bad.methods.clear();
  CHECK_THROWS_AS(validate(bad), InvalidArgument);
  bad = c;
  bad.n = 0;
  CHECK_THROWS_AS(validate(bad), InvalidArgument);
  bad = c;
  bad.tol = 0.0;
  CHECK_THROWS_AS(validate(bad), InvalidArgument);
  bad = c;
  bad.checks = {"nonsense"};
  CHECK_THROWS_AS(validate(bad), InvalidArgument);
  bad = c;
  bad.problem = "poisson";
  CHECK_THROWS_AS(validate(bad), InvalidArgument);

  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), InvalidArgument);
}

TEST_CASE("shipped figure configs load and validate") {
  for (const char* fig : {"fig1", "fig2", "fig3", "fig4", "fig5"}) {
    const ExperimentConfig c = load_config(fs::path(FPACCEL_CONFIG_DIR) / (std::string(fig) + ".json"));
    CHECK_NOTHROW(validate(c));
    CHECK(c.tol == 1e-10);
  }
}

TEST_CASE("trace CSV") {
  SolveReport r;
  r.method = "X";
  r.status = SolveStatus::Converged;
  for (std::size_t k = 0; k < 3; ++k) {
    StepRecord rec;
    rec.k = k;
    rec.classical_norm = 4.0 / static_cast<double>(1 << (2 * k));
    rec.preconditioned_norm = 2.0 / static_cast<double>(1 << k);
    rec.lsq_rank = k;
    r.trace.push_back(rec);
  }
  r.iterations = 2;

  std::ostringstream abs_out;
  write_trace_csv(abs_out, r, false);
  const auto rows = lines_of(abs_out.str());
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "k,classical_norm,preconditioned_norm,lsq_rank,status");
  CHECK(rows[1] == "0,4,2,0,running");
  CHECK(rows[3] == "2,0.25,0.5,2,converged");

  std::ostringstream rel_out;
  write_trace_csv(rel_out, r, true);
  const auto rel = lines_of(rel_out.str());
  CHECK(rel[1] == "0,1,1,0,running");
  CHECK(rel[3] == "2,0.0625,0.25,2,converged");

  // Round trip at full precision.
  r.trace[1].classical_norm = 0.1;
  std::ostringstream exact;
  write_trace_csv(exact, r, false);
  const std::string row = lines_of(exact.str())[2];
  const double parsed = std::stod(row.substr(row.find(',') + 1));
  CHECK(parsed == 0.1);
}

TEST_CASE("summary CSV and plot script") {
  SolveReport a;
  a.method = "AA(5)";
  a.status = SolveStatus::Converged;
  a.iterations = 7;
  a.trace.resize(8);
  a.trace.back().classical_norm = 0.5;
  a.trace.back().preconditioned_norm = 0.25;
  SolveReport b;
  b.method = "Richardson";
  b.status = SolveStatus::MaxIterations;
  b.iterations = 9;
  b.trace.resize(10);
  std::ostringstream out;
  write_summary_csv(out, {a, b});
  const auto rows = lines_of(out.str());
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "method,status,iterations,iterations_to_tol,final_classical_norm,final_preconditioned_norm");
  CHECK(rows[1] == "AA(5),converged,7,7,0.5,0.25");
  CHECK(rows[2] == "Richardson,max-iterations,9,,0,0");

  std::ostringstream plot;
  write_plot_script(plot, {"AA_5.csv", "Richardson.csv"}, {"AA(5)", "Richardson"},
                    NormKind::Classical, "demo", true);
  const std::string s = plot.str();
  CHECK(s.find("'AA_5.csv' using 1:2 skip 1") != std::string::npos);
  CHECK(s.find("title 'Richardson'") != std::string::npos);
  CHECK(s.find("relative classical") != std::string::npos);
  std::ostringstream pre;
  write_plot_script(pre, {"a.csv"}, {"a"}, NormKind::Preconditioned, "", false);
  CHECK(pre.str().find("using 1:3") != std::string::npos);
}

TEST_CASE("run_experiment writes traces, summary and plot") {
  const ExperimentConfig c = small_config("run");
  std::ostringstream log;
  const RunOutcome r = run_experiment(c, log);
  CHECK(r.exit_code == kExitOk);
  REQUIRE(r.reports.size() == 3);
  CHECK(r.reports[0].method == "AA(3)");
  CHECK(r.reports[2].method == "GMRES-right");
  for (const char* f : {"AA_3.csv", "NGMRES_full.csv", "GMRES-right.csv", "summary.csv", "plot.gp"})
    CHECK(fs::exists(c.output_dir / f));
  CHECK(r.files.size() == 5);
  const auto rows = lines_of(slurp(c.output_dir / "AA_3.csv"));
  CHECK(rows.size() == r.reports[0].trace.size() + 1);
  CHECK(rows.back().find("converged") != std::string::npos);
  CHECK(lines_of(slurp(c.output_dir / "summary.csv")).size() == 4);
  CHECK(log.str().find("AA(3): converged") != std::string::npos);
  fs::remove_all(c.output_dir);
}

TEST_CASE("run_experiment reports divergence as a solver error") {
  ExperimentConfig c = small_config("diverge");
  c.preconditioner = "identity";
  c.methods = {parse_method_spec("richardson")};
  c.maxit = 5000;
  std::ostringstream log;
  const RunOutcome r = run_experiment(c, log);
  CHECK(r.reports[0].status == SolveStatus::Diverged);
  CHECK(r.exit_code == kExitSolverError);
  fs::remove_all(c.output_dir);
}

TEST_CASE("run_verify exit codes and report") {
  ExperimentConfig c = small_config("verify");
  c.methods.push_back(parse_method_spec("AAr:full"));
  std::ostringstream log;
  const VerifyOutcome ok = run_verify(c, {"orthogonality", "identity", "monotonicity", "equivalence"},
                                      DiagnosticThresholds{}, log);
  CHECK(ok.exit_code == kExitOk);
  bool saw_equivalence = false;
  for (const CheckResult& r : ok.results) {
    INFO(r.name << " " << r.max_defect);
    CHECK(r.passed);
    if (r.name.rfind("equivalence/", 0) == 0) saw_equivalence = true;
  }
  CHECK(saw_equivalence);
  CHECK(fs::exists(c.output_dir / "checks.jsonl"));
  CHECK(lines_of(slurp(c.output_dir / "checks.jsonl")).size() == ok.results.size());
  CHECK(log.str().find("PASS") != std::string::npos);

  // An impossible threshold must surface as exit code 1.
  DiagnosticThresholds strict;
  strict.orthogonality = 1e-300;
  std::ostringstream log2;
  const VerifyOutcome failed = run_verify(c, {"orthogonality"}, strict, log2);
  CHECK(failed.exit_code == kExitCheckFailed);
  CHECK(log2.str().find("FAIL") != std::string::npos);

  CHECK_THROWS_AS(run_verify(c, {"bogus"}, DiagnosticThresholds{}, log2), InvalidArgument);
  fs::remove_all(c.output_dir);
}

TEST_CASE("run_methods keeps input order") {
  const ProblemInstance p = build_laplace_2d(5);
  const Preconditioner pc = Preconditioner::lower_triangular_of(p.a);
  const std::vector<MethodSpec> methods = {parse_method_spec("richardson"), parse_method_spec("AAg:2"),
                                           parse_method_spec("gmres-left"), parse_method_spec("NGMRESr:4")};
  const auto reports = run_methods(p, pc, methods, SolveOptions{});
  REQUIRE(reports.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(reports[i].method == methods[i].label());
    const SolveReport serial = run_method(p, pc, methods[i], SolveOptions{});
    CHECK(serial.solution == reports[i].solution);
  }
}
