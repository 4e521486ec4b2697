#include "fpaccel/fixed_point.hpp"

#include <cmath>

#include "fpaccel/error.hpp"

namespace fpaccel {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max-iterations";
    case SolveStatus::Breakdown: return "breakdown";
    case SolveStatus::Diverged: return "diverged";
  }
  return "unknown";
}

RichardsonOperator::RichardsonOperator(ProblemInstance problem, Preconditioner p)
    : problem_(std::move(problem)), p_(std::move(p)) {
  const std::size_t n = problem_.dimension();
  if (problem_.b.size() != n || problem_.x0.size() != n)
    throw DimensionMismatch("RichardsonOperator: b and x0 must match the operator dimension");
  if (const auto* d = std::get_if<Preconditioner::Dense>(&p_.variant()); d && d->matrix.rows() != n)
    throw DimensionMismatch("RichardsonOperator: preconditioner dimension mismatch");
  if (const auto* l = std::get_if<Preconditioner::InverseLowerTriangular>(&p_.variant());
      l && l->lower.n() != n)
    throw DimensionMismatch("RichardsonOperator: preconditioner dimension mismatch");
}

Vector RichardsonOperator::classical_residual(std::span<const double> x) const {
  Vector g = spmv(problem_.a, x);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] -= problem_.b[i];
  return g;
}

FixedPointEvaluation RichardsonOperator::evaluate(std::span<const double> x) const {
  FixedPointEvaluation e;
  e.residuals.classical = classical_residual(x);
  e.residuals.preconditioned = p_.apply(e.residuals.classical);
  e.image = subtract(x, e.residuals.preconditioned);
  return e;
}

Vector RichardsonOperator::apply_b(std::span<const double> v) const {
  return subtract(v, p_.apply(spmv(problem_.a, v)));
}

Vector RichardsonOperator::apply_h(std::span<const double> v) const {
  return subtract(v, spmv(problem_.a, p_.apply(v)));
}

namespace detail {

StepRecord make_record(std::size_t k, std::span<const double> x, const ResidualPair& res,
                       bool keep_vectors) {
  StepRecord rec;
  rec.k = k;
  rec.classical_norm = norm2(res.classical);
  rec.preconditioned_norm = norm2(res.preconditioned);
  if (keep_vectors) {
    rec.iterate.assign(x.begin(), x.end());
    rec.classical_residual = res.classical;
    rec.preconditioned_residual = res.preconditioned;
  }
  return rec;
}

bool meets_tolerance(double norm, double initial_norm, double tol) {
  return norm <= tol * initial_norm;
}

}  // namespace detail

SolveReport run_richardson(const RichardsonOperator& op, const SolveOptions& options) {
  if (!(options.tol > 0.0)) throw InvalidArgument("run_richardson: tol must be positive");
  if (options.maxit < 1) throw InvalidArgument("run_richardson: maxit must be at least 1");

  SolveReport report;
  report.method = "Richardson";
  Vector x = op.problem().x0;
  double r0 = 0.0;
  for (std::size_t k = 0;; ++k) {
    FixedPointEvaluation e = op.evaluate(x);
    report.trace.push_back(detail::make_record(k, x, e.residuals, options.keep_vectors));
    const double rk = report.trace.back().preconditioned_norm;
    if (k == 0) r0 = rk;
    report.iterations = k;
    if (!all_finite(x) || !std::isfinite(rk)) {
      report.status = SolveStatus::Diverged;
      report.message = "non-finite iterate at k=" + std::to_string(k);
      break;
    }
    if (detail::meets_tolerance(rk, r0, options.tol)) {
      report.status = SolveStatus::Converged;
      break;
    }
    if (k == options.maxit) {
      report.status = SolveStatus::MaxIterations;
      break;
    }
    x = std::move(e.image);
  }
  report.solution = std::move(x);
  return report;
}

}  // namespace fpaccel
