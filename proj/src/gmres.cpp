#include "fpaccel/gmres.hpp"

#include <cmath>

#include "fpaccel/error.hpp"

namespace fpaccel {

std::string to_string(GmresSide side) { return side == GmresSide::Left ? "left" : "right"; }

ArnoldiState::ArnoldiState(LinearOperator op, std::span<const double> start)
    : op_(std::move(op)), rhs_norm_(norm2(start)) {
  g_.push_back(rhs_norm_);
  if (rhs_norm_ > 0.0) basis_.push_back(scaled(1.0 / rhs_norm_, start));
}

bool ArnoldiState::step() {
  if (basis_.size() <= columns_) return false;
  const std::size_t j = columns_;
  Vector w = op_(basis_[j]);
  Vector h(j + 2, 0.0);

  const double before = norm2(w);
  for (std::size_t i = 0; i <= j; ++i) {
    const double hij = dot(w, basis_[i]);
    h[i] = hij;
    axpy_inplace(-hij, basis_[i], w);
  }
  double after = norm2(w);
  if (after < before / std::sqrt(2.0)) {
    for (std::size_t i = 0; i <= j; ++i) {
      const double c = dot(w, basis_[i]);
      h[i] += c;
      axpy_inplace(-c, basis_[i], w);
    }
    after = norm2(w);
  }
  h[j + 1] = after;
  hessenberg_.push_back(h);

  // Rotate the new column with the previous rotations, then annihilate h[j+1].
  Vector r = h;
  for (std::size_t i = 0; i < j; ++i) {
    const double t = cs_[i] * r[i] + sn_[i] * r[i + 1];
    r[i + 1] = -sn_[i] * r[i] + cs_[i] * r[i + 1];
    r[i] = t;
  }
  const double den = std::hypot(r[j], r[j + 1]);
  const double c = den == 0.0 ? 1.0 : r[j] / den;
  const double s = den == 0.0 ? 0.0 : r[j + 1] / den;
  cs_.push_back(c);
  sn_.push_back(s);
  r[j] = den;
  r[j + 1] = 0.0;
  r_.push_back(std::move(r));
  g_.push_back(-s * g_[j]);
  g_[j] = c * g_[j];
  ++columns_;

  if (after < kBreakdownTolerance * rhs_norm_) return false;
  basis_.push_back(scaled(1.0 / after, w));
  return true;
}

Vector ArnoldiState::solve_projected() const {
  Vector y(columns_, 0.0);
  for (std::size_t i = columns_; i-- > 0;) {
    double s = g_[i];
    for (std::size_t j = i + 1; j < columns_; ++j) s -= r_[j][i] * y[j];
    if (r_[i][i] == 0.0) throw SingularMatrix("GMRES: singular projected triangle");
    y[i] = s / r_[i][i];
  }
  return y;
}

Vector ArnoldiState::combine(std::span<const double> y) const {
  Vector z(basis_.empty() ? 0 : basis_[0].size(), 0.0);
  for (std::size_t j = 0; j < y.size(); ++j) axpy_inplace(y[j], basis_[j], z);
  return z;
}

SolveReport gmres_preconditioned(const ProblemInstance& problem, const Preconditioner& p,
                                 GmresSide side, const SolveOptions& options) {
  if (!(options.tol > 0.0)) throw InvalidArgument("gmres: tol must be positive");
  const RichardsonOperator rich(problem, p);

  SolveReport report;
  report.method = "GMRES-" + to_string(side);

  const Vector& x0 = problem.x0;
  FixedPointEvaluation e0 = rich.evaluate(x0);
  report.trace.push_back(detail::make_record(0, x0, e0.residuals, options.keep_vectors));
  const double r0 = report.trace.back().preconditioned_norm;
  report.solution = x0;
  if (detail::meets_tolerance(r0, r0, options.tol)) {
    report.status = SolveStatus::Converged;
    return report;
  }

  // Start from the negated residual, b - A x0 (right) or P(b - A x0) (left).
  Vector start = side == GmresSide::Right ? scaled(-1.0, e0.residuals.classical)
                                          : scaled(-1.0, e0.residuals.preconditioned);
  LinearOperator op = side == GmresSide::Right
                          ? LinearOperator([&](std::span<const double> v) {
                              return spmv(problem.a, p.apply(v));
                            })
                          : LinearOperator([&](std::span<const double> v) {
                              return p.apply(spmv(problem.a, v));
                            });
  ArnoldiState arnoldi(std::move(op), start);

  for (std::size_t k = 1;; ++k) {
    const bool extended = arnoldi.step();
    const Vector z = arnoldi.combine(arnoldi.solve_projected());
    Vector x = side == GmresSide::Right ? axpy(1.0, p.apply(z), x0) : axpy(1.0, z, x0);
    FixedPointEvaluation e = rich.evaluate(x);
    report.trace.push_back(detail::make_record(k, x, e.residuals, options.keep_vectors));
    report.iterations = k;
    report.solution = std::move(x);

    const double rk = report.trace.back().preconditioned_norm;
    if (!std::isfinite(rk) || !all_finite(report.solution)) {
      report.status = SolveStatus::Diverged;
      report.message = "non-finite iterate at k=" + std::to_string(k);
      break;
    }
    if (!extended) {
      report.status = SolveStatus::Converged;
      report.lucky_breakdown = true;
      break;
    }
    if (detail::meets_tolerance(rk, r0, options.tol)) {
      report.status = SolveStatus::Converged;
      break;
    }
    if (k >= options.maxit) {
      report.status = SolveStatus::MaxIterations;
      break;
    }
  }
  return report;
}

bool residual_history_strictly_decreasing(const SolveReport& report, std::size_t upto,
                                          GmresSide side) {
  if (upto >= report.trace.size())
    throw InvalidArgument("residual_history_strictly_decreasing: index beyond trace");
  for (std::size_t k = 1; k <= upto; ++k) {
    const StepRecord& prev = report.trace[k - 1];
    const StepRecord& cur = report.trace[k];
    const double a = side == GmresSide::Right ? prev.classical_norm : prev.preconditioned_norm;
    const double b = side == GmresSide::Right ? cur.classical_norm : cur.preconditioned_norm;
    if (!(b < a)) return false;
  }
  return true;
}

std::size_t strictly_decreasing_range(const SolveReport& report, GmresSide side) {
  std::size_t upto = 0;
  for (std::size_t k = 1; k < report.trace.size(); ++k) {
    const StepRecord& prev = report.trace[k - 1];
    const StepRecord& cur = report.trace[k];
    const double a = side == GmresSide::Right ? prev.classical_norm : prev.preconditioned_norm;
    const double b = side == GmresSide::Right ? cur.classical_norm : cur.preconditioned_norm;
    if (!(b < a)) break;
    upto = k;
  }
  return upto;
}

}  // namespace fpaccel
