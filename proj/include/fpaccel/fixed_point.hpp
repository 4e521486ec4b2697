#pragma once

#include "fpaccel/problems.hpp"
#include "fpaccel/report.hpp"

namespace fpaccel {

struct ResidualPair {
  Vector classical;       // A x - b
  Vector preconditioned;  // P (A x - b)
};

/// Everything one application of q produces.
struct FixedPointEvaluation {
  Vector image;  // q(x)
  ResidualPair residuals;
};

/// The preconditioned Richardson map q(x) = x + P(b - Ax) together with the
/// iteration matrices B = I - PA and H = I - AP, applied as operators.
class RichardsonOperator {
 public:
  RichardsonOperator(ProblemInstance problem, Preconditioner p);

  const ProblemInstance& problem() const { return problem_; }
  const Preconditioner& preconditioner() const { return p_; }
  std::size_t dimension() const { return problem_.dimension(); }

  /// One spmv and one preconditioner application. q(x) is formed as x - r(x)
  /// so that r(x) = x - q(x) holds along the same floating-point path.
  FixedPointEvaluation evaluate(std::span<const double> x) const;

  Vector q(std::span<const double> x) const { return evaluate(x).image; }
  ResidualPair residuals(std::span<const double> x) const { return evaluate(x).residuals; }
  Vector classical_residual(std::span<const double> x) const;

  Vector apply_a(std::span<const double> v) const { return spmv(problem_.a, v); }
  Vector apply_p(std::span<const double> v) const { return p_.apply(v); }
  /// v - P A v
  Vector apply_b(std::span<const double> v) const;
  /// v - A P v
  Vector apply_h(std::span<const double> v) const;

 private:
  ProblemInstance problem_;
  Preconditioner p_;
};

inline Vector q_apply(const RichardsonOperator& op, std::span<const double> x) { return op.q(x); }
inline ResidualPair residuals(const RichardsonOperator& op, std::span<const double> x) {
  return op.residuals(x);
}

/// Plain fixed-point iteration x_{k+1} = q(x_k).
SolveReport run_richardson(const RichardsonOperator& op, const SolveOptions& options = {});

namespace detail {

/// Shared bookkeeping for iteration loops: appends the record for x_k.
StepRecord make_record(std::size_t k, std::span<const double> x, const ResidualPair& res,
                       bool keep_vectors);

bool meets_tolerance(double norm, double initial_norm, double tol);

}  // namespace detail

}  // namespace fpaccel
