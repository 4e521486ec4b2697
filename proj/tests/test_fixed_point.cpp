#include <doctest.h>

#include <cmath>
#include <random>

#include "fpaccel/error.hpp"
#include "fpaccel/fixed_point.hpp"
#include "fpaccel/linalg.hpp"
#include "helpers.hpp"

using namespace fpaccel;

namespace {

ProblemInstance identity_problem(Vector b) {
  ProblemInstance p;
  p.a = SparseMatrix::identity(b.size());
  p.x0 = Vector(b.size(), 0.0);
  p.b = std::move(b);
  return p;
}

// b chosen so that x_star solves A x = b exactly in floating point.
ProblemInstance with_exact_start(ProblemInstance p, const Vector& x_star) {
  p.b = spmv(p.a, x_star);
  p.x0 = x_star;
  return p;
}

}  // namespace

TEST_CASE("q at the exact solution is a fixed point") {
  const ProblemInstance p = with_exact_start(build_laplace_2d(3), Vector{1, -2, 0.5, 3, 0, 1, 2, 2, -1});
  const RichardsonOperator op(p, Preconditioner::lower_triangular_of(p.a));
  CHECK(q_apply(op, p.x0) == p.x0);
  const ResidualPair r = residuals(op, p.x0);
  CHECK(norm2(r.classical) == 0.0);
  CHECK(norm2(r.preconditioned) == 0.0);
}

TEST_CASE("q with A = I, P = I maps anything to b") {
  const Vector x{1, 2, 3};
  const Vector e{0.5, -1, 2};
  const ProblemInstance p = identity_problem(axpy(1.0, x, e));
  const RichardsonOperator op(p, Preconditioner::identity());
  CHECK(op.q(x) == p.b);
}

TEST_CASE("q on Laplace N=2 with P = L^-1 at x = 0 is a forward sweep of b") {
  const ProblemInstance p = build_laplace_2d(2);
  const RichardsonOperator op(p, Preconditioner::lower_triangular_of(p.a));
  // Hand forward sweep of L w = (1,1,1,1).
  const Vector expected{0.25, 0.3125, 0.3125, 0.40625};
  CHECK(testing::max_abs_diff(op.q(p.x0), expected) <= 1e-16);
  CHECK(op.q(p.x0) == forward_substitution(lower_triangular_part(p.a), p.b));
}

TEST_CASE("residual notions") {
  const ProblemInstance p = build_laplace_2d(2);
  const RichardsonOperator op(p, Preconditioner::lower_triangular_of(p.a));
  CHECK(op.residuals(p.x0).classical == Vector(4, -1.0));

  const RichardsonOperator plain(p, Preconditioner::identity());
  std::mt19937 rng(1);
  const Vector x = testing::random_vector(4, rng);
  const ResidualPair r = plain.residuals(x);
  CHECK(r.classical == r.preconditioned);

  // q is formed as x - r, so that identity is exact; the reverse one is not.
  const FixedPointEvaluation e = op.evaluate(x);
  CHECK(e.image == subtract(x, e.residuals.preconditioned));
  CHECK(testing::max_abs_diff(e.residuals.preconditioned, subtract(x, e.image)) <= 1e-15 * 4);
  CHECK(testing::max_abs_diff(e.residuals.preconditioned,
                              op.apply_p(e.residuals.classical)) <= 1e-14 * norm2(x));
}

TEST_CASE("q is affine with linear part B = I - PA") {
  std::mt19937 rng(21);
  for (std::size_t grid : {2, 4, 8, 16}) {
    for (const ProblemInstance& p :
         {build_laplace_2d(grid), build_convection_diffusion_2d(grid, 0.5, 0.5)}) {
      for (const Preconditioner& pc : {Preconditioner::lower_triangular_of(p.a),
                                       Preconditioner::scaled_identity(0.2),
                                       Preconditioner::identity()}) {
        const RichardsonOperator op(p, pc);
        for (int t = 0; t < 3; ++t) {
          const Vector x = testing::random_vector(p.dimension(), rng);
          const Vector y = testing::random_vector(p.dimension(), rng);
          const Vector lhs = subtract(op.q(x), op.q(y));
          const Vector rhs = op.apply_b(subtract(x, y));
          CHECK(norm2(subtract(lhs, rhs)) <= 1e-12 * std::max(1.0, norm2(rhs)));
          // H = I - AP satisfies A B = H A.
          const Vector v = testing::random_vector(p.dimension(), rng);
          const Vector ab = op.apply_a(op.apply_b(v));
          const Vector ha = op.apply_h(op.apply_a(v));
          CHECK(norm2(subtract(ab, ha)) <= 1e-12 * std::max(1.0, norm2(ab)));
        }
      }
    }
  }
}

TEST_CASE("operator dimension mismatch is rejected") {
  const ProblemInstance p = build_laplace_2d(2);
  const RichardsonOperator op(p, Preconditioner::identity());
  CHECK_THROWS_AS(op.q(Vector(3, 0.0)), DimensionMismatch);
  ProblemInstance bad = p;
  bad.b.pop_back();
  CHECK_THROWS_AS(RichardsonOperator(bad, Preconditioner::identity()), DimensionMismatch);
}

TEST_CASE("richardson: trivial cases") {
  const ProblemInstance exact = with_exact_start(build_laplace_2d(4), Vector(16, 0.75));
  const SolveReport r0 = run_richardson(RichardsonOperator(exact, Preconditioner::identity()));
  CHECK(r0.converged());
  CHECK(r0.iterations == 0);
  CHECK(r0.trace.size() == 1);

  const ProblemInstance id = identity_problem(Vector{3, -1, 2});
  const SolveReport r1 = run_richardson(RichardsonOperator(id, Preconditioner::identity()));
  CHECK(r1.converged());
  CHECK(r1.iterations == 1);
  CHECK(r1.solution == id.b);
}

TEST_CASE("richardson: option validation and maxit") {
  const ProblemInstance p = build_laplace_2d(4);
  const RichardsonOperator op(p, Preconditioner::lower_triangular_of(p.a));
  SolveOptions bad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(run_richardson(op, bad), InvalidArgument);
  bad.tol = 1e-8;
  bad.maxit = 0;
  CHECK_THROWS_AS(run_richardson(op, bad), InvalidArgument);

  SolveOptions few;
  few.maxit = 3;
  const SolveReport r = run_richardson(op, few);
  CHECK(r.status == SolveStatus::MaxIterations);
  CHECK(r.iterations == 3);
  CHECK(r.trace.size() == 4);
}

TEST_CASE("richardson diverges with a non-finite report") {
  const ProblemInstance p = build_laplace_2d(4);
  // omega = 1 gives rho(I - A) > 1; the iterates overflow eventually.
  SolveOptions o;
  o.maxit = 5000;
  const SolveReport r = run_richardson(RichardsonOperator(p, Preconditioner::identity()), o);
  CHECK(r.status == SolveStatus::Diverged);
  CHECK_FALSE(r.message.empty());
  CHECK(r.iterations + 1 == r.trace.size());
}

TEST_CASE("richardson on Laplace N=64 is monotone and slow") {
  const ProblemInstance p = build_laplace_2d(64);
  const RichardsonOperator op(p, Preconditioner::lower_triangular_of(p.a));
  SolveOptions o;
  o.tol = 1e-8;
  o.maxit = 20000;
  const SolveReport r = run_richardson(op, o);
  REQUIRE(r.converged());
  // Gauss-Seidel on the model problem: rho(B) = cos^2(pi h), h = 1/65.
  const double rho = std::pow(std::cos(std::acos(-1.0) / 65.0), 2);
  const double predicted = std::log(o.tol) / std::log(rho);
  CHECK(std::abs(static_cast<double>(r.iterations) - predicted) <= 0.05 * predicted);
  for (std::size_t k = 1; k < r.trace.size(); ++k)
    CHECK(r.trace[k].preconditioned_norm <= r.trace[k - 1].preconditioned_norm);
}
