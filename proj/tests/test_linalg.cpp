#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fpaccel/error.hpp"
#include "fpaccel/linalg.hpp"
#include "fpaccel/problems.hpp"
#include "helpers.hpp"

using namespace fpaccel;

TEST_CASE("vector kernels") {
  CHECK(dot(Vector{1, 2}, Vector{3, 4}) == 11.0);
  CHECK(norm2(Vector{3, 4}) == 5.0);
  CHECK(norm2(Vector{}) == 0.0);
  CHECK(axpy(2.0, Vector{1, 1}, Vector{0, 1}) == Vector{2, 3});
  CHECK(subtract(Vector{3, 5}, Vector{1, 2}) == Vector{2, 3});
  CHECK(scaled(-2.0, Vector{1, -3}) == Vector{-2, 6});

  Vector y{1, 1};
  axpy_inplace(3.0, Vector{1, 2}, y);
  CHECK(y == Vector{4, 7});

  CHECK_THROWS_AS(dot(Vector{1}, Vector{1, 2}), DimensionMismatch);
  CHECK_THROWS_AS(axpy(1.0, Vector{1}, Vector{1, 2}), DimensionMismatch);
  CHECK_THROWS_AS(subtract(Vector{1}, Vector{}), DimensionMismatch);
}

TEST_CASE("norm2 does not overflow or underflow") {
  CHECK(norm2(Vector{3e200, 4e200}) == doctest::Approx(5e200));
  CHECK(norm2(Vector{3e-200, 4e-200}) == doctest::Approx(5e-200));
  CHECK_FALSE(all_finite(Vector{1.0, std::numeric_limits<double>::quiet_NaN()}));
  CHECK(all_finite(Vector{1.0, 2.0}));
}

TEST_CASE("sparse matrix structure is validated") {
  CHECK_NOTHROW(SparseMatrix(2, {0, 1, 2}, {0, 1}, {1.0, 1.0}));
  // row_ptr[0] != 0
  CHECK_THROWS_AS(SparseMatrix(2, {1, 1, 2}, {0, 1}, {1.0, 1.0}), InvalidArgument);
  // column out of range
  CHECK_THROWS_AS(SparseMatrix(2, {0, 1, 2}, {0, 2}, {1.0, 1.0}), InvalidArgument);
  // columns not strictly increasing within a row
  CHECK_THROWS_AS(SparseMatrix(2, {0, 2, 2}, {1, 0}, {1.0, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(SparseMatrix(2, {0, 2, 2}, {0, 0}, {1.0, 1.0}), InvalidArgument);
  // row_ptr[n] != nnz
  CHECK_THROWS_AS(SparseMatrix(2, {0, 1, 1}, {0, 1}, {1.0, 1.0}), InvalidArgument);
}

TEST_CASE("spmv examples") {
  CHECK(spmv(SparseMatrix::identity(3), Vector{1, 2, 3}) == Vector{1, 2, 3});
  const ProblemInstance lap = build_laplace_2d(2);
  CHECK(spmv(lap.a, Vector(4, 0.0)) == Vector(4, 0.0));
  CHECK(spmv(lap.a, Vector(4, 1.0)) == Vector{2, 2, 2, 2});
  CHECK_THROWS_AS(spmv(lap.a, Vector(3, 1.0)), DimensionMismatch);
}

TEST_CASE("spmv agrees with a dense product for n <= 64") {
  std::mt19937 rng(11);
  for (std::size_t grid : {1, 2, 3, 5, 8}) {
    for (const ProblemInstance& p :
         {build_laplace_2d(grid), build_convection_diffusion_2d(grid, 0.5, -0.3)}) {
      const DenseMatrix d = p.a.to_dense();
      const Vector x = testing::random_vector(p.dimension(), rng);
      const Vector ys = spmv(p.a, x);
      // Independent oracle: plain row-by-row summation over the dense array.
      for (std::size_t i = 0; i < d.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d.cols(); ++j) s += d(i, j) * x[j];
        CHECK(std::abs(ys[i] - s) <= 1e-13);
      }
      CHECK(testing::max_abs_diff(ys, d.multiply(x)) <= 1e-13);
    }
  }
}

TEST_CASE("dense and sparse round trips") {
  DenseMatrix d(3, 3);
  d(0, 0) = 1;
  d(1, 2) = -2;
  d(2, 1) = 5;
  const SparseMatrix s = SparseMatrix::from_dense(d);
  CHECK(s.nnz() == 3);
  CHECK(s.at(1, 2) == -2.0);
  CHECK(s.at(2, 2) == 0.0);
  const DenseMatrix back = s.to_dense();
  CHECK(back.data() == d.data());
  CHECK(s.transpose().at(2, 1) == -2.0);
  CHECK(d.transpose()(2, 1) == -2.0);
  CHECK(d.multiply_transpose(Vector{1, 1, 1}) == d.transpose().multiply(Vector{1, 1, 1}));
}

TEST_CASE("least squares: rhs in the column space") {
  const DenseMatrix m(3, 2, {1, 0, 0, 0, 1, 0});
  const LeastSquaresSolution s = solve_least_squares(m, Vector{2, 3, 0});
  CHECK(s.rank == 2);
  CHECK(s.coefficients[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(s.coefficients[1] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(s.residual_norm <= 1e-14);
}

TEST_CASE("least squares: single column, normal equation 3c = 6") {
  const DenseMatrix m(3, 1, {1, 1, 1});
  const LeastSquaresSolution s = solve_least_squares(m, Vector{1, 2, 3});
  CHECK(s.rank == 1);
  CHECK(s.coefficients[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(testing::max_abs_diff(s.residual_vector, Vector{-1, 0, 1}) <= 1e-14);
  CHECK(s.residual_norm == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("least squares: duplicated columns drop to rank 1") {
  const DenseMatrix m(3, 2, {1, 1, 1, 1, 1, 1});
  const LeastSquaresSolution s = solve_least_squares(m, Vector{1, 2, 3});
  CHECK(s.rank == 1);
  // One of the two identical columns carries the whole coefficient.
  CHECK(s.coefficients[0] + s.coefficients[1] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK((s.coefficients[0] == 0.0 || s.coefficients[1] == 0.0));
  CHECK(s.coefficients[1] == 0.0);
  CHECK(testing::max_abs_diff(s.residual_vector, Vector{-1, 0, 1}) <= 1e-14);
}

TEST_CASE("least squares: degenerate shapes and bad input") {
  const LeastSquaresSolution empty = solve_least_squares(DenseMatrix(3, 0), Vector{1, 2, 3});
  CHECK(empty.coefficients.empty());
  CHECK(empty.rank == 0);
  CHECK(empty.residual_vector == Vector{1, 2, 3});

  const LeastSquaresSolution zero = solve_least_squares(DenseMatrix(3, 2), Vector{1, 2, 3});
  CHECK(zero.rank == 0);
  CHECK(zero.coefficients == Vector{0, 0});
  CHECK(zero.residual_vector == Vector{1, 2, 3});

  DenseMatrix bad(2, 1, {1.0, std::numeric_limits<double>::infinity()});
  CHECK_THROWS_AS(solve_least_squares(bad, Vector{1, 2}), NonFiniteInput);
  CHECK_THROWS_AS(solve_least_squares(DenseMatrix(2, 1, {1, 1}),
                                      Vector{1, std::numeric_limits<double>::quiet_NaN()}),
                  NonFiniteInput);
  CHECK_THROWS_AS(solve_least_squares(DenseMatrix(2, 1, {1, 1}), Vector{1, 2, 3}),
                  DimensionMismatch);
}

TEST_CASE("least squares properties on random problems") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 4 + static_cast<std::size_t>(trial % 13);
    const std::size_t cols = 1 + static_cast<std::size_t>(trial % 4);
    std::vector<Vector> columns;
    for (std::size_t j = 0; j < cols; ++j) columns.push_back(testing::random_vector(rows, rng));
    // Every fifth problem gets a dependent column.
    if (trial % 5 == 0 && cols >= 2) columns[1] = axpy(2.0, columns[0], Vector(rows, 0.0));
    const DenseMatrix m = DenseMatrix::from_columns(columns, rows);
    const Vector rhs = testing::random_vector(rows, rng);
    const LeastSquaresSolution s = solve_least_squares(m, rhs);

    // residual = rhs - M c to 1e-12 ||rhs||
    const Vector direct = subtract(rhs, m.multiply(s.coefficients));
    CHECK(norm2(subtract(direct, s.residual_vector)) <= 1e-12 * norm2(rhs));
    // M^T residual = 0 on retained columns
    const Vector mt = m.multiply_transpose(s.residual_vector);
    CHECK(norm2(mt) <= 1e-10 * m.frobenius_norm() * norm2(rhs));
    CHECK(s.residual_norm == doctest::Approx(norm2(s.residual_vector)).epsilon(1e-12));
    if (trial % 5 == 0 && cols >= 2) CHECK(s.rank == cols - 1);
    else CHECK(s.rank == cols);

    // No feasible perturbation of the coefficients does better.
    for (std::size_t j = 0; j < cols; ++j) {
      Vector c = s.coefficients;
      c[j] += 1e-4;
      CHECK(norm2(subtract(rhs, m.multiply(c))) >= s.residual_norm * (1 - 1e-14));
    }
  }
}

TEST_CASE("forward substitution") {
  const Vector v{4, -2, 7};
  CHECK(forward_substitution(SparseMatrix::identity(3), v) == v);

  DenseMatrix l(2, 2);
  l(0, 0) = 2;
  l(1, 0) = 1;
  l(1, 1) = 1;
  CHECK(forward_substitution(SparseMatrix::from_dense(l), Vector{2, 3}) == Vector{1, 2});

  const SparseMatrix lower = lower_triangular_part(build_laplace_2d(2).a);
  const Vector ones(4, 1.0);
  CHECK(testing::max_abs_diff(forward_substitution(lower, spmv(lower, ones)), ones) <= 1e-15);

  DenseMatrix zero_diag(2, 2);
  zero_diag(0, 0) = 1;
  zero_diag(1, 0) = 1;
  CHECK_THROWS_AS(forward_substitution(SparseMatrix::from_dense(zero_diag), Vector{1, 1}),
                  SingularPreconditioner);
  DenseMatrix upper(2, 2);
  upper(0, 0) = 1;
  upper(0, 1) = 1;
  upper(1, 1) = 1;
  CHECK_THROWS_AS(forward_substitution(SparseMatrix::from_dense(upper), Vector{1, 1}),
                  InvalidArgument);
}

TEST_CASE("forward substitution round trips") {
  std::mt19937 rng(3);
  for (std::size_t grid : {2, 4, 8}) {
    const SparseMatrix lower =
        lower_triangular_part(build_convection_diffusion_2d(grid, 0.5, 0.5).a);
    for (int t = 0; t < 5; ++t) {
      const Vector v = testing::random_vector(grid * grid, rng);
      const Vector w = forward_substitution(lower, v);
      CHECK(norm2(subtract(spmv(lower, w), v)) <= 1e-12 * norm2(v));
    }
  }
}

TEST_CASE("dense solve") {
  CHECK(dense_solve(DenseMatrix::identity(2), Vector{5, 6}) == Vector{5, 6});
  DenseMatrix d(2, 2);
  d(0, 0) = 2;
  d(1, 1) = 4;
  CHECK(dense_solve(d, Vector{2, 8}) == Vector{1, 2});

  // Needs a row swap.
  DenseMatrix swap(2, 2, {0, 1, 1, 0});
  CHECK(dense_solve(swap, Vector{3, 4}) == Vector{4, 3});

  DenseMatrix singular(2, 2, {1, 2, 2, 4});
  CHECK_THROWS_AS(dense_solve(singular, Vector{1, 1}), SingularMatrix);

  std::mt19937 rng(9);
  for (std::size_t n : {3, 10, 40}) {
    std::vector<Vector> cols;
    for (std::size_t j = 0; j < n; ++j) {
      Vector c = testing::random_vector(n, rng);
      c[j] += static_cast<double>(n);
      cols.push_back(c);
    }
    const DenseMatrix a = DenseMatrix::from_columns(cols, n);
    const Vector b = testing::random_vector(n, rng);
    const Vector x = dense_solve(a, b);
    CHECK(norm2(subtract(a.multiply(x), b)) <= 1e-10 * norm2(b));
  }
}
