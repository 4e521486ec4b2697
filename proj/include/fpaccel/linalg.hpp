#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fpaccel {

using Vector = std::vector<double>;

// ---------------------------------------------------------------------------
// Vector kernels. All of them throw DimensionMismatch on length mismatch.
// ---------------------------------------------------------------------------

double dot(std::span<const double> u, std::span<const double> v);
double norm2(std::span<const double> v);

/// Returns a*x + y.
Vector axpy(double a, std::span<const double> x, std::span<const double> y);

/// Returns u - v.
Vector subtract(std::span<const double> u, std::span<const double> v);

/// In-place y += a*x.
void axpy_inplace(double a, std::span<const double> x, std::span<double> y);

Vector scaled(double a, std::span<const double> v);

bool all_finite(std::span<const double> v);

// ---------------------------------------------------------------------------
// Dense column-major matrix.
// ---------------------------------------------------------------------------
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> column_major);

  static DenseMatrix identity(std::size_t n);
  /// Builds a matrix whose j-th column is columns[j]; all columns must share a length.
  static DenseMatrix from_columns(const std::vector<Vector>& columns, std::size_t rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

  std::span<double> column(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> column(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }

  const std::vector<double>& data() const { return data_; }

  Vector multiply(std::span<const double> x) const;
  Vector multiply_transpose(std::span<const double> x) const;
  DenseMatrix transpose() const;
  double frobenius_norm() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Square CSR matrix. Structure is validated at construction and immutable.
// ---------------------------------------------------------------------------
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t n, std::vector<std::size_t> row_ptr, std::vector<std::size_t> col_idx,
               std::vector<double> values);

  static SparseMatrix identity(std::size_t n);
  /// Keeps entries with |a_ij| != 0 only.
  static SparseMatrix from_dense(const DenseMatrix& a);

  std::size_t n() const { return n_; }
  std::size_t nnz() const { return values_.size(); }
  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::size_t>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }

  /// Entry lookup by binary search; zero when not stored.
  double at(std::size_t i, std::size_t j) const;

  DenseMatrix to_dense() const;
  SparseMatrix transpose() const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

Vector spmv(const SparseMatrix& a, std::span<const double> x);

/// Solves L w = v in one forward sweep. L must be lower triangular with a
/// stored, nonzero diagonal in every row (SingularPreconditioner otherwise).
Vector forward_substitution(const SparseMatrix& lower, std::span<const double> v);

// ---------------------------------------------------------------------------
// Least squares.
// ---------------------------------------------------------------------------

/// Pivots whose magnitude falls below this fraction of the largest pivot are
/// treated as numerically dependent and their columns are dropped.
inline constexpr double kLeastSquaresDropTolerance = 1e-12;

struct LeastSquaresSolution {
  Vector coefficients;     // one per column of M; dropped columns are 0
  Vector residual_vector;  // rhs - M * coefficients
  std::size_t rank = 0;
  double residual_norm = 0.0;
};

/// min ||rhs - M c||_2 by Householder QR with column pivoting.
///
/// The residual is assembled from the orthogonal factor (Q [0; (Q^T rhs)_tail])
/// rather than by forming rhs - M c, so it is orthogonal to the retained
/// columns to working precision even when M is badly conditioned.
/// Throws NonFiniteInput if M or rhs holds NaN/Inf.
LeastSquaresSolution solve_least_squares(const DenseMatrix& m, std::span<const double> rhs);

/// LU with partial pivoting. Throws SingularMatrix when a pivot drops below
/// 1e-14 times the largest entry of A.
Vector dense_solve(const DenseMatrix& a, std::span<const double> b);

}  // namespace fpaccel
