#include "fpaccel/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fpaccel/error.hpp"

namespace fpaccel {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": length " + std::to_string(a) + " vs " +
                            std::to_string(b));
  }
}

}  // namespace

double dot(std::span<const double> u, std::span<const double> v) {
  require_same_length(u.size(), v.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double norm2(std::span<const double> v) {
  // Scaled accumulation avoids overflow for large entries.
  double scale = 0.0;
  double ssq = 1.0;
  for (double x : v) {
    if (x == 0.0) continue;
    const double ax = std::abs(x);
    if (scale < ax) {
      ssq = 1.0 + ssq * (scale / ax) * (scale / ax);
      scale = ax;
    } else {
      ssq += (ax / scale) * (ax / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

Vector axpy(double a, std::span<const double> x, std::span<const double> y) {
  require_same_length(x.size(), y.size(), "axpy");
  Vector out(y.begin(), y.end());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += a * x[i];
  return out;
}

void axpy_inplace(double a, std::span<const double> x, std::span<double> y) {
  require_same_length(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Vector subtract(std::span<const double> u, std::span<const double> v) {
  require_same_length(u.size(), v.size(), "subtract");
  Vector out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] - v[i];
  return out;
}

Vector scaled(double a, std::span<const double> v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = a * v[i];
  return out;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// ---------------------------------------------------------------------------
// DenseMatrix
// ---------------------------------------------------------------------------

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> column_major)
    : rows_(rows), cols_(cols), data_(std::move(column_major)) {
  require_same_length(data_.size(), rows * cols, "DenseMatrix storage");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_columns(const std::vector<Vector>& columns, std::size_t rows) {
  DenseMatrix m(rows, columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    require_same_length(columns[j].size(), rows, "DenseMatrix::from_columns");
    std::copy(columns[j].begin(), columns[j].end(), m.column(j).begin());
  }
  return m;
}

Vector DenseMatrix::multiply(std::span<const double> x) const {
  require_same_length(x.size(), cols_, "DenseMatrix::multiply");
  Vector y(rows_, 0.0);
  for (std::size_t j = 0; j < cols_; ++j) {
    const double xj = x[j];
    if (xj == 0.0) continue;
    const double* col = data_.data() + j * rows_;
    for (std::size_t i = 0; i < rows_; ++i) y[i] += col[i] * xj;
  }
  return y;
}

Vector DenseMatrix::multiply_transpose(std::span<const double> x) const {
  require_same_length(x.size(), rows_, "DenseMatrix::multiply_transpose");
  Vector y(cols_, 0.0);
  for (std::size_t j = 0; j < cols_; ++j) y[j] = dot(column(j), x);
  return y;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
  return t;
}

double DenseMatrix::frobenius_norm() const { return norm2(data_); }

// ---------------------------------------------------------------------------
// SparseMatrix
// ---------------------------------------------------------------------------

SparseMatrix::SparseMatrix(std::size_t n, std::vector<std::size_t> row_ptr,
                           std::vector<std::size_t> col_idx, std::vector<double> values)
    : n_(n), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)), values_(std::move(values)) {
  if (row_ptr_.size() != n_ + 1) throw InvalidArgument("CSR: row_ptr must have n+1 entries");
  if (row_ptr_.front() != 0) throw InvalidArgument("CSR: row_ptr[0] must be 0");
  if (row_ptr_.back() != col_idx_.size() || col_idx_.size() != values_.size())
    throw InvalidArgument("CSR: row_ptr[n] must equal nnz");
  for (std::size_t i = 0; i < n_; ++i) {
    if (row_ptr_[i] > row_ptr_[i + 1]) throw InvalidArgument("CSR: row_ptr must be non-decreasing");
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      if (col_idx_[p] >= n_) throw InvalidArgument("CSR: column index out of range");
      if (p > row_ptr_[i] && col_idx_[p] <= col_idx_[p - 1])
        throw InvalidArgument("CSR: column indices must be strictly increasing within a row");
    }
  }
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<std::size_t> rp(n + 1), ci(n);
  std::iota(rp.begin(), rp.end(), std::size_t{0});
  std::iota(ci.begin(), ci.end(), std::size_t{0});
  return SparseMatrix(n, std::move(rp), std::move(ci), std::vector<double>(n, 1.0));
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("SparseMatrix::from_dense: matrix not square");
  const std::size_t n = a.rows();
  std::vector<std::size_t> rp{0}, ci;
  std::vector<double> vals;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (a(i, j) != 0.0) {
        ci.push_back(j);
        vals.push_back(a(i, j));
      }
    }
    rp.push_back(ci.size());
  }
  return SparseMatrix(n, std::move(rp), std::move(ci), std::move(vals));
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
  const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(n_, n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) d(i, col_idx_[p]) = values_[p];
  return d;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<std::size_t> rp(n_ + 1, 0);
  for (std::size_t c : col_idx_) ++rp[c + 1];
  for (std::size_t i = 0; i < n_; ++i) rp[i + 1] += rp[i];
  std::vector<std::size_t> ci(nnz()), next(rp.begin(), rp.end() - 1);
  std::vector<double> vals(nnz());
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const std::size_t dst = next[col_idx_[p]]++;
      ci[dst] = i;
      vals[dst] = values_[p];
    }
  }
  return SparseMatrix(n_, std::move(rp), std::move(ci), std::move(vals));
}

Vector spmv(const SparseMatrix& a, std::span<const double> x) {
  require_same_length(x.size(), a.n(), "spmv");
  const auto& rp = a.row_ptr();
  const auto& ci = a.col_idx();
  const auto& v = a.values();
  Vector y(a.n());
  for (std::size_t i = 0; i < a.n(); ++i) {
    double s = 0.0;
    for (std::size_t p = rp[i]; p < rp[i + 1]; ++p) s += v[p] * x[ci[p]];
    y[i] = s;
  }
  return y;
}

Vector forward_substitution(const SparseMatrix& lower, std::span<const double> v) {
  require_same_length(v.size(), lower.n(), "forward_substitution");
  const auto& rp = lower.row_ptr();
  const auto& ci = lower.col_idx();
  const auto& vals = lower.values();
  Vector w(lower.n());
  for (std::size_t i = 0; i < lower.n(); ++i) {
    double s = v[i];
    double diag = 0.0;
    for (std::size_t p = rp[i]; p < rp[i + 1]; ++p) {
      const std::size_t j = ci[p];
      if (j < i) {
        s -= vals[p] * w[j];
      } else if (j == i) {
        diag = vals[p];
      } else {
        throw InvalidArgument("forward_substitution: entry above the diagonal in row " +
                              std::to_string(i));
      }
    }
    if (diag == 0.0) {
      throw SingularPreconditioner("forward_substitution: zero or missing diagonal in row " +
                                   std::to_string(i));
    }
    w[i] = s / diag;
  }
  return w;
}

// ---------------------------------------------------------------------------
// Least squares: Householder QR with column pivoting, truncated at the first
// pivot below kLeastSquaresDropTolerance * (largest pivot).
// ---------------------------------------------------------------------------

namespace {

struct Reflector {
  std::size_t offset = 0;  // first row the reflector acts on
  Vector v;                // I - 2 v v^T / (v^T v), v^T v > 0
  double vtv = 0.0;
};

void apply_reflector(const Reflector& h, std::span<double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < h.v.size(); ++i) s += h.v[i] * x[h.offset + i];
  const double f = 2.0 * s / h.vtv;
  for (std::size_t i = 0; i < h.v.size(); ++i) x[h.offset + i] -= f * h.v[i];
}

}  // namespace

LeastSquaresSolution solve_least_squares(const DenseMatrix& m, std::span<const double> rhs) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  require_same_length(rhs.size(), rows, "solve_least_squares");
  if (!all_finite(m.data()) || !all_finite(rhs))
    throw NonFiniteInput("solve_least_squares: non-finite entry in matrix or right-hand side");

  LeastSquaresSolution sol;
  sol.coefficients.assign(cols, 0.0);
  if (cols == 0) {
    sol.residual_vector.assign(rhs.begin(), rhs.end());
    sol.residual_norm = norm2(rhs);
    return sol;
  }

  DenseMatrix w = m;
  Vector y(rhs.begin(), rhs.end());
  std::vector<std::size_t> perm(cols);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<Reflector> reflectors;

  const std::size_t steps = std::min(rows, cols);
  double largest_pivot = 0.0;
  std::size_t rank = 0;
  for (std::size_t j = 0; j < steps; ++j) {
    // Pick the trailing column with the largest remaining norm.
    std::size_t best = j;
    double best_norm = -1.0;
    for (std::size_t c = j; c < cols; ++c) {
      const double nc = norm2(w.column(c).subspan(j));
      if (nc > best_norm) {
        best_norm = nc;
        best = c;
      }
    }
    if (j == 0) largest_pivot = best_norm;
    if (best_norm == 0.0 || best_norm < kLeastSquaresDropTolerance * largest_pivot) break;
    if (best != j) {
      std::swap_ranges(w.column(j).begin(), w.column(j).end(), w.column(best).begin());
      std::swap(perm[j], perm[best]);
    }

    auto col = w.column(j);
    Reflector h;
    h.offset = j;
    h.v.assign(col.begin() + static_cast<std::ptrdiff_t>(j), col.end());
    const double alpha = (h.v[0] >= 0.0) ? -best_norm : best_norm;
    h.v[0] -= alpha;
    h.vtv = dot(h.v, h.v);
    if (h.vtv > 0.0) {
      for (std::size_t c = j + 1; c < cols; ++c) apply_reflector(h, w.column(c));
      apply_reflector(h, y);
    }
    col[j] = alpha;
    for (std::size_t i = j + 1; i < rows; ++i) col[i] = 0.0;
    reflectors.push_back(std::move(h));
    ++rank;
  }

  // Back substitution with the leading rank x rank triangle.
  Vector c(rank, 0.0);
  for (std::size_t ii = rank; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t jj = ii + 1; jj < rank; ++jj) s -= w(ii, jj) * c[jj];
    c[ii] = s / w(ii, ii);
  }
  for (std::size_t j = 0; j < rank; ++j) sol.coefficients[perm[j]] = c[j];
  sol.rank = rank;

  Vector tail(rows, 0.0);
  for (std::size_t i = rank; i < rows; ++i) tail[i] = y[i];
  sol.residual_norm = norm2(tail);
  for (std::size_t r = reflectors.size(); r-- > 0;) {
    if (reflectors[r].vtv > 0.0) apply_reflector(reflectors[r], tail);
  }
  sol.residual_vector = std::move(tail);
  return sol;
}

Vector dense_solve(const DenseMatrix& a, std::span<const double> b) {
  if (a.rows() != a.cols()) throw DimensionMismatch("dense_solve: matrix not square");
  const std::size_t n = a.rows();
  require_same_length(b.size(), n, "dense_solve");
  if (!all_finite(a.data()) || !all_finite(b))
    throw NonFiniteInput("dense_solve: non-finite input");

  DenseMatrix lu = a;
  Vector x(b.begin(), b.end());
  double max_entry = 0.0;
  for (double v : a.data()) max_entry = std::max(max_entry, std::abs(v));
  const double pivot_floor = 1e-14 * max_entry;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(p, k))) p = i;
    if (std::abs(lu(p, k)) <= pivot_floor || lu(p, k) == 0.0)
      throw SingularMatrix("dense_solve: pivot below tolerance at column " + std::to_string(k));
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(p, j));
      std::swap(x[k], x[p]);
    }
    const double pivot = lu(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / pivot;
      lu(i, k) = f;
      if (f == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
      x[i] -= f * x[k];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= lu(i, j) * x[j];
    x[i] = s / lu(i, i);
  }
  return x;
}

}  // namespace fpaccel
