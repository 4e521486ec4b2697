#include "fpaccel/problems.hpp"

#include <iomanip>
#include <ostream>
#include <sstream>

#include "fpaccel/error.hpp"

namespace fpaccel {

namespace {

// Assembles the h^2-scaled five-point stencil with possibly unequal
// neighbor weights. Entries are emitted in increasing column order:
// south (i-N), west (i-1), center, east (i+1), north (i+N).
SparseMatrix assemble_five_point(std::size_t grid_n, double west, double east, double south,
                                 double north) {
  if (grid_n == 0) throw InvalidArgument("grid size must be at least 1");
  const std::size_t n = grid_n * grid_n;
  std::vector<std::size_t> rp{0}, ci;
  std::vector<double> vals;
  rp.reserve(n + 1);
  ci.reserve(5 * n);
  vals.reserve(5 * n);
  auto push = [&](std::size_t col, double v) {
    ci.push_back(col);
    vals.push_back(v);
  };
  for (std::size_t iy = 0; iy < grid_n; ++iy) {
    for (std::size_t ix = 0; ix < grid_n; ++ix) {
      const std::size_t row = iy * grid_n + ix;
      if (iy > 0) push(row - grid_n, south);
      if (ix > 0) push(row - 1, west);
      push(row, 4.0);
      if (ix + 1 < grid_n) push(row + 1, east);
      if (iy + 1 < grid_n) push(row + grid_n, north);
      rp.push_back(ci.size());
    }
  }
  return SparseMatrix(n, std::move(rp), std::move(ci), std::move(vals));
}

}  // namespace

ProblemInstance build_laplace_2d(std::size_t grid_n) {
  ProblemInstance p;
  p.a = assemble_five_point(grid_n, -1.0, -1.0, -1.0, -1.0);
  p.b.assign(p.a.n(), 1.0);
  p.x0.assign(p.a.n(), 0.0);
  p.label = "laplace_N" + std::to_string(grid_n);
  return p;
}

ProblemInstance build_convection_diffusion_2d(std::size_t grid_n, double c1, double c2) {
  ProblemInstance p;
  p.a = assemble_five_point(grid_n, -1.0 - c1, -1.0 + c1, -1.0 - c2, -1.0 + c2);
  p.b.assign(p.a.n(), 1.0);
  p.x0.assign(p.a.n(), 0.0);
  std::ostringstream label;
  label << "convdiff_N" << grid_n << "_c" << c1 << "_" << c2;
  p.label = label.str();
  return p;
}

SparseMatrix lower_triangular_part(const SparseMatrix& a) {
  std::vector<std::size_t> rp{0}, ci;
  std::vector<double> vals;
  for (std::size_t i = 0; i < a.n(); ++i) {
    for (std::size_t p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; ++p) {
      if (a.col_idx()[p] <= i) {
        ci.push_back(a.col_idx()[p]);
        vals.push_back(a.values()[p]);
      }
    }
    rp.push_back(ci.size());
  }
  return SparseMatrix(a.n(), std::move(rp), std::move(ci), std::move(vals));
}

void write_matrix_market(std::ostream& out, const SparseMatrix& a) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.n() << ' ' << a.n() << ' ' << a.nnz() << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < a.n(); ++i)
    for (std::size_t p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; ++p)
      out << i + 1 << ' ' << a.col_idx()[p] + 1 << ' ' << a.values()[p] << '\n';
}

// ---------------------------------------------------------------------------

Preconditioner Preconditioner::scaled_identity(double omega) {
  if (omega == 0.0) throw InvalidArgument("scaled identity preconditioner requires omega != 0");
  return Preconditioner(ScaledIdentity{omega});
}

Preconditioner Preconditioner::inverse_lower_triangular(SparseMatrix lower) {
  for (std::size_t i = 0; i < lower.n(); ++i) {
    if (lower.at(i, i) == 0.0)
      throw SingularPreconditioner("lower-triangular preconditioner has zero diagonal in row " +
                                   std::to_string(i));
  }
  return Preconditioner(InverseLowerTriangular{std::move(lower)});
}

Preconditioner Preconditioner::lower_triangular_of(const SparseMatrix& a) {
  return inverse_lower_triangular(lower_triangular_part(a));
}

Preconditioner Preconditioner::dense(DenseMatrix matrix) {
  if (matrix.rows() != matrix.cols()) throw DimensionMismatch("dense preconditioner not square");
  return Preconditioner(Dense{std::move(matrix)});
}

Vector Preconditioner::apply(std::span<const double> v) const {
  struct Visitor {
    std::span<const double> v;
    Vector operator()(const Identity&) const { return Vector(v.begin(), v.end()); }
    Vector operator()(const ScaledIdentity& s) const { return scaled(s.omega, v); }
    Vector operator()(const InverseLowerTriangular& l) const {
      return forward_substitution(l.lower, v);
    }
    Vector operator()(const Dense& d) const { return d.matrix.multiply(v); }
  };
  return std::visit(Visitor{v}, variant_);
}

std::string Preconditioner::describe() const {
  struct Visitor {
    std::string operator()(const Identity&) const { return "identity"; }
    std::string operator()(const ScaledIdentity& s) const {
      std::ostringstream os;
      os << "omega:" << s.omega;
      return os.str();
    }
    std::string operator()(const InverseLowerTriangular&) const { return "lower-tri"; }
    std::string operator()(const Dense&) const { return "dense"; }
  };
  return std::visit(Visitor{}, variant_);
}

}  // namespace fpaccel
