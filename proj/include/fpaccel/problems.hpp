#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <variant>

#include "fpaccel/linalg.hpp"

namespace fpaccel {

struct ProblemInstance {
  SparseMatrix a;
  Vector b;
  Vector x0;
  std::string label;

  std::size_t dimension() const { return a.n(); }
};

/// Five-point Laplacian on an N x N interior grid, scaled by h^2 (diagonal 4,
/// neighbors -1), lexicographic row-major ordering, b = ones, x0 = zeros.
ProblemInstance build_laplace_2d(std::size_t grid_n);

/// Centered-difference convection-diffusion operator scaled by h^2.
/// c1 = sigma1*h/2 and c2 = sigma2*h/2: east -1+c1, west -1-c1,
/// north -1+c2, south -1-c2, center 4.
ProblemInstance build_convection_diffusion_2d(std::size_t grid_n, double c1, double c2);

/// Lower triangle of A including the diagonal.
SparseMatrix lower_triangular_part(const SparseMatrix& a);

/// MatrixMarket coordinate/real/general, 1-based indices.
void write_matrix_market(std::ostream& out, const SparseMatrix& a);

// ---------------------------------------------------------------------------
// Preconditioner: the operator P in q(x) = x + P(b - Ax).
// ---------------------------------------------------------------------------
class Preconditioner {
 public:
  struct Identity {};
  struct ScaledIdentity {
    double omega;
  };
  /// P = L^{-1}, applied by forward substitution.
  struct InverseLowerTriangular {
    SparseMatrix lower;
  };
  /// Explicit dense P; meant for small oracle problems.
  struct Dense {
    DenseMatrix matrix;
  };
  using Variant = std::variant<Identity, ScaledIdentity, InverseLowerTriangular, Dense>;

  Preconditioner() = default;

  static Preconditioner identity() { return Preconditioner(Identity{}); }
  static Preconditioner scaled_identity(double omega);
  static Preconditioner inverse_lower_triangular(SparseMatrix lower);
  /// Gauss-Seidel style P = L^{-1} with L the lower part of A.
  static Preconditioner lower_triangular_of(const SparseMatrix& a);
  static Preconditioner dense(DenseMatrix matrix);

  Vector apply(std::span<const double> v) const;

  const Variant& variant() const { return variant_; }
  std::string describe() const;

 private:
  explicit Preconditioner(Variant v) : variant_(std::move(v)) {}
  Variant variant_ = Identity{};
};

inline Vector apply_preconditioner(const Preconditioner& p, std::span<const double> v) {
  return p.apply(v);
}

}  // namespace fpaccel
