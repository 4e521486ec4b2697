#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "fpaccel/fixed_point.hpp"

namespace fpaccel {

enum class GmresSide {
  Left,   // GMRES on PAx = Pb, minimizes ||P(Ax - b)||
  Right,  // GMRES on APu = b with x = Pu, minimizes ||Ax - b||
};

std::string to_string(GmresSide side);

using LinearOperator = std::function<Vector(std::span<const double>)>;

/// Arnoldi process with modified Gram-Schmidt and one conditional
/// re-orthogonalization pass, plus the Givens QR of the Hessenberg matrix.
class ArnoldiState {
 public:
  ArnoldiState(LinearOperator op, std::span<const double> start);

  /// Extends the basis by one vector. Returns false on (lucky) breakdown,
  /// i.e. when the new direction has norm below kBreakdownTolerance * rhs_norm.
  bool step();

  std::size_t size() const { return columns_; }
  double rhs_norm() const { return rhs_norm_; }
  const std::vector<Vector>& basis() const { return basis_; }
  /// Column j of the (j+2) x (j+1) upper Hessenberg matrix, before rotations.
  const Vector& hessenberg_column(std::size_t j) const { return hessenberg_[j]; }
  /// |g_{k}|: least-squares residual of the projected problem.
  double projected_residual() const { return std::abs(g_[columns_]); }
  /// Minimizer y of ||rhs_norm e1 - H y|| over the current columns.
  Vector solve_projected() const;
  /// V_k y.
  Vector combine(std::span<const double> y) const;

  static constexpr double kBreakdownTolerance = 1e-14;

 private:
  LinearOperator op_;
  std::vector<Vector> basis_;
  std::vector<Vector> hessenberg_;  // unrotated columns
  std::vector<Vector> r_;           // rotated columns (upper triangular part)
  std::vector<double> cs_, sn_;
  std::vector<double> g_;
  double rhs_norm_ = 0.0;
  std::size_t columns_ = 0;
};

/// Full (non-restarted) preconditioned GMRES. Every iterate x_k is
/// materialized and recorded so trajectories can be compared.
SolveReport gmres_preconditioned(const ProblemInstance& problem, const Preconditioner& p,
                                 GmresSide side, const SolveOptions& options = {});

/// True iff the norms GMRES minimizes on this side (classical for Right,
/// preconditioned for Left) strictly decrease for 1 <= k <= upto.
bool residual_history_strictly_decreasing(const SolveReport& report, std::size_t upto,
                                          GmresSide side);

/// Largest index through which residual_history_strictly_decreasing holds.
std::size_t strictly_decreasing_range(const SolveReport& report, GmresSide side);

}  // namespace fpaccel
