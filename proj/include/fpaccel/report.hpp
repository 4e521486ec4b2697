#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fpaccel/linalg.hpp"

namespace fpaccel {

enum class SolveStatus {
  Converged,
  MaxIterations,
  Breakdown,  // least-squares failure inside an accelerated step
  Diverged,   // non-finite iterate
};

std::string to_string(SolveStatus s);

inline constexpr double kDefaultTolerance = 1e-10;
inline constexpr std::size_t kDefaultMaxIterations = 500;

struct SolveOptions {
  /// Stop once ||r_k|| <= tol * ||r_0|| (preconditioned residual).
  double tol = kDefaultTolerance;
  std::size_t maxit = kDefaultMaxIterations;
  /// Retain per-iterate vectors (iterate, both residuals, least-squares
  /// residual) in the trace. Required by diagnostics and trajectory checks.
  bool keep_vectors = false;
};

/// One record per iterate x_k. Norms describe x_k; the least-squares fields
/// describe the step that produced x_{k+1} and are empty on the last record.
struct StepRecord {
  std::size_t k = 0;
  double classical_norm = 0.0;       // ||A x_k - b||
  double preconditioned_norm = 0.0;  // ||P (A x_k - b)||

  std::size_t window = 0;  // m_k
  Vector coefficients;     // alpha (AA family, m_k) or beta (NGMRES family, m_k + 1)
  std::size_t lsq_rank = 0;
  double lsq_residual_norm = 0.0;

  // Present only with SolveOptions::keep_vectors.
  Vector iterate;
  Vector classical_residual;
  Vector preconditioned_residual;
  Vector lsq_residual;
};

struct SolveReport {
  std::string method;
  SolveStatus status = SolveStatus::MaxIterations;
  std::size_t iterations = 0;  // index of the final iterate
  std::vector<StepRecord> trace;
  Vector solution;
  bool lucky_breakdown = false;
  bool full_window = false;  // accelerated runs with unbounded depth
  std::string message;

  bool converged() const { return status == SolveStatus::Converged; }
};

}  // namespace fpaccel
