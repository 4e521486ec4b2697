#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "fpaccel/accelerators.hpp"
#include "fpaccel/gmres.hpp"

namespace fpaccel {

/// Outcome of one invariant check. A skipped check (hypothesis not met, or
/// nothing to test) carries max_defect 0 and passed = true.
struct CheckResult {
  std::string name;
  double max_defect = 0.0;
  double threshold = 0.0;
  bool passed = true;
  bool skipped = false;
  std::size_t location = 0;  // iteration index of the worst defect
  std::string note;
};

struct DiagnosticThresholds {
  double orthogonality = 1e-10;
  double monotonicity_slack = 1e-13;
  double equivalence = 1e-8;
  double identity = 1e-10;
  double symmetry = 1e-12;
};

// ---------------------------------------------------------------------------
// Dense oracles (small n only).
// ---------------------------------------------------------------------------

inline constexpr std::size_t kMaxDenseDimension = 4096;

/// Materializes a linear operator column by column.
DenseMatrix dense_operator(const LinearOperator& op, std::size_t n);
DenseMatrix dense_b(const RichardsonOperator& op);  // I - PA
DenseMatrix dense_h(const RichardsonOperator& op);  // I - AP

struct OperatorNorms {
  double norm_b = 0.0;             // ||I - PA||_2
  double norm_h = 0.0;             // ||I - AP||_2
  double spectral_radius_b = 0.0;  // rho(I - PA)
};

/// Throws InvalidArgument above kMaxDenseDimension.
OperatorNorms compute_operator_norms(const ProblemInstance& problem, const Preconditioner& p);

// ---------------------------------------------------------------------------
// Checks over recorded traces. Traces must be recorded with keep_vectors.
// ---------------------------------------------------------------------------

/// The variant's orthogonality relations at every step, with the stored
/// least-squares residual standing in for the next residual:
///   AA      w_k ⟂ (r_{k-i} - r_{k-j})               (w_k = B^{-1} r_{k+1})
///   AAg     r̄_{k+1} ⟂ H (r̄_{k-i} - r̄_{k-j})
///   AAr     r_{k+1} ⟂ B (r_{k-i} - r_{k-j})
///   NGMRES  r̄_{k+1} ⟂ AP r̄_k  and  r̄_{k+1} ⟂ (r̄_{k-i} - r̄_{k-j})
///   NGMRESr r_{k+1} ⟂ PA r_k  and  r_{k+1} ⟂ (r_{k-i} - r_{k-j})
/// Defects are |u^T v| / (||u|| ||v||).
std::vector<CheckResult> check_orthogonality(const SolveReport& trace, AcceleratorVariant variant,
                                             const RichardsonOperator& op,
                                             double threshold = 1e-10);

/// The freshly evaluated next residual against its least-squares
/// representation: r_{k+1} = B w_k (AA), r̄_{k+1} = w_k (AAg, NGMRES),
/// r_{k+1} = w_k (AAr, NGMRESr). Defect normalized by the initial residual
/// norm of the same flavor.
CheckResult check_step_identity(const SolveReport& trace, AcceleratorVariant variant,
                                const RichardsonOperator& op, double threshold = 1e-10);

/// NGMRES: classical norms nonincreasing. NGMRESr: preconditioned norms
/// nonincreasing. AAg / AAr: strict decrease of classical / preconditioned
/// norms, asserted only when ||H|| < 1 / ||B|| < 1 (skipped otherwise).
/// AA: ||r_k - R_k alpha|| <= ||r_k||, plus strict decrease of that quantity
/// for full-window runs.
CheckResult check_monotonicity(const SolveReport& trace, AcceleratorVariant variant,
                               const OperatorNorms& norms, double slack = 1e-13);

/// max_{k <= decreasing_upto} ||x_k^A - x_k^B|| / max(1, ||x_k^B||).
CheckResult check_equivalence(const SolveReport& trace_a, const SolveReport& trace_b,
                              std::size_t decreasing_upto, double rel_tol = 1e-8);

/// Runs `variant` (NGMRES or NGMRESr) at every depth plus the side-matched
/// GMRES and requires all trajectories to agree pairwise over the strictly
/// decreasing range. Skipped unless AP (NGMRES) / PA (NGMRESr) is symmetric
/// or of the form tau I + S with S skew, tau = trace/n.
CheckResult check_windowed_equivalence(const ProblemInstance& problem, const Preconditioner& p,
                                       AcceleratorVariant variant, const std::vector<Depth>& depths,
                                       double tol, const SolveOptions& options = {});

/// Dense cross-check of the AA representation: solves B y = r_{k+1} by LU
/// and compares y with the stored least-squares residual. n <= 256.
CheckResult check_aa_inverse_oracle(const SolveReport& trace, const RichardsonOperator& op,
                                    double threshold = 1e-10);

/// Certifies which quantity each variant's least-squares problem minimizes:
/// perturbing the coefficients by +-delta in pseudo-random directions must
/// not decrease the certified objective (AA: ||B^{-1} r_{k+1}||, AAg/NGMRES:
/// ||r̄_{k+1}||, AAr/NGMRESr: ||r_{k+1}||) by more than `threshold` relative.
/// The perturbed objective is assembled from the update formula and the
/// operators A, P (dense LU for B^{-1} in the AA case, n <= 256).
CheckResult check_lsq_objective(const SolveReport& trace, AcceleratorVariant variant,
                                const RichardsonOperator& op, double delta = 1e-6,
                                double threshold = 1e-12, unsigned seed = 7);

/// One JSON object per line: name, defect, threshold, passed, skipped, iteration, note.
void write_check_report(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace fpaccel
