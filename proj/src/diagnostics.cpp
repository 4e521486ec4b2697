#include "fpaccel/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include <Eigen/Dense>
#include <json.hpp>

#include "fpaccel/error.hpp"

namespace fpaccel {

namespace {

constexpr std::size_t kMaxInverseOracleDimension = 256;

void require_vectors(const SolveReport& trace, const char* who) {
  for (const StepRecord& rec : trace.trace) {
    if (rec.preconditioned_residual.empty() || rec.classical_residual.empty() ||
        rec.iterate.empty())
      throw InvalidArgument(std::string(who) + ": trace was recorded without keep_vectors");
  }
}

// Steps k whose least-squares data is usable: a successor record exists and
// the residual vector was kept.
std::vector<std::size_t> completed_steps(const SolveReport& trace, const char* who) {
  std::vector<std::size_t> ks;
  for (std::size_t k = 0; k + 1 < trace.trace.size(); ++k) {
    if (trace.trace[k].lsq_residual.empty())
      throw InvalidArgument(std::string(who) + ": missing least-squares residual at k=" +
                            std::to_string(k));
    ks.push_back(k);
  }
  return ks;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  const double nu = norm2(u);
  const double nv = norm2(v);
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::abs(dot(u, v)) / (nu * nv);
}

void record_defect(CheckResult& c, double defect, std::size_t k) {
  if (std::isnan(defect)) defect = std::numeric_limits<double>::infinity();
  if (defect > c.max_defect) {
    c.max_defect = defect;
    c.location = k;
  }
}

CheckResult finish(CheckResult c) {
  c.passed = c.max_defect <= c.threshold;
  return c;
}

CheckResult skipped(std::string name, double threshold, std::string note) {
  CheckResult c;
  c.name = std::move(name);
  c.threshold = threshold;
  c.skipped = true;
  c.passed = true;
  c.note = std::move(note);
  return c;
}

Eigen::MatrixXd to_eigen(const DenseMatrix& m) {
  return Eigen::Map<const Eigen::MatrixXd>(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                                           static_cast<Eigen::Index>(m.cols()));
}

double max_abs(const DenseMatrix& m) {
  double s = 0.0;
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = 0; i < m.rows(); ++i) s = std::max(s, std::abs(m(i, j)));
  return s;
}

// Worst |M - M^T| entry relative to the largest entry of M, after removing
// `shift` from the diagonal and measuring against the skew part if `skew`.
double symmetry_defect(const DenseMatrix& m, bool skew, double shift) {
  const double scale = std::max(max_abs(m), std::numeric_limits<double>::min());
  double worst = 0.0;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const double mij = m(i, j) - (i == j ? shift : 0.0);
      const double mji = m(j, i) - (i == j ? shift : 0.0);
      const double d = skew ? mij + mji : mij - mji;
      worst = std::max(worst, std::abs(d));
    }
  }
  return worst / scale;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dense oracles
// ---------------------------------------------------------------------------

DenseMatrix dense_operator(const LinearOperator& op, std::size_t n) {
  if (n > kMaxDenseDimension)
    throw InvalidArgument("dense_operator: dimension " + std::to_string(n) + " exceeds " +
                          std::to_string(kMaxDenseDimension));
  DenseMatrix m(n, n);
  Vector e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const Vector col = op(e);
    if (col.size() != n) throw DimensionMismatch("dense_operator: operator changed dimension");
    std::copy(col.begin(), col.end(), m.column(j).begin());
    e[j] = 0.0;
  }
  return m;
}

DenseMatrix dense_b(const RichardsonOperator& op) {
  return dense_operator([&](std::span<const double> v) { return op.apply_b(v); },
                        op.dimension());
}

DenseMatrix dense_h(const RichardsonOperator& op) {
  return dense_operator([&](std::span<const double> v) { return op.apply_h(v); },
                        op.dimension());
}

OperatorNorms compute_operator_norms(const ProblemInstance& problem, const Preconditioner& p) {
  const RichardsonOperator op(problem, p);
  if (op.dimension() > kMaxDenseDimension)
    throw InvalidArgument("compute_operator_norms: dimension " +
                          std::to_string(op.dimension()) + " too large for dense formation");
  OperatorNorms out;
  if (op.dimension() == 0) return out;
  const Eigen::MatrixXd b = to_eigen(dense_b(op));
  const Eigen::MatrixXd h = to_eigen(dense_h(op));
  out.norm_b = Eigen::BDCSVD<Eigen::MatrixXd>(b).singularValues()(0);
  out.norm_h = Eigen::BDCSVD<Eigen::MatrixXd>(h).singularValues()(0);
  Eigen::EigenSolver<Eigen::MatrixXd> eig(b, false);
  out.spectral_radius_b = eig.eigenvalues().cwiseAbs().maxCoeff();
  return out;
}

// ---------------------------------------------------------------------------
// Orthogonality
// ---------------------------------------------------------------------------

std::vector<CheckResult> check_orthogonality(const SolveReport& trace, AcceleratorVariant variant,
                                             const RichardsonOperator& op, double threshold) {
  require_vectors(trace, "check_orthogonality");
  const std::vector<std::size_t> steps = completed_steps(trace, "check_orthogonality");
  const std::string prefix = "orthogonality/" + to_string(variant);

  const bool classical =
      variant == AcceleratorVariant::AAg || variant == AcceleratorVariant::NGMRES;
  auto residual = [&](std::size_t j) -> const Vector& {
    return classical ? trace.trace[j].classical_residual
                     : trace.trace[j].preconditioned_residual;
  };

  CheckResult pairs;
  pairs.threshold = threshold;
  switch (variant) {
    case AcceleratorVariant::AA: pairs.name = prefix + "/w_k.(r_{k-i}-r_{k-j})"; break;
    case AcceleratorVariant::AAg: pairs.name = prefix + "/r̄_{k+1}.H(r̄_{k-i}-r̄_{k-j})"; break;
    case AcceleratorVariant::AAr: pairs.name = prefix + "/r_{k+1}.B(r_{k-i}-r_{k-j})"; break;
    case AcceleratorVariant::NGMRES: pairs.name = prefix + "/r̄_{k+1}.(r̄_{k-i}-r̄_{k-j})"; break;
    case AcceleratorVariant::NGMRESr: pairs.name = prefix + "/r_{k+1}.(r_{k-i}-r_{k-j})"; break;
  }

  CheckResult newest;
  newest.threshold = threshold;
  const bool ngmres_type = !is_anderson_type(variant);
  newest.name = prefix + (variant == AcceleratorVariant::NGMRES ? "/r̄_{k+1}.APr̄_k"
                                                                : "/r_{k+1}.PAr_k");

  for (std::size_t k : steps) {
    const Vector& w = trace.trace[k].lsq_residual;
    const std::size_t mk = trace.trace[k].window;
    if (mk > k) throw InvalidArgument("check_orthogonality: window exceeds iteration index");

    // H r̄_j = g(q(x_j)) and B r_j = r(q(x_j)); both are evaluated through q,
    // the same floating-point path the accelerated step uses.
    auto image_of = [&](std::size_t j) {
      const StepRecord& rec = trace.trace[j];
      const Vector qj = subtract(rec.iterate, rec.preconditioned_residual);
      return classical ? op.classical_residual(qj) : op.evaluate(qj).residuals.preconditioned;
    };
    std::vector<Vector> images(mk + 1);
    for (std::size_t i = 0; i <= mk; ++i)
      images[i] = is_anderson_type(variant) && variant != AcceleratorVariant::AA
                      ? image_of(k - i)
                      : residual(k - i);
    for (std::size_t i = 1; i <= mk; ++i) {
      for (std::size_t j = 0; j < i; ++j)
        record_defect(pairs, cosine(w, subtract(images[i], images[j])), k);
    }
    if (ngmres_type) {
      // r_k - B r_k = PA r_k and r̄_k - H r̄_k = AP r̄_k.
      record_defect(newest, cosine(w, subtract(residual(k), image_of(k))), k);
    }
  }

  std::vector<CheckResult> out;
  out.push_back(finish(pairs));
  if (steps.empty()) out.back().note = "no completed steps";
  if (ngmres_type) {
    out.push_back(finish(newest));
    if (steps.empty()) out.back().note = "no completed steps";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Step identity
// ---------------------------------------------------------------------------

CheckResult check_step_identity(const SolveReport& trace, AcceleratorVariant variant,
                                const RichardsonOperator& op, double threshold) {
  require_vectors(trace, "check_step_identity");
  const std::vector<std::size_t> steps = completed_steps(trace, "check_step_identity");
  CheckResult c;
  c.threshold = threshold;
  const bool classical =
      variant == AcceleratorVariant::AAg || variant == AcceleratorVariant::NGMRES;
  switch (variant) {
    case AcceleratorVariant::AA: c.name = "identity/AA/r_{k+1}=B(r_k-R_k alpha)"; break;
    case AcceleratorVariant::AAg: c.name = "identity/AAg/r̄_{k+1}=lsq residual"; break;
    case AcceleratorVariant::AAr: c.name = "identity/AAr/r_{k+1}=lsq residual"; break;
    case AcceleratorVariant::NGMRES: c.name = "identity/NGMRES/r̄_{k+1}=lsq residual"; break;
    case AcceleratorVariant::NGMRESr: c.name = "identity/NGMRESr/r_{k+1}=lsq residual"; break;
  }
  if (trace.trace.empty()) return finish(c);
  const double scale = classical ? trace.trace[0].classical_norm
                                 : trace.trace[0].preconditioned_norm;
  for (std::size_t k : steps) {
    const Vector& w = trace.trace[k].lsq_residual;
    const StepRecord& next = trace.trace[k + 1];
    const Vector predicted = variant == AcceleratorVariant::AA ? op.apply_b(w) : w;
    const Vector& actual = classical ? next.classical_residual : next.preconditioned_residual;
    const double diff = norm2(subtract(actual, predicted));
    record_defect(c, scale > 0.0 ? diff / scale : diff, k);
  }
  return finish(c);
}

// ---------------------------------------------------------------------------
// Monotonicity
// ---------------------------------------------------------------------------

namespace {

// Largest relative increase n_{k+1}/n_k - 1 along a sequence.
void scan_increase(CheckResult& c, const std::vector<double>& seq, std::size_t offset) {
  for (std::size_t k = 1; k < seq.size(); ++k) {
    const double prev = seq[k - 1];
    const double cur = seq[k];
    double d;
    if (prev > 0.0) d = (cur - prev) / prev;
    else d = cur > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    record_defect(c, d, k + offset);
  }
}

std::string norm_note(const char* what, double value) {
  if (!std::isfinite(value)) return std::string(what) + " not computed, claim skipped";
  return "hypothesis not met, claim skipped (" + std::string(what) + " = " +
         std::to_string(value) + ")";
}

}  // namespace

CheckResult check_monotonicity(const SolveReport& trace, AcceleratorVariant variant,
                               const OperatorNorms& norms, double slack) {
  const std::string name = "monotonicity/" + to_string(variant);
  std::vector<double> classical, preconditioned;
  for (const StepRecord& rec : trace.trace) {
    classical.push_back(rec.classical_norm);
    preconditioned.push_back(rec.preconditioned_norm);
  }

  CheckResult c;
  c.name = name;
  // Strict decrease has no slack: any nonnegative change fails.
  auto strict = [&](const std::vector<double>& seq) {
    c.threshold = 0.0;
    if (seq.size() < 2) return finish(c);
    c.max_defect = -std::numeric_limits<double>::infinity();
    scan_increase(c, seq, 0);
    c.passed = c.max_defect < 0.0;
    return c;
  };

  switch (variant) {
    case AcceleratorVariant::NGMRES:
      c.name += "/classical nonincreasing";
      c.threshold = slack;
      scan_increase(c, classical, 0);
      return finish(c);
    case AcceleratorVariant::NGMRESr:
      c.name += "/preconditioned nonincreasing";
      c.threshold = slack;
      scan_increase(c, preconditioned, 0);
      return finish(c);
    case AcceleratorVariant::AAg:
      if (!(norms.norm_h < 1.0))
        return skipped(name + "/classical strictly decreasing", 0.0,
                       norm_note("||H||", norms.norm_h));
      c.name += "/classical strictly decreasing";
      return strict(classical);
    case AcceleratorVariant::AAr:
      if (!(norms.norm_b < 1.0))
        return skipped(name + "/preconditioned strictly decreasing", 0.0,
                       norm_note("||B||", norms.norm_b));
      c.name += "/preconditioned strictly decreasing";
      return strict(preconditioned);
    case AcceleratorVariant::AA: {
      // ||r_k - R_k alpha|| <= ||r_k||: the least-squares problem never does
      // worse than alpha = 0.
      c.name += "/||r_k - R_k alpha|| <= ||r_k||";
      c.threshold = slack;
      for (std::size_t k = 0; k + 1 < trace.trace.size(); ++k) {
        const StepRecord& rec = trace.trace[k];
        const double rk = rec.preconditioned_norm;
        const double d = rk > 0.0 ? (rec.lsq_residual_norm - rk) / rk
                                  : (rec.lsq_residual_norm > 0.0
                                         ? std::numeric_limits<double>::infinity()
                                         : 0.0);
        record_defect(c, d, k);
      }
      c = finish(c);
      if (trace.full_window) {
        // ||B^{-1} r_{k+1}|| = ||r_k - R_k alpha|| strictly decreases for full AA.
        std::vector<double> w;
        for (std::size_t k = 0; k + 1 < trace.trace.size(); ++k)
          w.push_back(trace.trace[k].lsq_residual_norm);
        CheckResult s;
        s.max_defect = -std::numeric_limits<double>::infinity();
        scan_increase(s, w, 0);
        const bool strict_ok = w.size() < 2 || s.max_defect < 0.0;
        c.note = strict_ok ? "full window: ||B^-1 r_k|| strictly decreasing"
                           : "full window: ||B^-1 r_k|| not strictly decreasing at k=" +
                                 std::to_string(s.location);
        if (!strict_ok) {
          c.passed = false;
          if (s.max_defect > c.max_defect) {
            c.max_defect = s.max_defect;
            c.location = s.location;
          }
        }
      } else {
        c.note = "no claim on ||r_k|| itself";
      }
      return c;
    }
  }
  return finish(c);
}

// ---------------------------------------------------------------------------
// Equivalence
// ---------------------------------------------------------------------------

CheckResult check_equivalence(const SolveReport& trace_a, const SolveReport& trace_b,
                              std::size_t decreasing_upto, double rel_tol) {
  CheckResult c;
  c.name = "equivalence/" + trace_a.method + "~" + trace_b.method;
  c.threshold = rel_tol;
  const std::size_t upto =
      std::min({decreasing_upto + 1, trace_a.trace.size(), trace_b.trace.size()});
  for (std::size_t k = 0; k < upto; ++k) {
    const Vector& xa = trace_a.trace[k].iterate;
    const Vector& xb = trace_b.trace[k].iterate;
    if (xa.empty() || xb.empty())
      throw InvalidArgument("check_equivalence: traces were recorded without keep_vectors");
    if (xa.size() != xb.size()) throw DimensionMismatch("check_equivalence: iterate sizes differ");
    const double d = norm2(subtract(xa, xb)) / std::max(1.0, norm2(xb));
    record_defect(c, d, k);
  }
  if (upto < decreasing_upto + 1)
    c.note = "compared " + std::to_string(upto) + " iterates (a trace ended early)";
  return finish(c);
}

CheckResult check_windowed_equivalence(const ProblemInstance& problem, const Preconditioner& p,
                                       AcceleratorVariant variant, const std::vector<Depth>& depths,
                                       double tol, const SolveOptions& options) {
  if (variant != AcceleratorVariant::NGMRES && variant != AcceleratorVariant::NGMRESr)
    throw InvalidArgument("check_windowed_equivalence: variant must be NGMRES or NGMRESr");
  const std::string name = "windowed-equivalence/" + to_string(variant);
  const bool right = variant == AcceleratorVariant::NGMRES;
  const GmresSide side = right ? GmresSide::Right : GmresSide::Left;

  // AP for the right side, PA for the left.
  const DenseMatrix m = dense_operator(
      right ? LinearOperator([&](std::span<const double> v) { return spmv(problem.a, p.apply(v)); })
            : LinearOperator([&](std::span<const double> v) { return p.apply(spmv(problem.a, v)); }),
      problem.dimension());
  constexpr double kSymmetryTolerance = 1e-12;
  const double sym = symmetry_defect(m, false, 0.0);
  std::string structure;
  if (sym <= kSymmetryTolerance) {
    structure = right ? "AP symmetric" : "PA symmetric";
  } else {
    double tr = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) tr += m(i, i);
    const double tau = m.rows() == 0 ? 0.0 : tr / static_cast<double>(m.rows());
    const double skew = symmetry_defect(m, true, tau);
    if (skew > kSymmetryTolerance)
      return skipped(name, tol,
                     "hypothesis not met, claim skipped (symmetry defect " +
                         std::to_string(sym) + ")");
    structure = std::string(right ? "AP" : "PA") + " = tau I + S";
  }

  SolveOptions opts = options;
  opts.keep_vectors = true;
  const RichardsonOperator op(problem, p);
  std::vector<SolveReport> runs;
  runs.push_back(gmres_preconditioned(problem, p, side, opts));
  const std::size_t upto = strictly_decreasing_range(runs.front(), side);
  for (const Depth& d : depths) runs.push_back(run_accelerated(op, variant, d, opts));

  CheckResult c;
  c.name = name;
  c.threshold = tol;
  for (std::size_t a = 0; a < runs.size(); ++a) {
    for (std::size_t b = a + 1; b < runs.size(); ++b) {
      const CheckResult pair = check_equivalence(runs[b], runs[a], upto, tol);
      if (pair.max_defect >= c.max_defect) {
        c.max_defect = pair.max_defect;
        c.location = pair.location;
        c.note = structure + "; worst pair " + runs[b].method + " vs " + runs[a].method +
                 "; k* = " + std::to_string(upto);
      }
    }
  }
  return finish(c);
}

// ---------------------------------------------------------------------------
// Dense inverse oracle and least-squares objective certification
// ---------------------------------------------------------------------------

CheckResult check_aa_inverse_oracle(const SolveReport& trace, const RichardsonOperator& op,
                                    double threshold) {
  CheckResult c;
  c.name = "oracle/AA/B^-1 r_{k+1}=r_k-R_k alpha";
  c.threshold = threshold;
  if (op.dimension() > kMaxInverseOracleDimension)
    return skipped(c.name, threshold, "dimension above dense inversion limit");
  require_vectors(trace, "check_aa_inverse_oracle");
  const std::vector<std::size_t> steps = completed_steps(trace, "check_aa_inverse_oracle");
  if (trace.trace.empty()) return finish(c);
  const DenseMatrix b = dense_b(op);
  const double scale = trace.trace[0].preconditioned_norm;
  try {
    for (std::size_t k : steps) {
      const Vector y = dense_solve(b, trace.trace[k + 1].preconditioned_residual);
      const double diff = norm2(subtract(y, trace.trace[k].lsq_residual));
      record_defect(c, scale > 0.0 ? diff / scale : diff, k);
    }
  } catch (const SingularMatrix&) {
    return skipped(c.name, threshold, "hypothesis not met, claim skipped (B singular)");
  }
  return finish(c);
}

CheckResult check_lsq_objective(const SolveReport& trace, AcceleratorVariant variant,
                                const RichardsonOperator& op, double delta, double threshold,
                                unsigned seed) {
  CheckResult c;
  const bool classical =
      variant == AcceleratorVariant::AAg || variant == AcceleratorVariant::NGMRES;
  switch (variant) {
    case AcceleratorVariant::AA: c.name = "lsq-objective/AA/||B^-1 r_{k+1}||"; break;
    case AcceleratorVariant::AAg: c.name = "lsq-objective/AAg/||r̄_{k+1}||"; break;
    case AcceleratorVariant::AAr: c.name = "lsq-objective/AAr/||r_{k+1}||"; break;
    case AcceleratorVariant::NGMRES: c.name = "lsq-objective/NGMRES/||r̄_{k+1}||"; break;
    case AcceleratorVariant::NGMRESr: c.name = "lsq-objective/NGMRESr/||r_{k+1}||"; break;
  }
  c.threshold = threshold;
  if (variant == AcceleratorVariant::AA && op.dimension() > kMaxInverseOracleDimension)
    return skipped(c.name, threshold, "dimension above dense inversion limit");
  require_vectors(trace, "check_lsq_objective");
  const std::vector<std::size_t> steps = completed_steps(trace, "check_lsq_objective");

  DenseMatrix b;
  if (variant == AcceleratorVariant::AA) b = dense_b(op);

  std::mt19937 rng(seed);
  std::bernoulli_distribution coin(0.5);
  constexpr int kDirections = 4;
  const bool anderson = is_anderson_type(variant);

  for (std::size_t k : steps) {
    const StepRecord& rec = trace.trace[k];
    const Vector& w = rec.lsq_residual;
    const double wn = norm2(w);
    if (wn == 0.0) continue;
    const std::size_t mk = rec.window;
    // q(x_j) = x_j - r(x_j).
    const Vector qk = subtract(rec.iterate, rec.preconditioned_residual);
    for (int d = 0; d < kDirections; ++d) {
      // Shift in x_{k+1} caused by shifting the coefficients by +-delta.
      Vector dx(qk.size(), 0.0);
      if (anderson) {
        for (std::size_t i = 1; i <= mk; ++i) {
          const StepRecord& old = trace.trace[k - i];
          const Vector qi = subtract(old.iterate, old.preconditioned_residual);
          axpy_inplace(coin(rng) ? delta : -delta, subtract(qk, qi), dx);
        }
      } else {
        for (std::size_t i = 0; i <= mk; ++i)
          axpy_inplace(coin(rng) ? delta : -delta, subtract(qk, trace.trace[k - i].iterate), dx);
      }
      // The objective is affine in x; its linear part applied to dx.
      Vector shift;
      if (classical) {
        shift = op.apply_a(dx);
      } else {
        shift = op.apply_p(op.apply_a(dx));
        if (variant == AcceleratorVariant::AA) {
          try {
            shift = dense_solve(b, shift);
          } catch (const SingularMatrix&) {
            return skipped(c.name, threshold, "hypothesis not met, claim skipped (B singular)");
          }
        }
      }
      const double perturbed = norm2(axpy(1.0, shift, w));
      record_defect(c, std::max(0.0, (wn - perturbed) / wn), k);
    }
  }
  return finish(c);
}

void write_check_report(std::ostream& out, const std::vector<CheckResult>& results) {
  for (const CheckResult& c : results) {
    nlohmann::json j;
    j["name"] = c.name;
    if (std::isfinite(c.max_defect)) j["defect"] = c.max_defect;
    else j["defect"] = nullptr;
    j["threshold"] = c.threshold;
    j["passed"] = c.passed;
    j["skipped"] = c.skipped;
    j["iteration"] = c.location;
    if (!c.note.empty()) j["note"] = c.note;
    out << j.dump() << '\n';
  }
}

}  // namespace fpaccel
