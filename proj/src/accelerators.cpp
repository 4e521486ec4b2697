#include "fpaccel/accelerators.hpp"

#include <cctype>
#include <cmath>

#include "fpaccel/error.hpp"

namespace fpaccel {

std::string to_string(AcceleratorVariant v) {
  switch (v) {
    case AcceleratorVariant::AA: return "AA";
    case AcceleratorVariant::AAg: return "AAg";
    case AcceleratorVariant::AAr: return "AAr";
    case AcceleratorVariant::NGMRES: return "NGMRES";
    case AcceleratorVariant::NGMRESr: return "NGMRESr";
  }
  return "unknown";
}

std::optional<AcceleratorVariant> parse_variant(std::string_view name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  for (AcceleratorVariant v : kAllVariants) {
    std::string candidate;
    for (char c : to_string(v))
      candidate.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (candidate == lower) return v;
  }
  return std::nullopt;
}

bool is_anderson_type(AcceleratorVariant v) {
  return v == AcceleratorVariant::AA || v == AcceleratorVariant::AAg ||
         v == AcceleratorVariant::AAr;
}

// ---------------------------------------------------------------------------
// HistoryWindow
// ---------------------------------------------------------------------------

void HistoryWindow::push(const RichardsonOperator& op, Vector x) {
  FixedPointEvaluation e = op.evaluate(x);
  WindowEntry entry;
  entry.x = std::move(x);
  entry.image = std::move(e.image);
  entry.classical = std::move(e.residuals.classical);
  entry.preconditioned = std::move(e.residuals.preconditioned);
  if (variant_ == AcceleratorVariant::AAg) {
    entry.image_classical = op.classical_residual(entry.image);
  } else if (variant_ == AcceleratorVariant::AAr) {
    entry.image_preconditioned = op.evaluate(entry.image).residuals.preconditioned;
  }

  if (!entries_.empty()) release_unneeded(entries_.front());
  entries_.push_front(std::move(entry));
  ++pushes_;
  if (!depth_.is_full()) {
    while (entries_.size() > depth_.value() + 1) entries_.pop_back();
  }
}

void HistoryWindow::release_unneeded(WindowEntry& e) const {
  auto release = [](Vector& v) { Vector().swap(v); };
  switch (variant_) {
    case AcceleratorVariant::AA:
      release(e.x);
      release(e.classical);
      break;
    case AcceleratorVariant::AAg:
      release(e.x);
      release(e.classical);
      release(e.preconditioned);
      break;
    case AcceleratorVariant::AAr:
      release(e.x);
      release(e.classical);
      release(e.preconditioned);
      break;
    case AcceleratorVariant::NGMRES:
      release(e.image);
      release(e.preconditioned);
      break;
    case AcceleratorVariant::NGMRESr:
      release(e.image);
      release(e.classical);
      break;
  }
}

// ---------------------------------------------------------------------------
// Steps
// ---------------------------------------------------------------------------

namespace {

// Anderson-type step: coefficients minimize
//   || f_k + sum_{i=1}^{m_k} alpha_i (f_k - f_{k-i}) ||,
// and x_{k+1} = q(x_k) + sum_i alpha_i (q(x_k) - q(x_{k-i})).
// The design matrix holds columns f_{k-i} - f_k so that the least-squares
// residual rhs - M alpha is exactly the quantity above.
template <typename Flavor>
StepResult anderson_type_step(const HistoryWindow& w, Flavor flavor) {
  if (w.empty()) throw InvalidArgument("accelerated step on an empty window");
  const WindowEntry& newest = w[0];
  const Vector& fk = flavor(newest);
  const std::size_t n = fk.size();
  const std::size_t mk = w.m_k();

  DenseMatrix design(n, mk);
  for (std::size_t i = 1; i <= mk; ++i) {
    const Vector& fi = flavor(w[i]);
    auto col = design.column(i - 1);
    for (std::size_t r = 0; r < n; ++r) col[r] = fi[r] - fk[r];
  }
  LeastSquaresSolution ls = solve_least_squares(design, fk);

  StepResult out;
  out.next = newest.image;
  for (std::size_t i = 1; i <= mk; ++i) {
    const double a = ls.coefficients[i - 1];
    if (a == 0.0) continue;
    const Vector& qi = w[i].image;
    for (std::size_t r = 0; r < n; ++r) out.next[r] += a * (newest.image[r] - qi[r]);
  }
  out.record.k = w.k();
  out.record.window = mk;
  out.record.coefficients = std::move(ls.coefficients);
  out.record.lsq_rank = ls.rank;
  out.record.lsq_residual_norm = ls.residual_norm;
  out.record.lsq_residual = std::move(ls.residual_vector);
  return out;
}

// NGMRES-type step: coefficients minimize
//   || h + sum_{i=0}^{m_k} beta_i (h - f_{k-i}) ||,  h = flavor of q(x_k),
// and x_{k+1} = q(x_k) + sum_i beta_i (q(x_k) - x_{k-i}).
template <typename Flavor>
StepResult ngmres_type_step(const HistoryWindow& w, const Vector& image_flavor, Flavor flavor) {
  if (w.empty()) throw InvalidArgument("accelerated step on an empty window");
  const WindowEntry& newest = w[0];
  const Vector& h = image_flavor;
  const std::size_t n = h.size();
  const std::size_t mk = w.m_k();

  DenseMatrix design(n, mk + 1);
  for (std::size_t i = 0; i <= mk; ++i) {
    const Vector& fi = flavor(w[i]);
    auto col = design.column(i);
    for (std::size_t r = 0; r < n; ++r) col[r] = fi[r] - h[r];
  }
  LeastSquaresSolution ls = solve_least_squares(design, h);

  StepResult out;
  out.next = newest.image;
  for (std::size_t i = 0; i <= mk; ++i) {
    const double b = ls.coefficients[i];
    if (b == 0.0) continue;
    const Vector& xi = w[i].x;
    for (std::size_t r = 0; r < n; ++r) out.next[r] += b * (newest.image[r] - xi[r]);
  }
  out.record.k = w.k();
  out.record.window = mk;
  out.record.coefficients = std::move(ls.coefficients);
  out.record.lsq_rank = ls.rank;
  out.record.lsq_residual_norm = ls.residual_norm;
  out.record.lsq_residual = std::move(ls.residual_vector);
  return out;
}

void require_variant(const HistoryWindow& w, AcceleratorVariant v) {
  if (w.variant() != v)
    throw InvalidArgument("window caches data for " + to_string(w.variant()) + ", not " +
                          to_string(v));
}

}  // namespace

StepResult aa_step(const RichardsonOperator&, const HistoryWindow& window) {
  require_variant(window, AcceleratorVariant::AA);
  return anderson_type_step(window, [](const WindowEntry& e) -> const Vector& {
    return e.preconditioned;
  });
}

StepResult aag_step(const RichardsonOperator&, const HistoryWindow& window) {
  require_variant(window, AcceleratorVariant::AAg);
  return anderson_type_step(window, [](const WindowEntry& e) -> const Vector& {
    return e.image_classical;
  });
}

StepResult aar_step(const RichardsonOperator&, const HistoryWindow& window) {
  require_variant(window, AcceleratorVariant::AAr);
  return anderson_type_step(window, [](const WindowEntry& e) -> const Vector& {
    return e.image_preconditioned;
  });
}

StepResult ngmres_step(const RichardsonOperator& op, const HistoryWindow& window) {
  require_variant(window, AcceleratorVariant::NGMRES);
  const Vector g_image = op.classical_residual(window[0].image);
  return ngmres_type_step(window, g_image, [](const WindowEntry& e) -> const Vector& {
    return e.classical;
  });
}

StepResult ngmresr_step(const RichardsonOperator& op, const HistoryWindow& window) {
  require_variant(window, AcceleratorVariant::NGMRESr);
  // r(q(x_k)) = q(x_k) - q(q(x_k)): the extra q evaluation of this variant.
  const Vector r_image = op.evaluate(window[0].image).residuals.preconditioned;
  return ngmres_type_step(window, r_image, [](const WindowEntry& e) -> const Vector& {
    return e.preconditioned;
  });
}

StepResult accelerated_step(const RichardsonOperator& op, const HistoryWindow& window) {
  switch (window.variant()) {
    case AcceleratorVariant::AA: return aa_step(op, window);
    case AcceleratorVariant::AAg: return aag_step(op, window);
    case AcceleratorVariant::AAr: return aar_step(op, window);
    case AcceleratorVariant::NGMRES: return ngmres_step(op, window);
    case AcceleratorVariant::NGMRESr: return ngmresr_step(op, window);
  }
  throw InvalidArgument("unknown accelerator variant");
}

SolveReport run_accelerated(const RichardsonOperator& op, AcceleratorVariant variant, Depth depth,
                            const SolveOptions& options) {
  if (!(options.tol > 0.0)) throw InvalidArgument("run_accelerated: tol must be positive");
  if (options.maxit < 1) throw InvalidArgument("run_accelerated: maxit must be at least 1");

  SolveReport report;
  report.method = to_string(variant) + "(" + depth.describe() + ")";
  report.full_window = depth.is_full();
  HistoryWindow window(variant, depth);
  window.push(op, op.problem().x0);

  double r0 = 0.0;
  for (std::size_t k = 0;; ++k) {
    const WindowEntry& cur = window[0];
    StepRecord rec = detail::make_record(k, cur.x, {cur.classical, cur.preconditioned},
                                         options.keep_vectors);
    if (k == 0) r0 = rec.preconditioned_norm;
    report.iterations = k;

    const bool finite = all_finite(cur.x) && std::isfinite(rec.preconditioned_norm) &&
                        std::isfinite(rec.classical_norm);
    if (!finite) {
      report.trace.push_back(std::move(rec));
      report.status = SolveStatus::Diverged;
      report.message = "non-finite iterate at k=" + std::to_string(k);
      break;
    }
    if (detail::meets_tolerance(rec.preconditioned_norm, r0, options.tol)) {
      report.trace.push_back(std::move(rec));
      report.status = SolveStatus::Converged;
      break;
    }
    if (k == options.maxit) {
      report.trace.push_back(std::move(rec));
      report.status = SolveStatus::MaxIterations;
      break;
    }

    StepResult step;
    try {
      step = accelerated_step(op, window);
    } catch (const Error& e) {
      report.trace.push_back(std::move(rec));
      report.status = SolveStatus::Breakdown;
      report.message = e.what();
      break;
    }
    rec.window = step.record.window;
    rec.coefficients = std::move(step.record.coefficients);
    rec.lsq_rank = step.record.lsq_rank;
    rec.lsq_residual_norm = step.record.lsq_residual_norm;
    if (options.keep_vectors) rec.lsq_residual = std::move(step.record.lsq_residual);
    report.trace.push_back(std::move(rec));

    window.push(op, std::move(step.next));
  }
  report.solution = window[0].x;
  return report;
}

}  // namespace fpaccel
