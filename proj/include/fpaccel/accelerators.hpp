#pragma once

#include <cstddef>
#include <algorithm>
#include <deque>
#include <optional>
#include <string>
#include <string_view>

#include "fpaccel/fixed_point.hpp"

namespace fpaccel {

enum class AcceleratorVariant { AA, AAg, AAr, NGMRES, NGMRESr };

inline constexpr AcceleratorVariant kAllVariants[] = {
    AcceleratorVariant::AA, AcceleratorVariant::AAg, AcceleratorVariant::AAr,
    AcceleratorVariant::NGMRES, AcceleratorVariant::NGMRESr};

std::string to_string(AcceleratorVariant v);
/// Case-insensitive; accepts "AA", "AAg", "AAr", "NGMRES", "NGMRESr".
std::optional<AcceleratorVariant> parse_variant(std::string_view name);

/// AA-type variants combine q-images of past iterates; NGMRES-type variants
/// combine q(x_k) with the raw iterates and carry one extra coefficient.
bool is_anderson_type(AcceleratorVariant v);

/// Window depth m, or unbounded for the full methods.
class Depth {
 public:
  static Depth full() { return Depth(std::nullopt); }
  static Depth of(std::size_t m) { return Depth(m); }

  bool is_full() const { return !m_.has_value(); }
  std::size_t value() const { return *m_; }
  /// m_k = min(k, m).
  std::size_t window_at(std::size_t k) const { return m_ ? std::min(k, *m_) : k; }
  std::string describe() const { return m_ ? std::to_string(*m_) : "full"; }

  friend bool operator==(const Depth&, const Depth&) = default;

 private:
  explicit Depth(std::optional<std::size_t> m) : m_(m) {}
  std::optional<std::size_t> m_;
};

/// Cached data for one past iterate x_j. Only the newest entry is fully
/// populated; older entries keep just what their variant's least-squares
/// problem and update formula consume (others are released).
struct WindowEntry {
  Vector x;                     // x_j                (NGMRES, NGMRESr)
  Vector image;                 // q(x_j)             (AA, AAg, AAr)
  Vector classical;             // g(x_j) = A x_j - b (NGMRES)
  Vector preconditioned;        // r(x_j)             (AA, NGMRESr)
  Vector image_classical;       // g(q(x_j))          (AAg)
  Vector image_preconditioned;  // r(q(x_j))          (AAr)
};

/// Ring buffer of the last m_k + 1 iterates; entry 0 is x_k, entry j is x_{k-j}.
class HistoryWindow {
 public:
  HistoryWindow(AcceleratorVariant variant, Depth depth) : variant_(variant), depth_(depth) {}

  /// Evaluates q at x (plus q(q(x)) or g(q(x)) where the variant needs it)
  /// and makes x the newest entry, evicting beyond m + 1 entries.
  void push(const RichardsonOperator& op, Vector x);

  AcceleratorVariant variant() const { return variant_; }
  const Depth& depth() const { return depth_; }
  /// Index k of the newest iterate.
  std::size_t k() const { return pushes_ - 1; }
  std::size_t size() const { return entries_.size(); }
  std::size_t m_k() const { return entries_.size() - 1; }
  bool empty() const { return entries_.empty(); }
  const WindowEntry& operator[](std::size_t j) const { return entries_[j]; }

 private:
  void release_unneeded(WindowEntry& e) const;

  AcceleratorVariant variant_;
  Depth depth_;
  std::deque<WindowEntry> entries_;
  std::size_t pushes_ = 0;
};

struct StepResult {
  Vector next;        // x_{k+1}
  StepRecord record;  // k, window, coefficients, lsq fields and lsq_residual
};

StepResult aa_step(const RichardsonOperator& op, const HistoryWindow& window);
StepResult aag_step(const RichardsonOperator& op, const HistoryWindow& window);
StepResult aar_step(const RichardsonOperator& op, const HistoryWindow& window);
StepResult ngmres_step(const RichardsonOperator& op, const HistoryWindow& window);
StepResult ngmresr_step(const RichardsonOperator& op, const HistoryWindow& window);

/// Dispatches on window.variant().
StepResult accelerated_step(const RichardsonOperator& op, const HistoryWindow& window);

SolveReport run_accelerated(const RichardsonOperator& op, AcceleratorVariant variant, Depth depth,
                            const SolveOptions& options = {});

}  // namespace fpaccel
