#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "stochwave/tridiagonal.hpp"

namespace stochwave {

/// Which end of each cell carries the level value.
enum class Convention {
  Right,  ///< value on (t_{n-1}, t_n] is level n; value at 0 is level 1
  Left,   ///< value on [t_{n-1}, t_n) is level n-1 for n >= 2, a fixed first-cell value on [0, tau), level N at T
};

/// Piecewise-constant-in-time process over a uniform grid of [0, T], viewing
/// levels 0..N of a discrete sequence. The view does not own the levels
/// unless it was produced by an operation that creates new data.
class PiecewiseConstantProcess {
public:
  /// `levels` must hold N + 1 vectors (level 0 .. N) and outlive the view.
  PiecewiseConstantProcess(std::span<const Vector> levels, double horizon, Convention convention,
                           std::optional<Vector> first_cell = std::nullopt);
  /// Owning variant, for processes computed from other processes.
  static PiecewiseConstantProcess owning(std::vector<Vector> levels, double horizon, Convention convention,
                                         std::optional<Vector> first_cell = std::nullopt);

  [[nodiscard]] int steps() const { return static_cast<int>(levels_.size()) - 1; }
  [[nodiscard]] double horizon() const { return horizon_; }
  [[nodiscard]] double tau() const { return horizon_ / steps(); }
  [[nodiscard]] Convention convention() const { return convention_; }
  [[nodiscard]] const Vector& level(int n) const { return levels_[static_cast<std::size_t>(n)]; }

  /// Value at time t in [0, T]; throws std::out_of_range outside.
  [[nodiscard]] const Vector& evaluate(double t) const;
  /// Value on the open interior of cell n (1-based).
  [[nodiscard]] const Vector& on_cell(int n) const;

private:
  PiecewiseConstantProcess(std::shared_ptr<const std::vector<Vector>> owned, double horizon, Convention convention,
                           std::optional<Vector> first_cell);
  void validate() const;

  std::shared_ptr<const std::vector<Vector>> owned_;
  std::span<const Vector> levels_;
  double horizon_;
  Convention convention_;
  std::optional<Vector> first_cell_;
};

/// v_l: right-continuous prolongation of v^1..v^N.
PiecewiseConstantProcess right_prolongation(std::span<const Vector> levels, double horizon);
/// v_l^-: delayed prolongation with `first_cell` on [0, tau) (0 for v, u^0 for u).
PiecewiseConstantProcess left_prolongation(std::span<const Vector> levels, double horizon, Vector first_cell);

/// Right endpoint t_n of the cell (t_{n-1}, t_n] containing t, and 0 at t = 0.
double theta_plus(double t, double tau, double horizon);

/// (S y)(t) = (1/tau) int_{theta+(t)}^{theta+(t + tau)} y ds on [0, T - tau],
/// 0 afterwards. For a right-convention y this shifts values one cell forward.
PiecewiseConstantProcess steklov_average(const PiecewiseConstantProcess& y);

using Pairing = std::function<double(const Vector&, const Vector&)>;

/// |int_0^T <S y, x> dt - int_tau^T <y, x^-> dt| with x and x^- the right
/// and left prolongations of `x_levels`. Both integrals are exact cell sums.
struct SteklovCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double defect = 0.0;
};
SteklovCheck verify_steklov_identity(const PiecewiseConstantProcess& y, std::span<const Vector> x_levels,
                                     const Pairing& pairing);

/// int_0^T q(a(t), b(t)) dt for piecewise-constant processes on one grid,
/// evaluated as an exact cell sum.
double integrate_cellwise(const PiecewiseConstantProcess& a, const PiecewiseConstantProcess& b, const Pairing& q);

}  // namespace stochwave
