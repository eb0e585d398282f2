#include "stochwave/prolongation.hpp"

#include <cmath>
#include <stdexcept>

namespace stochwave {

namespace {

struct GridPosition {
  int cell;         // 1-based cell whose closure contains t, for t > 0
  bool on_node;     // t coincides with t_cell (right end of `cell`) up to rounding
};

GridPosition locate(double t, double tau, int steps, double horizon)
{
  if (!(t >= 0.0) || t > horizon * (1.0 + 1e-12)) {
    throw std::out_of_range("time outside [0, T]");
  }
  const double k = t / tau;
  const double nearest = std::round(k);
  if (std::abs(k - nearest) <= 1e-9 * std::max(1.0, k)) {
    return {static_cast<int>(nearest), true};
  }
  const int cell = std::min(steps, static_cast<int>(std::ceil(k)));
  return {cell, false};
}

}  // namespace

PiecewiseConstantProcess::PiecewiseConstantProcess(std::span<const Vector> levels, double horizon,
                                                   Convention convention, std::optional<Vector> first_cell)
    : levels_(levels), horizon_(horizon), convention_(convention), first_cell_(std::move(first_cell))
{
  validate();
}

PiecewiseConstantProcess PiecewiseConstantProcess::owning(std::vector<Vector> levels, double horizon,
                                                          Convention convention, std::optional<Vector> first_cell)
{
  return PiecewiseConstantProcess(std::make_shared<const std::vector<Vector>>(std::move(levels)), horizon,
                                  convention, std::move(first_cell));
}

PiecewiseConstantProcess::PiecewiseConstantProcess(std::shared_ptr<const std::vector<Vector>> owned, double horizon,
                                                   Convention convention, std::optional<Vector> first_cell)
    : owned_(std::move(owned)),
      levels_(*owned_),
      horizon_(horizon),
      convention_(convention),
      first_cell_(std::move(first_cell))
{
  validate();
}

void PiecewiseConstantProcess::validate() const
{
  if (levels_.size() < 2) {
    throw std::invalid_argument("PiecewiseConstantProcess: need levels 0..N with N >= 1");
  }
  if (!(horizon_ > 0.0)) {
    throw std::invalid_argument("PiecewiseConstantProcess: horizon must be positive");
  }
}

const Vector& PiecewiseConstantProcess::on_cell(int n) const
{
  if (n < 1 || n > steps()) {
    throw std::out_of_range("PiecewiseConstantProcess: cell index out of range");
  }
  if (convention_ == Convention::Right) {
    return level(n);
  }
  if (n == 1) {
    return first_cell_ ? *first_cell_ : level(0);
  }
  return level(n - 1);
}

const Vector& PiecewiseConstantProcess::evaluate(double t) const
{
  const GridPosition pos = locate(t, tau(), steps(), horizon_);
  if (!pos.on_node) {
    return on_cell(pos.cell);
  }
  const int n = pos.cell;
  if (convention_ == Convention::Right) {
    return level(std::max(n, 1));
  }
  if (n == 0) {
    return on_cell(1);
  }
  // v^-(t_n) = v^n, including v^-(T) = v^N
  return level(n);
}

PiecewiseConstantProcess right_prolongation(std::span<const Vector> levels, double horizon)
{
  return PiecewiseConstantProcess(levels, horizon, Convention::Right);
}

PiecewiseConstantProcess left_prolongation(std::span<const Vector> levels, double horizon, Vector first_cell)
{
  return PiecewiseConstantProcess(levels, horizon, Convention::Left, std::move(first_cell));
}

double theta_plus(double t, double tau, double horizon)
{
  const int steps = static_cast<int>(std::lround(horizon / tau));
  const GridPosition pos = locate(t, tau, steps, horizon);
  return pos.cell * tau;
}

PiecewiseConstantProcess steklov_average(const PiecewiseConstantProcess& y)
{
  const int steps = y.steps();
  std::vector<Vector> levels;
  levels.reserve(static_cast<std::size_t>(steps) + 1);
  levels.push_back(y.on_cell(1));
  for (int k = 1; k < steps; ++k) {
    // theta+(t) = t_k and theta+(t + tau) = t_{k+1} on cell k: average over cell k+1
    levels.push_back(y.on_cell(k + 1));
  }
  levels.push_back(Vector::Zero(y.level(0).size()));
  return PiecewiseConstantProcess::owning(std::move(levels), y.horizon(), Convention::Right);
}

double integrate_cellwise(const PiecewiseConstantProcess& a, const PiecewiseConstantProcess& b, const Pairing& q)
{
  if (a.steps() != b.steps() || std::abs(a.horizon() - b.horizon()) > 1e-12 * a.horizon()) {
    throw std::invalid_argument("integrate_cellwise: processes live on different grids");
  }
  const double tau = a.tau();
  double sum = 0.0;
  for (int k = 1; k <= a.steps(); ++k) {
    sum += tau * q(a.on_cell(k), b.on_cell(k));
  }
  return sum;
}

SteklovCheck verify_steklov_identity(const PiecewiseConstantProcess& y, std::span<const Vector> x_levels,
                                     const Pairing& pairing)
{
  if (static_cast<int>(x_levels.size()) != y.steps() + 1) {
    throw std::invalid_argument("verify_steklov_identity: x and y live on different grids");
  }
  const PiecewiseConstantProcess sy = steklov_average(y);
  const auto x = right_prolongation(x_levels, y.horizon());
  const auto x_minus = PiecewiseConstantProcess(x_levels, y.horizon(), Convention::Left);
  const double tau = y.tau();
  SteklovCheck check;
  for (int k = 1; k <= y.steps(); ++k) {
    const double mid = (k - 0.5) * tau;
    check.lhs += tau * pairing(sy.evaluate(mid), x.evaluate(mid));
    if (k >= 2) {
      check.rhs += tau * pairing(y.evaluate(mid), x_minus.evaluate(mid));
    }
  }
  check.defect = std::abs(check.lhs - check.rhs);
  return check;
}

}  // namespace stochwave
