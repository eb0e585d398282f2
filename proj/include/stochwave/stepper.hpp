#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stochwave/noise.hpp"
#include "stochwave/operators.hpp"

namespace stochwave {

/// Order in which the per-step solver tries its two iterations.
enum class SolverStrategy { NewtonFirst, PicardFirst };

struct SchemeParams {
  int steps = 1;
  double horizon = 1.0;
  double solver_tol = 1e-10;
  int max_iters = 200;
  double picard_relaxation = 1.0;
  SolverStrategy strategy = SolverStrategy::NewtonFirst;

  [[nodiscard]] double tau() const { return horizon / steps; }
  [[nodiscard]] double time(int n) const { return n * tau(); }

  /// Validates N >= 1, T > 0, tol > 0 and, unless `override_gate`, the step
  /// restriction lambda * tau < 1. Throws std::invalid_argument.
  static SchemeParams make(const ProblemSpec& spec, int steps, double horizon, double solver_tol = 1e-10,
                           int max_iters = 200, double picard_relaxation = 1.0, bool override_gate = false);
};

/// Previous level of the scheme.
struct StepState {
  Vector v_prev;
  Vector u_prev;
};

struct SolveStats {
  int newton_iters = 0;
  int picard_iters = 0;
  double residual = 0.0;
  std::vector<double> history;

  [[nodiscard]] int iterations() const { return newton_iters + picard_iters; }
};

struct StepSolution {
  Vector v;
  SolveStats stats;
};

/// Thrown when neither Newton nor the Picard fallback reaches the tolerance.
class NonConvergence : public std::runtime_error {
public:
  NonConvergence(int step, std::vector<double> history);

  [[nodiscard]] int step() const { return step_; }
  [[nodiscard]] const std::vector<double>& history() const { return history_; }

private:
  int step_;
  std::vector<double> history_;
};

/// Residual of the velocity equation, tested against every basis function:
///   M (v - v_prev) / tau + A v + B (u_prev + tau v) - f - M noise / tau
/// where `noise` = sum_j C_j(u^{n-1}, v^{n-1}) dW_j is assembled by the caller.
Vector step_residual(const Vector& v_trial, const StepState& state, const Vector& forcing, const Vector& noise,
                     const ProblemSpec& spec, const SchemeParams& params);

/// Norm used for the solver tolerance: tau times the H-norm of the Riesz
/// representative of the residual, sqrt(tau^2 r^T M^{-1} r). With this
/// scaling two solutions with residual norms below tol differ by at most
/// 2 tol / (1 - lambda_A tau) in H.
double residual_norm(const Vector& residual, const ProblemSpec& spec, const SchemeParams& params);

/// Solves the implicit step for v^n. Semismooth Newton with backtracking on
/// the residual norm alternates with a relaxed lagged-coefficient Picard
/// iteration whenever one of them stalls; SolverStrategy picks the first.
/// Throws NonConvergence (with step index 0) if the tolerance is not met.
StepSolution solve_step(const StepState& state, const Vector& forcing, const Vector& noise, const ProblemSpec& spec,
                        const SchemeParams& params, const Vector& initial_guess);

/// Exact time averages f^n of the forcing over each cell.
struct ForcingGrid {
  std::vector<Vector> values;  // values[n-1] = f^n

  [[nodiscard]] const Vector& at(int n) const { return values.at(static_cast<std::size_t>(n - 1)); }
};

ForcingGrid assemble_forcing(const ProblemSpec& spec, const SchemeParams& params);

struct Trajectory {
  std::vector<Vector> v;  // v^0 .. v^N
  std::vector<Vector> u;  // u^0 .. u^N
  std::vector<SolveStats> stats;  // stats[n-1] for step n

  [[nodiscard]] int steps() const { return static_cast<int>(v.size()) - 1; }
};

/// Optional hook choosing the solver's starting point at step n given the
/// warm start v^{n-1}.
using GuessPolicy = std::function<Vector(int step, const Vector& warm_start)>;

/// The noise term of step n: sum_j C_j(u^{n-1}, v^{n-1}) dW^{r,n}_j.
Vector noise_term(const ProblemSpec& spec, const WienerPath& path, int step, const Vector& u_prev,
                  const Vector& v_prev);

/// Runs the scheme for n = 1..N. Throws NonConvergence carrying the failing
/// step index, and std::invalid_argument for inconsistent inputs.
Trajectory integrate(const ProblemSpec& spec, const SchemeParams& params, const WienerPath& path,
                     const ForcingGrid& forcing, const GuessPolicy& guess = {});

/// u^0 + tau * sum_{k <= n} v^k evaluated by direct summation.
std::vector<Vector> displacement_by_summation(const Trajectory& traj, double tau);

}  // namespace stochwave
