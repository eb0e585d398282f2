#include "stochwave/stepper.hpp"

#include <cmath>
#include <sstream>

namespace stochwave {

SchemeParams SchemeParams::make(const ProblemSpec& spec, int steps, double horizon, double solver_tol, int max_iters,
                                double picard_relaxation, bool override_gate)
{
  if (steps < 1) {
    throw std::invalid_argument("SchemeParams: N must be >= 1");
  }
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("SchemeParams: T must be > 0");
  }
  if (!(solver_tol > 0.0) || max_iters < 1) {
    throw std::invalid_argument("SchemeParams: solver tolerance must be > 0 and max_iters >= 1");
  }
  if (!(picard_relaxation > 0.0 && picard_relaxation <= 1.0)) {
    throw std::invalid_argument("SchemeParams: Picard relaxation must lie in (0, 1]");
  }
  SchemeParams p;
  p.steps = steps;
  p.horizon = horizon;
  p.solver_tol = solver_tol;
  p.max_iters = max_iters;
  p.picard_relaxation = picard_relaxation;
  const double gate = spec.constants.lambda * p.tau();
  if (!override_gate && !(gate < 1.0)) {
    std::ostringstream msg;
    msg << "step restriction violated: lambda*tau = " << gate << " >= 1 (lambda = " << spec.constants.lambda
        << ", tau = " << p.tau() << ")";
    throw std::invalid_argument(msg.str());
  }
  return p;
}

NonConvergence::NonConvergence(int step, std::vector<double> history)
    : std::runtime_error([&] {
        std::ostringstream msg;
        msg << "nonlinear solve did not converge at step " << step;
        if (!history.empty()) {
          msg << " (final residual " << history.back() << ")";
        }
        return msg.str();
      }()),
      step_(step),
      history_(std::move(history))
{
}

Vector step_residual(const Vector& v_trial, const StepState& state, const Vector& forcing, const Vector& noise,
                     const ProblemSpec& spec, const SchemeParams& params)
{
  const double tau = params.tau();
  Vector r = spec.fem.mass * ((v_trial - state.v_prev - noise) / tau);
  r += spec.damping->apply(v_trial);
  r += spec.elastic.apply(state.u_prev + tau * v_trial);
  r -= forcing;
  return r;
}

double residual_norm(const Vector& residual, const ProblemSpec& spec, const SchemeParams& params)
{
  const TridiagonalLdlt mass(spec.fem.mass);
  const double sq = residual.dot(mass.solve(residual));
  return params.tau() * std::sqrt(std::max(sq, 0.0));
}

namespace {

class StepSolver {
public:
  StepSolver(const StepState& state, const Vector& forcing, const Vector& noise, const ProblemSpec& spec,
             const SchemeParams& params)
      : state_(state),
        forcing_(forcing),
        noise_(noise),
        spec_(spec),
        params_(params),
        mass_ldlt_(spec.fem.mass),
        fixed_(spec.fem.mass)
  {
    const double tau = params.tau();
    fixed_ *= 1.0 / tau;
    fixed_ += tau * SymTridiagonal(spec.elastic.matrix());
  }

  StepSolution run(const Vector& guess)
  {
    StepSolution out;
    out.v = guess;
    Vector r = step_residual(out.v, state_, forcing_, noise_, spec_, params_);
    double norm = measure(r);
    out.stats.history.push_back(norm);

    // Phases alternate, each running until it stalls, so a Newton iteration
    // stuck near a kink of A hands over to Picard and back.
    bool newton = params_.strategy == SolverStrategy::NewtonFirst;
    int idle_phases = 0;
    while (norm > params_.solver_tol && out.stats.iterations() < params_.max_iters && idle_phases < 2) {
      const double before = norm;
      const int budget = params_.max_iters - out.stats.iterations();
      if (newton) {
        newton_phase(out, r, norm, budget);
      } else {
        picard_phase(out, r, norm, budget);
      }
      idle_phases = norm < before ? 0 : idle_phases + 1;
      newton = !newton;
    }
    out.stats.residual = norm;
    if (!(norm <= params_.solver_tol)) {
      throw NonConvergence(0, out.stats.history);
    }
    return out;
  }

private:
  double measure(const Vector& r) const
  {
    const double sq = r.dot(mass_ldlt_.solve(r));
    return params_.tau() * std::sqrt(std::max(sq, 0.0));
  }

  void newton_phase(StepSolution& out, Vector& r, double& norm, int budget)
  {
    std::vector<double> seen{norm};
    for (int it = 0; it < budget && norm > params_.solver_tol; ++it) {
      SymTridiagonal jac = fixed_ + spec_.damping->jacobian(out.v);
      Vector delta;
      try {
        delta = TridiagonalLdlt(jac).solve(r);
      } catch (const std::domain_error&) {
        return;
      }
      // backtracking on the residual norm
      bool accepted = false;
      double step = 1.0;
      for (int k = 0; k < 40; ++k, step *= 0.5) {
        Vector trial = out.v - step * delta;
        Vector r_trial = step_residual(trial, state_, forcing_, noise_, spec_, params_);
        const double n_trial = measure(r_trial);
        if (n_trial <= (1.0 - 1e-4 * step) * norm) {
          out.v = std::move(trial);
          r = std::move(r_trial);
          norm = n_trial;
          accepted = true;
          break;
        }
      }
      ++out.stats.newton_iters;
      out.stats.history.push_back(norm);
      seen.push_back(norm);
      if (!accepted) {
        return;  // stalled, typically at a kink of rho
      }
      // crawling: less than a halving over three iterations
      if (seen.size() > 3 && norm > 0.5 * seen[seen.size() - 4]) {
        return;
      }
    }
  }

  void picard_phase(StepSolution& out, Vector& r, double& norm, int budget)
  {
    std::vector<double> seen{norm};
    for (int it = 0; it < budget && norm > params_.solver_tol; ++it) {
      SymTridiagonal lagged = fixed_ + spec_.damping->secant(out.v);
      Vector correction;
      try {
        correction = TridiagonalLdlt(lagged).solve(r);
      } catch (const std::domain_error&) {
        return;
      }
      out.v -= params_.picard_relaxation * correction;
      r = step_residual(out.v, state_, forcing_, noise_, spec_, params_);
      norm = measure(r);
      ++out.stats.picard_iters;
      out.stats.history.push_back(norm);
      seen.push_back(norm);
      // stagnating: less than 5% progress over five iterations
      if (seen.size() > 5 && norm > 0.95 * seen[seen.size() - 6]) {
        return;
      }
    }
  }

  const StepState& state_;
  const Vector& forcing_;
  const Vector& noise_;
  const ProblemSpec& spec_;
  const SchemeParams& params_;
  TridiagonalLdlt mass_ldlt_;
  SymTridiagonal fixed_;
};

}  // namespace

StepSolution solve_step(const StepState& state, const Vector& forcing, const Vector& noise, const ProblemSpec& spec,
                        const SchemeParams& params, const Vector& initial_guess)
{
  const Eigen::Index n = spec.dim();
  if (state.v_prev.size() != n || state.u_prev.size() != n || forcing.size() != n || noise.size() != n ||
      initial_guess.size() != n) {
    throw std::invalid_argument("solve_step: dimension mismatch");
  }
  return StepSolver(state, forcing, noise, spec, params).run(initial_guess);
}

ForcingGrid assemble_forcing(const ProblemSpec& spec, const SchemeParams& params)
{
  ForcingGrid grid;
  grid.values.reserve(static_cast<std::size_t>(params.steps));
  for (int n = 1; n <= params.steps; ++n) {
    grid.values.push_back(spec.forcing.average(params.time(n - 1), params.time(n)));
  }
  return grid;
}

Vector noise_term(const ProblemSpec& spec, const WienerPath& path, int step, const Vector& u_prev,
                  const Vector& v_prev)
{
  return spec.noise->contract(u_prev, v_prev, path.increment(step));
}

Trajectory integrate(const ProblemSpec& spec, const SchemeParams& params, const WienerPath& path,
                     const ForcingGrid& forcing, const GuessPolicy& guess)
{
  if (path.steps() != params.steps) {
    throw std::invalid_argument("integrate: Wiener path and scheme disagree on N");
  }
  if (std::abs(path.horizon() - params.horizon) > 1e-12 * params.horizon) {
    throw std::invalid_argument("integrate: Wiener path and scheme disagree on T");
  }
  if (path.modes() > spec.noise->modes()) {
    throw std::invalid_argument("integrate: noise truncation exceeds available modes");
  }
  if (static_cast<int>(forcing.values.size()) != params.steps) {
    throw std::invalid_argument("integrate: forcing grid has the wrong length");
  }
  const double tau = params.tau();
  Trajectory traj;
  traj.v.reserve(static_cast<std::size_t>(params.steps) + 1);
  traj.u.reserve(static_cast<std::size_t>(params.steps) + 1);
  traj.v.push_back(spec.v0);
  traj.u.push_back(spec.u0);
  for (int n = 1; n <= params.steps; ++n) {
    const StepState state{traj.v.back(), traj.u.back()};
    const Vector noise = noise_term(spec, path, n, state.u_prev, state.v_prev);
    const Vector start = guess ? guess(n, state.v_prev) : state.v_prev;
    StepSolution sol;
    try {
      sol = solve_step(state, forcing.at(n), noise, spec, params, start);
    } catch (const NonConvergence& e) {
      throw NonConvergence(n, e.history());
    }
    traj.u.push_back(state.u_prev + tau * sol.v);
    traj.v.push_back(std::move(sol.v));
    traj.stats.push_back(std::move(sol.stats));
  }
  return traj;
}

std::vector<Vector> displacement_by_summation(const Trajectory& traj, double tau)
{
  std::vector<Vector> u;
  u.reserve(traj.v.size());
  for (std::size_t n = 0; n < traj.v.size(); ++n) {
    Vector sum = Vector::Zero(traj.u.front().size());
    for (std::size_t k = 1; k <= n; ++k) {
      sum += traj.v[k];
    }
    u.push_back(traj.u.front() + tau * sum);
  }
  return u;
}

}  // namespace stochwave
