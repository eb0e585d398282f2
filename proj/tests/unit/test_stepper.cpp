#include <doctest.h>

#include <cmath>
#include <numbers>

#include "stochwave/stepper.hpp"

using namespace stochwave;

namespace {

ProblemSpec scalar_problem(double a, double b, double v0)
{
  const SymTridiagonal one = SymTridiagonal::identity(1);
  return make_problem(FemMatrices{one, one}, nullptr, std::make_shared<LinearDamping>(a * one, a),
                      ElasticOperator(one, b), std::make_shared<ZeroNoise>(one, 1), Forcing::zero(1),
                      Vector::Zero(1), Vector::Constant(1, v0));
}

ProblemSpec rho_problem(int m, double alpha, double beta, double gamma)
{
  const Mesh1D mesh(m);
  const Vector u0 = mesh.interpolate([](double x) { return std::sin(std::numbers::pi * x); });
  const Vector v0 = mesh.interpolate([](double x) { return std::sin(2.0 * std::numbers::pi * x); });
  return make_problem(mesh.matrices(), std::make_shared<const Mesh1D>(mesh), std::make_shared<RhoDamping>(mesh),
                      ElasticOperator(mesh.stiffness(), 1.0),
                      std::make_shared<SpectralNoise>(mesh, SpectralNoise::Parameters{alpha, beta, gamma, 1.0}, 1.0),
                      Forcing::zero(m), u0, v0);
}

}  // namespace

TEST_SUITE("stepper")
{
  TEST_CASE("scalar surrogate: one step of size one half")
  {
    const ProblemSpec spec = scalar_problem(1.0, 1.0, 1.0);
    const SchemeParams params = SchemeParams::make(spec, 1, 0.5);
    const Trajectory traj = integrate(spec, params, generate_path(1, 1, 0.5, 1), assemble_forcing(spec, params));
    // (v - 1)/tau + v + tau v = 0 with tau = 1/2
    CHECK(traj.v[1][0] == doctest::Approx(4.0 / 7.0).epsilon(1e-15));
    CHECK(traj.u[1][0] == doctest::Approx(2.0 / 7.0).epsilon(1e-15));
    CHECK(traj.stats[0].newton_iters == 1);
  }

  TEST_CASE("residual vanishes at the returned step")
  {
    const ProblemSpec spec = rho_problem(15, 0.5, 0.5, 1.0);
    const SchemeParams params = SchemeParams::make(spec, 16, 1.0, 1e-11);
    const StepState state{spec.v0, spec.u0};
    const Vector noise = Vector::Constant(15, 0.01);
    const Vector forcing = Vector::Zero(15);
    const StepSolution sol = solve_step(state, forcing, noise, spec, params, spec.v0);
    const Vector r = step_residual(sol.v, state, forcing, noise, spec, params);
    CHECK(residual_norm(r, spec, params) <= 1e-11);
    CHECK(sol.stats.residual == doctest::Approx(residual_norm(r, spec, params)));
    CHECK(sol.stats.history.front() > sol.stats.history.back());
  }

  TEST_CASE("Newton-first and Picard-first reach the same step")
  {
    const ProblemSpec spec = rho_problem(15, 0.5, 0.5, 1.0);
    SchemeParams params = SchemeParams::make(spec, 16, 1.0, 1e-11);
    const StepState state{spec.v0, spec.u0};
    const Vector zero = Vector::Zero(15);
    const Vector a = solve_step(state, zero, zero, spec, params, spec.v0).v;
    params.strategy = SolverStrategy::PicardFirst;
    const StepSolution b = solve_step(state, zero, zero, spec, params, 100.0 * Vector::Ones(15));
    CHECK(b.stats.picard_iters > 0);
    CHECK(std::sqrt(spec.h_norm_sq(a - b.v)) <= 2e-11 / (1.0 - spec.constants.lambda_a * params.tau()));
  }

  TEST_CASE("step restriction is enforced unless overridden")
  {
    const ProblemSpec spec = rho_problem(7, 0.5, 0.5, 1.0);
    // lambda = pi^2 / 3, so N = 3 on T = 1 violates lambda * tau < 1
    CHECK_THROWS_WITH_AS(SchemeParams::make(spec, 3, 1.0), doctest::Contains("lambda*tau"), std::invalid_argument);
    CHECK_NOTHROW(SchemeParams::make(spec, 4, 1.0));
    CHECK_NOTHROW(SchemeParams::make(spec, 3, 1.0, 1e-10, 200, 1.0, true));
    CHECK_THROWS_AS(SchemeParams::make(spec, 0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(SchemeParams::make(spec, 4, 1.0, 1e-10, 200, 1.5), std::invalid_argument);
  }

  TEST_CASE("a starved solver reports the failing step")
  {
    const ProblemSpec spec = rho_problem(15, 0.5, 0.5, 1.0);
    const SchemeParams params = SchemeParams::make(spec, 2, 1000.0, 1e-14, 1, 1.0, true);
    const WienerPath path = generate_path(2, 4, 1000.0, 5);
    try {
      (void)integrate(spec, params, path, assemble_forcing(spec, params));
      FAIL("expected NonConvergence");
    } catch (const NonConvergence& e) {
      CHECK(e.step() == 1);
      CHECK_FALSE(e.history().empty());
      CHECK(std::string(e.what()).find("step 1") != std::string::npos);
    }
  }

  TEST_CASE("displacement is the running sum of velocities")
  {
    const ProblemSpec spec = rho_problem(15, 0.5, 0.5, 1.0);
    const SchemeParams params = SchemeParams::make(spec, 32, 1.0);
    const Trajectory traj = integrate(spec, params, generate_path(32, 6, 1.0, 2), assemble_forcing(spec, params));
    const auto u = displacement_by_summation(traj, params.tau());
    for (std::size_t n = 0; n < u.size(); ++n) {
      CHECK((u[n] - traj.u[n]).norm() < 1e-12);
    }
  }

  TEST_CASE("integrate validates its inputs")
  {
    const ProblemSpec spec = rho_problem(7, 0.5, 0.5, 1.0);
    const SchemeParams params = SchemeParams::make(spec, 8, 1.0);
    const ForcingGrid forcing = assemble_forcing(spec, params);
    CHECK_THROWS_AS(integrate(spec, params, generate_path(4, 2, 1.0, 1), forcing), std::invalid_argument);
    CHECK_THROWS_AS(integrate(spec, params, generate_path(8, 2, 2.0, 1), forcing), std::invalid_argument);
    CHECK_THROWS_AS(integrate(spec, params, generate_path(8, 9, 1.0, 1), forcing), std::invalid_argument);
  }

  TEST_CASE("forcing is averaged exactly over each cell")
  {
    const Mesh1D mesh(7);
    const Forcing f = Forcing::separable(mesh, {{PolynomialInTime{{0.0, 2.0}}, ConstantInSpace{1.0}}});
    const ProblemSpec spec =
        make_problem(mesh.matrices(), std::make_shared<const Mesh1D>(mesh), std::make_shared<RhoDamping>(mesh),
                     ElasticOperator(mesh.stiffness(), 1.0), std::make_shared<ZeroNoise>(mesh.mass(), 7), f,
                     Vector::Zero(7), Vector::Zero(7));
    const SchemeParams params = SchemeParams::make(spec, 4, 1.0);
    const ForcingGrid grid = assemble_forcing(spec, params);
    // average of 2t over [0.25, 0.5] is 0.75; <1, phi_i> = h
    CHECK(grid.at(2)[3] == doctest::Approx(0.75 * mesh.h()));
    CHECK(time_average(CosineInTime{2.0, std::numbers::pi, 0.0}, 0.0, 1.0) == doctest::Approx(0.0));
    CHECK(time_average(PolynomialInTime{{1.0, 0.0, 3.0}}, 0.0, 1.0) == doctest::Approx(2.0));
    // <sin(pi x), phi_i> = sin(pi x_i) 2 (1 - cos(pi h)) / (pi^2 h)
    const Vector load = load_vector(mesh, SineInSpace{1.0, 1});
    const double h = mesh.h();
    const double pi = std::numbers::pi;
    CHECK(load[2] == doctest::Approx(std::sin(pi * 3 * h) * 2.0 * (1.0 - std::cos(pi * h)) / (pi * pi * h)));
  }
}
