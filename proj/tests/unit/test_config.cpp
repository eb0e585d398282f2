#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "stochwave/config.hpp"

using namespace stochwave;

TEST_SUITE("config")
{
  TEST_CASE("minimal config gets defaults and derived constants")
  {
    const RunConfig c = parse_and_validate("experiment:\n  kind: single\n");
    CHECK(c.problem.model == "fem");
    CHECK(c.problem.damping == "rho");
    CHECK(c.discretization.steps == 64);
    CHECK(c.discretization.m == 31);
    CHECK(c.solver.tol == 1e-10);
    CHECK(c.derived.mu_a == 1.0);
    CHECK(c.derived.mu_b == 1.0);
    CHECK(c.derived.lambda == 0.0);
    CHECK(parse_and_validate("") == c);
  }

  TEST_CASE("derived constants are echoed")
  {
    const RunConfig c = parse_and_validate(R"(
problem:
  noise: {kind: spectral, alpha: 0.5, beta: 0.5, gamma: 1.0, s: 1.0}
discretization: {N: 16, m: 15, r: 4, T: 1.0}
)");
    CHECK(c.derived.lambda == doctest::Approx(std::numbers::pi * std::numbers::pi / 3.0));
    CHECK(c.derived.lambda_tau == doctest::Approx(std::numbers::pi * std::numbers::pi / 48.0));
    CHECK(c.derived.lambda_b == doctest::Approx(0.5 / (std::numbers::pi * std::numbers::pi)));
    const std::string echo = to_yaml(c);
    CHECK(echo.find("lambda: 3.2898681336964") != std::string::npos);
  }

  TEST_CASE("unknown keys are rejected with their location")
  {
    try {
      (void)parse_config("problem:\n  damping: rho\n  foo: 1\n");
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("problem.foo") != std::string::npos);
      CHECK(e.line() == 3);
    }
    CHECK_THROWS_WITH_AS(parse_config("foo: 1\n"), doctest::Contains("'foo'"), ConfigError);
    CHECK_THROWS_AS(parse_config("solver: {tolerance: 1e-8}\n"), ConfigError);
  }

  TEST_CASE("malformed values and documents")
  {
    CHECK_THROWS_WITH_AS(parse_config("discretization: {N: ten}\n"), doctest::Contains("discretization.N"),
                         ConfigError);
    CHECK_THROWS_AS(parse_config("problem: [1, 2]\n"), ConfigError);
    try {
      (void)parse_config("problem:\n  damping: [rho\n");
      FAIL("expected a parse error");
    } catch (const ConfigError& e) {
      CHECK(e.line() > 0);
    }
  }

  TEST_CASE("step restriction is a config error")
  {
    const std::string text = R"(
problem:
  noise: {kind: spectral, alpha: 0.5, beta: 0.5, gamma: 1.0, s: 1.0}
discretization: {N: 2, m: 15, r: 4, T: 1.0}
)";
    CHECK_THROWS_WITH_AS(parse_and_validate(text), doctest::Contains("lambda*tau = 1.64"), ConfigError);
    RunConfig c = parse_config(text);
    c.solver.override_gate = true;
    CHECK_NOTHROW(validate(c));
    CHECK(c.derived.lambda_tau > 1.0);
  }

  TEST_CASE("convergence studies gate every level")
  {
    const std::string text = R"(
problem:
  noise: {kind: spectral, alpha: 0.5, beta: 0.5, gamma: 1.0, s: 1.0}
discretization: {N: 64, m: 31, r: 2, T: 1.0}
experiment: {kind: convergence, levels: [[2, 3], [4, 7]], reference: [8, 15]}
)";
    CHECK_THROWS_WITH_AS(parse_and_validate(text), doctest::Contains("N = 2"), ConfigError);
  }

  TEST_CASE("invariants")
  {
    CHECK_THROWS_WITH_AS(parse_and_validate("discretization: {T: 0}\n"), doctest::Contains("T must be > 0"),
                         ConfigError);
    CHECK_THROWS_AS(parse_and_validate("discretization: {N: 0}\n"), ConfigError);
    CHECK_THROWS_AS(parse_and_validate("discretization: {m: 0}\n"), ConfigError);
    CHECK_THROWS_AS(parse_and_validate("discretization: {r: 0}\n"), ConfigError);
    CHECK_THROWS_AS(parse_and_validate("experiment: {paths: 0}\n"), ConfigError);
    CHECK_THROWS_AS(parse_and_validate("problem: {damping: cubic}\n"), ConfigError);
    CHECK_THROWS_AS(parse_and_validate("problem: {noise: {kind: spectral, s: 0.5}}\n"), ConfigError);
    CHECK_THROWS_AS(parse_and_validate("problem: {forcing: {kind: manufactured}}\n"), ConfigError);
    CHECK_THROWS_AS(parse_and_validate("problem: {noise: {kind: spectral}}\ndiscretization: {m: 3, r: 4}\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_and_validate("experiment: {kind: convergence}\n"), ConfigError);
    CHECK_THROWS_AS(parse_and_validate("experiment: {kind: convergence, levels: [[8, 7], [16, 15]], "
                                       "reference: [48, 47]}\n"),
                    ConfigError);
  }

  TEST_CASE("echo re-parses to the same config")
  {
    const std::vector<std::string> configs{
        "",
        R"(
problem:
  model: fem
  damping: linear
  mu: 0.3
  b: 2.0
  noise: {kind: spectral, alpha: 0.1, beta: 0.2, gamma: 0.7, s: 1.25}
  u0: {kind: sine, amplitude: 0.1, mode: 3}
  v0: {kind: sine, amplitude: 1e-3, mode: 1}
  forcing: {kind: constant, amplitude: 0.123456789012345678}
discretization: {N: 32, m: 15, r: 3, T: 0.7}
solver: {tol: 3e-9, max_iters: 77, relaxation: 0.9, strategy: picard}
experiment: {kind: convergence, paths: 17, base_seed: 18446744073709551615, levels: [[8, 3], [16, 7]], reference: [64, 31]}
output: {directory: "some dir/x", trajectories: true}
)",
        R"(
problem:
  model: scalar
  damping: linear
  scalar: {u0: 0.25, v0: -1.5}
discretization: {N: 1, r: 1, T: 0.5}
experiment: {kind: energy}
)",
        R"(
problem:
  damping: linear
  u0: {kind: exact}
  v0: {kind: exact}
  forcing: {kind: manufactured, amplitude: 2.0}
experiment: {kind: convergence, levels: [[16, 15], [32, 31]]}
)"};
    for (const auto& text : configs) {
      const RunConfig c = parse_and_validate(text);
      const RunConfig again = parse_and_validate(to_yaml(c));
      CHECK(again == c);
      CHECK(to_yaml(again) == to_yaml(c));
    }
  }

  TEST_CASE("problem builders")
  {
    const RunConfig c = parse_and_validate(R"(
problem:
  damping: linear
  mu: 2.0
  u0: {kind: exact}
  v0: {kind: exact}
  forcing: {kind: manufactured}
discretization: {N: 16, m: 15}
)");
    const ProblemSpec spec = build_problem(c);
    CHECK(spec.dim() == 15);
    CHECK(spec.damping->name() == "linear");
    CHECK(spec.constants.mu_a == 2.0);
    CHECK(spec.u0.norm() == 0.0);
    const Mesh1D mesh(15);
    CHECK(spec.v0[7] == doctest::Approx(std::numbers::pi * std::sin(std::numbers::pi * mesh.nodes()[7])));
    const ProblemFamily family = build_family(c);
    REQUIRE(family.exact_v);
    CHECK((family.exact_v(mesh, 0.0) - spec.v0).norm() < 1e-14);
    CHECK_FALSE(study_reference(c).has_value());

    const RunConfig s = parse_and_validate("problem: {model: scalar, damping: linear, mu: 3.0, b: 2.0}\n"
                                           "discretization: {N: 1, T: 0.5, r: 1}\n");
    const ProblemSpec scalar = build_problem(s);
    CHECK(scalar.dim() == 1);
    CHECK(scalar.v0[0] == 1.0);
    CHECK(scalar.damping->apply(Vector::Ones(1))[0] == 3.0);
    CHECK(scalar.elastic.coefficient() == 2.0);
  }

  TEST_CASE("default reference doubles the finest level")
  {
    const RunConfig c = parse_and_validate("experiment: {kind: convergence, levels: [[16, 15], [32, 31]]}\n");
    const auto ref = study_reference(c);
    REQUIRE(ref.has_value());
    CHECK(ref->steps == 64);
    CHECK(ref->m == 63);
  }

  TEST_CASE("shipped example configs validate")
  {
    int count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(STOCHWAVE_CONFIG_DIR)) {
      std::ifstream in(entry.path());
      std::stringstream text;
      text << in.rdbuf();
      RunConfig c = parse_config(text.str());
      c.solver.override_gate = true;
      CHECK_NOTHROW(validate(c));
      ++count;
    }
    CHECK(count >= 5);
  }
}
