#include <doctest.h>

#include <random>

#include "stochwave/prolongation.hpp"

using namespace stochwave;

namespace {

std::vector<Vector> numbered_levels(int steps)
{
  std::vector<Vector> levels;
  for (int n = 0; n <= steps; ++n) {
    levels.push_back(Vector::Constant(1, n));
  }
  return levels;
}

}  // namespace

TEST_SUITE("prolongation")
{
  TEST_CASE("right prolongation")
  {
    const auto levels = numbered_levels(4);
    const auto x = right_prolongation(levels, 2.0);
    CHECK(x.tau() == doctest::Approx(0.5));
    CHECK(x.evaluate(0.0)[0] == 1.0);
    CHECK(x.evaluate(0.2)[0] == 1.0);
    CHECK(x.evaluate(0.5)[0] == 1.0);
    CHECK(x.evaluate(0.51)[0] == 2.0);
    CHECK(x.evaluate(2.0)[0] == 4.0);
    CHECK_THROWS_AS((void)x.evaluate(2.1), std::out_of_range);
    CHECK_THROWS_AS((void)x.evaluate(-0.1), std::out_of_range);
  }

  TEST_CASE("left prolongation with a first-cell value")
  {
    const auto levels = numbered_levels(4);
    const auto x = left_prolongation(levels, 2.0, Vector::Constant(1, -7.0));
    CHECK(x.evaluate(0.0)[0] == -7.0);
    CHECK(x.evaluate(0.3)[0] == -7.0);
    CHECK(x.evaluate(0.5)[0] == 1.0);
    CHECK(x.evaluate(0.7)[0] == 1.0);
    CHECK(x.evaluate(1.9)[0] == 3.0);
    CHECK(x.evaluate(2.0)[0] == 4.0);
  }

  TEST_CASE("theta plus maps to right cell ends")
  {
    CHECK(theta_plus(0.0, 0.25, 1.0) == 0.0);
    CHECK(theta_plus(0.1, 0.25, 1.0) == doctest::Approx(0.25));
    CHECK(theta_plus(0.25, 0.25, 1.0) == doctest::Approx(0.25));
    CHECK(theta_plus(0.26, 0.25, 1.0) == doctest::Approx(0.5));
    CHECK(theta_plus(1.0, 0.25, 1.0) == doctest::Approx(1.0));
  }

  TEST_CASE("Steklov average shifts one cell forward and vanishes on the last cell")
  {
    const auto levels = numbered_levels(4);
    const auto y = right_prolongation(levels, 1.0);
    const auto s = steklov_average(y);
    CHECK(s.on_cell(1)[0] == 2.0);
    CHECK(s.on_cell(3)[0] == 4.0);
    CHECK(s.on_cell(4)[0] == 0.0);
    // direct quadrature of (1/tau) int_{theta+(t)}^{theta+(t)+tau} y on a fine grid
    const double tau = 0.25;
    for (double t : {0.05, 0.3, 0.6, 0.7}) {
      const double start = theta_plus(t, tau, 1.0);
      double avg = 0.0;
      const int sub = 1000;
      for (int k = 0; k < sub; ++k) {
        avg += y.evaluate(start + (k + 0.5) * tau / sub)[0] / sub;
      }
      CHECK(s.evaluate(t)[0] == doctest::Approx(avg));
    }
  }

  TEST_CASE("Steklov identity on random pairs")
  {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> g;
    const Pairing dot = [](const Vector& a, const Vector& b) { return a.dot(b); };
    for (int steps : {1, 2, 8, 64}) {
      for (int trial = 0; trial < 10; ++trial) {
        std::vector<Vector> y(static_cast<std::size_t>(steps) + 1);
        std::vector<Vector> x(static_cast<std::size_t>(steps) + 1);
        for (auto& v : y) {
          v = Vector::NullaryExpr(3, [&] { return g(rng); });
        }
        for (auto& v : x) {
          v = Vector::NullaryExpr(3, [&] { return g(rng); });
        }
        const SteklovCheck check = verify_steklov_identity(right_prolongation(y, 1.5), x, dot);
        CHECK(check.defect <= 1e-12 * (1.0 + std::abs(check.lhs)));
        // independent cell sum: sum_{n=2}^{N} tau <y^n, x^{n-1}>
        double expected = 0.0;
        for (int n = 2; n <= steps; ++n) {
          expected += 1.5 / steps * y[static_cast<std::size_t>(n)].dot(x[static_cast<std::size_t>(n - 1)]);
        }
        CHECK(check.rhs == doctest::Approx(expected));
      }
    }
  }

  TEST_CASE("cellwise integrals")
  {
    const auto levels = numbered_levels(2);
    const auto a = right_prolongation(levels, 1.0);
    const auto b = left_prolongation(levels, 1.0, Vector::Zero(1));
    const Pairing dot = [](const Vector& p, const Vector& q) { return p.dot(q); };
    // cells: (1 * 0 + 2 * 1) / 2
    CHECK(integrate_cellwise(a, b, dot) == doctest::Approx(1.0));
    CHECK_THROWS_AS(integrate_cellwise(a, right_prolongation(numbered_levels(3), 1.0), dot), std::invalid_argument);
  }

  TEST_CASE("owning processes survive their source")
  {
    const auto p = PiecewiseConstantProcess::owning(numbered_levels(3), 3.0, Convention::Right);
    CHECK(p.evaluate(2.5)[0] == 3.0);
    CHECK_THROWS_AS(PiecewiseConstantProcess::owning({Vector::Zero(1)}, 1.0, Convention::Right), std::invalid_argument);
  }
}
