#pragma once

#include <functional>
#include <variant>
#include <vector>

#include "stochwave/mesh.hpp"
#include "stochwave/tridiagonal.hpp"

namespace stochwave {

/// g(t) = sum_k coeffs[k] t^k
struct PolynomialInTime {
  std::vector<double> coeffs;
};

/// g(t) = amplitude * cos(omega t + phase)
struct CosineInTime {
  double amplitude = 1.0;
  double omega = 1.0;
  double phase = 0.0;
};

using TimeProfile = std::variant<PolynomialInTime, CosineInTime>;

/// s(x) = value
struct ConstantInSpace {
  double value = 1.0;
};

/// s(x) = amplitude * sin(k pi x)
struct SineInSpace {
  double amplitude = 1.0;
  int mode = 1;
};

using SpaceProfile = std::variant<ConstantInSpace, SineInSpace>;

/// (1 / (t1 - t0)) int_{t0}^{t1} g(t) dt, in closed form.
double time_average(const TimeProfile& g, double t0, double t1);

/// <s, phi_i> for every interior hat function, in closed form.
Vector load_vector(const Mesh1D& mesh, const SpaceProfile& s);

/// Deterministic forcing f(t) in V_A^*, queried only through its exact time
/// averages over grid cells.
class Forcing {
public:
  using Averager = std::function<Vector(double t0, double t1)>;

  Forcing() = default;
  explicit Forcing(Averager averager) : averager_(std::move(averager)) {}

  static Forcing zero(Eigen::Index dim);
  /// f(t, x) = sum of g_k(t) s_k(x) terms.
  static Forcing separable(const Mesh1D& mesh, std::vector<std::pair<TimeProfile, SpaceProfile>> terms);

  /// Dual coefficients of (1/(t1 - t0)) int_{t0}^{t1} f(t) dt.
  [[nodiscard]] Vector average(double t0, double t1) const { return averager_(t0, t1); }

private:
  Averager averager_;
};

}  // namespace stochwave
