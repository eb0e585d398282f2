#include "stochwave/forcing.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stochwave {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

double time_average(const TimeProfile& g, double t0, double t1)
{
  if (!(t1 > t0)) {
    throw std::invalid_argument("time_average: empty interval");
  }
  const double width = t1 - t0;
  return std::visit(Overloaded{
                        [&](const PolynomialInTime& p) {
                          // antiderivative of t^k is t^{k+1}/(k+1)
                          double integral = 0.0;
                          double pow0 = t0;
                          double pow1 = t1;
                          for (std::size_t k = 0; k < p.coeffs.size(); ++k) {
                            integral += p.coeffs[k] * (pow1 - pow0) / static_cast<double>(k + 1);
                            pow0 *= t0;
                            pow1 *= t1;
                          }
                          return integral / width;
                        },
                        [&](const CosineInTime& c) {
                          if (c.omega == 0.0) {
                            return c.amplitude * std::cos(c.phase);
                          }
                          const double integral =
                              (std::sin(c.omega * t1 + c.phase) - std::sin(c.omega * t0 + c.phase)) / c.omega;
                          return c.amplitude * integral / width;
                        },
                    },
                    g);
}

Vector load_vector(const Mesh1D& mesh, const SpaceProfile& s)
{
  const double h = mesh.h();
  return std::visit(Overloaded{
                        [&](const ConstantInSpace& c) -> Vector {
                          return Vector::Constant(mesh.dim(), c.value * h);
                        },
                        [&](const SineInSpace& sine) -> Vector {
                          // int sin(w x) phi_i dx = sin(w x_i) * 2 (1 - cos(w h)) / (w^2 h)
                          const double w = sine.mode * std::numbers::pi;
                          const double factor = 2.0 * (1.0 - std::cos(w * h)) / (w * w * h);
                          return sine.amplitude * factor *
                                 mesh.interpolate([w](double x) { return std::sin(w * x); });
                        },
                    },
                    s);
}

Forcing Forcing::zero(Eigen::Index dim)
{
  return Forcing([dim](double, double) -> Vector { return Vector::Zero(dim); });
}

Forcing Forcing::separable(const Mesh1D& mesh, std::vector<std::pair<TimeProfile, SpaceProfile>> terms)
{
  std::vector<std::pair<TimeProfile, Vector>> assembled;
  assembled.reserve(terms.size());
  for (auto& [g, s] : terms) {
    assembled.emplace_back(std::move(g), load_vector(mesh, s));
  }
  const Eigen::Index dim = mesh.dim();
  return Forcing([dim, assembled = std::move(assembled)](double t0, double t1) -> Vector {
    Vector f = Vector::Zero(dim);
    for (const auto& [g, load] : assembled) {
      f += time_average(g, t0, t1) * load;
    }
    return f;
  });
}

}  // namespace stochwave
