#include "stochwave/operators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace stochwave {

double rho(double z)
{
  const double a = std::abs(z);
  if (a == 0.0) {
    return 0.0;
  }
  if (a < 1.0) {
    return z / std::sqrt(a);
  }
  return z;
}

double rho_derivative(double z)
{
  const double a = std::abs(z);
  if (a <= 1.0) {
    constexpr double floor = 1.0 / (4.0 * kRhoDerivativeCap * kRhoDerivativeCap);
    return 0.5 / std::sqrt(std::max(a, floor));
  }
  return 1.0;
}

double rho_potential(double z)
{
  const double a = std::abs(z);
  if (a <= 1.0) {
    return (2.0 / 3.0) * a * std::sqrt(a);
  }
  return 0.5 * a * a + 1.0 / 6.0;
}

// ---------------------------------------------------------------------------

RhoDamping::RhoDamping(const Mesh1D& mesh) : m_(mesh.dim()), h_(mesh.h()) {}

Vector RhoDamping::cell_gradients(const Vector& v) const
{
  if (v.size() != m_) {
    throw std::invalid_argument("RhoDamping: dimension mismatch");
  }
  Vector g(m_ + 1);
  double left = 0.0;
  for (int k = 0; k < m_; ++k) {
    g[k] = (v[k] - left) / h_;
    left = v[k];
  }
  g[m_] = -left / h_;
  return g;
}

Vector RhoDamping::apply(const Vector& v) const
{
  const Vector g = cell_gradients(v);
  // phi_i has slope +1/h on cell i and -1/h on cell i+1
  Vector out(m_);
  for (int i = 0; i < m_; ++i) {
    out[i] = rho(g[i]) - rho(g[i + 1]);
  }
  return out;
}

SymTridiagonal RhoDamping::cell_weighted_stiffness(const Vector& w) const
{
  SymTridiagonal a(m_);
  for (int i = 0; i < m_; ++i) {
    a.diag()[i] = (w[i] + w[i + 1]) / h_;
    if (i + 1 < m_) {
      a.off()[i] = -w[i + 1] / h_;
    }
  }
  return a;
}

SymTridiagonal RhoDamping::jacobian(const Vector& v) const
{
  const Vector g = cell_gradients(v);
  return cell_weighted_stiffness(g.unaryExpr([](double z) { return rho_derivative(z); }));
}

SymTridiagonal RhoDamping::secant(const Vector& v) const
{
  const Vector g = cell_gradients(v);
  return cell_weighted_stiffness(g.unaryExpr([](double z) {
    const double a = std::abs(z);
    if (a >= 1.0) {
      return 1.0;
    }
    return std::min(1.0 / std::sqrt(a), 2.0 * kRhoDerivativeCap);
  }));
}

DampingConstants RhoDamping::constants() const
{
  // rho(z) z >= z^2 on |z| <= 1 and = z^2 outside, so <Aw,w> >= ||w||^2;
  // |rho(z)| <= 1 + |z| gives the growth bound with c_A = 1 on a unit domain.
  return {.mu_a = 1.0, .lambda_1 = 0.0, .lambda_2 = 0.0, .c_a = 1.0};
}

double RhoDamping::potential(const Vector& v) const
{
  const Vector g = cell_gradients(v);
  double sum = 0.0;
  for (Eigen::Index c = 0; c < g.size(); ++c) {
    sum += h_ * rho_potential(g[c]);
  }
  return sum;
}

// ---------------------------------------------------------------------------

LinearDamping::LinearDamping(SymTridiagonal matrix, double mu_a) : matrix_(std::move(matrix)), mu_a_(mu_a)
{
  if (!(mu_a > 0.0)) {
    throw std::invalid_argument("LinearDamping: mu must be positive");
  }
}

LinearDamping LinearDamping::laplacian(const Mesh1D& mesh, double mu)
{
  return LinearDamping(mu * SymTridiagonal(mesh.stiffness()), mu);
}

DampingConstants LinearDamping::constants() const
{
  return {.mu_a = mu_a_, .lambda_1 = 0.0, .lambda_2 = 0.0, .c_a = mu_a_};
}

// ---------------------------------------------------------------------------

ElasticOperator::ElasticOperator(const SymTridiagonal& stiffness, double coefficient)
    : coefficient_(coefficient), matrix_(coefficient * SymTridiagonal(stiffness))
{
  if (!(coefficient > 0.0)) {
    throw std::invalid_argument("ElasticOperator: coefficient b must be positive");
  }
}

// ---------------------------------------------------------------------------

void NoiseOperator::check_range(int r) const
{
  if (r < 0 || r > modes()) {
    throw std::out_of_range("noise truncation r = " + std::to_string(r) + " exceeds available modes " +
                            std::to_string(modes()));
  }
}

std::vector<Vector> NoiseOperator::apply(const Vector& u, const Vector& v, int r) const
{
  check_range(r);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(r));
  for (int j = 1; j <= r; ++j) {
    out.push_back(mode(u, v, j));
  }
  return out;
}

Vector NoiseOperator::contract(const Vector& u, const Vector& v, std::span<const double> increments) const
{
  const int r = static_cast<int>(increments.size());
  check_range(r);
  Vector out = Vector::Zero(mass_.size());
  for (int j = 1; j <= r; ++j) {
    const double dw = increments[static_cast<std::size_t>(j - 1)];
    if (dw != 0.0) {
      out += dw * mode(u, v, j);
    }
  }
  return out;
}

double NoiseOperator::norm_sq(const Vector& u, const Vector& v, int r) const
{
  check_range(r);
  double sum = 0.0;
  for (int j = 1; j <= r; ++j) {
    sum += mass_.form(mode(u, v, j));
  }
  return sum;
}

double NoiseOperator::distance_sq(const Vector& u, const Vector& w, const Vector& v, const Vector& z, int r) const
{
  check_range(r);
  double sum = 0.0;
  for (int j = 1; j <= r; ++j) {
    sum += mass_.form(mode(u, w, j) - mode(v, z, j));
  }
  return sum;
}

Vector ZeroNoise::mode(const Vector&, const Vector&, int j) const
{
  check_range(j);
  return Vector::Zero(mass_.size());
}

SpectralNoise::SpectralNoise(const Mesh1D& mesh, Parameters params, double elastic_coefficient)
    : NoiseOperator(mesh.mass()), params_(params)
{
  if (!(params.s > 0.5)) {
    throw std::invalid_argument("SpectralNoise: decay exponent s must exceed 1/2");
  }
  if (!(elastic_coefficient > 0.0)) {
    throw std::invalid_argument("SpectralNoise: elastic coefficient must be positive");
  }
  const int m = mesh.dim();
  const double h = mesh.h();
  for (int j = 1; j <= m; ++j) {
    const double w = j * std::numbers::pi;
    Vector e = mesh.interpolate([w](double x) { return std::sin(w * x); });
    e /= std::sqrt(mesh.mass().form(e));
    mass_eigvecs_.push_back(mesh.mass() * e);
    eigvecs_.push_back(std::move(e));
    const double c = std::cos(w * h);
    eigvals_.push_back(6.0 / (h * h) * (1.0 - c) / (2.0 + c));
  }
  // |u|^2 <= |u|_B^2 / (b * lambda_1^h) and lambda_1^h >= pi^2; weights are <= 1.
  const double cross = (params.alpha != 0.0 && params.beta != 0.0) ? 2.0 : 1.0;
  constants_.lambda_3 = cross * params.alpha * params.alpha / (elastic_coefficient * std::numbers::pi * std::numbers::pi);
  constants_.lambda_4 = cross * params.beta * params.beta;
  constants_.kappa = params.gamma * params.gamma * std::riemann_zeta(2.0 * params.s);
}

double SpectralNoise::weight(int j) const
{
  return std::pow(static_cast<double>(j), -params_.s);
}

Vector SpectralNoise::mode(const Vector& u, const Vector& v, int j) const
{
  if (j < 1 || j > modes()) {
    throw std::out_of_range("SpectralNoise: mode index out of range");
  }
  const auto idx = static_cast<std::size_t>(j - 1);
  const double coefficient =
      weight(j) * (params_.alpha * u.dot(mass_eigvecs_[idx]) + params_.beta * v.dot(mass_eigvecs_[idx]) + params_.gamma);
  return coefficient * eigvecs_[idx];
}

// ---------------------------------------------------------------------------

AssumptionConstants derive_constants(const DampingOperator& damping, const ElasticOperator& elastic,
                                     const NoiseOperator& noise)
{
  const DampingConstants a = damping.constants();
  const NoiseConstants c = noise.constants();
  AssumptionConstants k;
  k.mu_a = a.mu_a;
  k.c_a = a.c_a;
  k.lambda_1 = a.lambda_1;
  k.lambda_2 = a.lambda_2;
  k.lambda_3 = c.lambda_3;
  k.lambda_4 = c.lambda_4;
  k.lambda_a = std::max(a.lambda_1 + 0.5 * c.lambda_4, a.lambda_2 + c.lambda_4);
  k.lambda_b = c.lambda_3;
  k.kappa = c.kappa;
  k.mu_b = elastic.mu_b();
  k.c_b = elastic.c_b();
  k.lambda = 2.0 * std::max({k.lambda_a, k.lambda_b, k.kappa});
  return k;
}

double ProblemSpec::dual_norm_sq(const Vector& g) const
{
  const TridiagonalLdlt ldlt(fem.stiffness);
  return g.dot(ldlt.solve(g));
}

ProblemSpec make_problem(FemMatrices fem, std::shared_ptr<const Mesh1D> mesh,
                         std::shared_ptr<const DampingOperator> damping, ElasticOperator elastic,
                         std::shared_ptr<const NoiseOperator> noise, Forcing forcing, Vector u0, Vector v0)
{
  const Eigen::Index n = fem.mass.size();
  if (!damping || !noise) {
    throw std::invalid_argument("make_problem: damping and noise operators are required");
  }
  if (fem.stiffness.size() != n || damping->dim() != n || elastic.matrix().size() != n ||
      noise->mass().size() != n || u0.size() != n || v0.size() != n) {
    throw std::invalid_argument("make_problem: dimension mismatch between components");
  }
  ProblemSpec spec;
  spec.constants = derive_constants(*damping, elastic, *noise);
  spec.fem = std::move(fem);
  spec.mesh = std::move(mesh);
  spec.damping = std::move(damping);
  spec.elastic = std::move(elastic);
  spec.noise = std::move(noise);
  spec.forcing = std::move(forcing);
  spec.u0 = std::move(u0);
  spec.v0 = std::move(v0);
  return spec;
}

// ---------------------------------------------------------------------------

bool AuditReport::ok() const
{
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.violations == 0; });
}

const InequalityAudit& AuditReport::at(std::string_view name) const
{
  for (const auto& e : entries) {
    if (e.name == name) {
      return e;
    }
  }
  throw std::out_of_range("AuditReport: no inequality named " + std::string(name));
}

namespace {

class TupleSampler {
public:
  TupleSampler(const ProblemSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {}

  Vector sample()
  {
    std::uniform_real_distribution<double> exponent(-3.0, 2.0);
    const double scale = std::pow(10.0, exponent(rng_));
    return scale * shape();
  }

  Vector near(const Vector& w)
  {
    std::uniform_real_distribution<double> exponent(-4.0, 0.0);
    const double norm = std::max(w.norm(), 1e-12);
    Vector d = shape();
    d *= norm * std::pow(10.0, exponent(rng_)) / std::max(d.norm(), 1e-300);
    return w + d;
  }

  bool coin() { return std::bernoulli_distribution(0.5)(rng_); }

private:
  Vector shape()
  {
    const Eigen::Index n = spec_.dim();
    std::normal_distribution<double> gauss;
    if (!spec_.mesh) {
      Vector x(n);
      for (auto& xi : x) {
        xi = gauss(rng_);
      }
      return x;
    }
    const Mesh1D& mesh = *spec_.mesh;
    std::uniform_int_distribution<int> kind(0, 3);
    switch (kind(rng_)) {
    case 0: {  // rough
      Vector x(n);
      for (auto& xi : x) {
        xi = gauss(rng_);
      }
      return x;
    }
    case 1: {  // random walk pinned at both ends
      Vector x(n);
      double acc = 0.0;
      for (auto& xi : x) {
        acc += gauss(rng_);
        xi = acc;
      }
      const double end = acc + gauss(rng_);
      for (Eigen::Index i = 0; i < n; ++i) {
        x[i] -= end * mesh.nodes()[static_cast<std::size_t>(i)];
      }
      return x;
    }
    case 2: {  // one low eigenmode
      const int j = std::uniform_int_distribution<int>(1, std::min(4, mesh.dim()))(rng_);
      const double sign = coin() ? 1.0 : -1.0;
      return sign * mesh.interpolate([j](double x) { return std::sin(j * std::numbers::pi * x); });
    }
    default: {  // smooth combination
      Vector x = Vector::Zero(n);
      const int modes = std::min(8, mesh.dim());
      for (int j = 1; j <= modes; ++j) {
        const double c = gauss(rng_) / (j * j);
        x += c * mesh.interpolate([j](double s) { return std::sin(j * std::numbers::pi * s); });
      }
      return x;
    }
    }
  }

  const ProblemSpec& spec_;
  std::mt19937_64 rng_;
};

struct Tracker {
  InequalityAudit audit;

  void record(double lhs, double rhs, const Vector& u, const Vector& v, const Vector& w, const Vector& z)
  {
    const double rel = (lhs - rhs) / (std::abs(lhs) + std::abs(rhs) + 1e-300);
    ++audit.samples;
    if (rel < -kAuditTolerance) {
      ++audit.violations;
    }
    if (audit.samples == 1 || rel < audit.worst_margin) {
      audit.worst_margin = rel;
      if (rel < -kAuditTolerance) {
        audit.witness = std::vector<Vector>{u, v, w, z};
      }
    }
  }
};

}  // namespace

AuditReport check_assumptions(const ProblemSpec& spec, int samples, std::uint64_t seed)
{
  if (samples < 1) {
    throw std::invalid_argument("check_assumptions: need at least one sample");
  }
  const AssumptionConstants& k = spec.constants;
  const DampingOperator& a = *spec.damping;
  const NoiseOperator& c = *spec.noise;
  const int r = c.modes();

  std::vector<Tracker> t(13);
  const char* names[] = {"monotonicity_like",     "coercivity_like",        "mod_monotonicity",
                         "mod_coercivity",        "noise_lipschitz",        "noise_growth",
                         "noise_bound",           "noise_first_argument",   "damping_monotonicity",
                         "damping_coercivity",    "damping_growth",         "elastic_positivity",
                         "elastic_boundedness"};
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i].audit.name = names[i];
  }

  TupleSampler sampler(spec, seed);
  for (int s = 0; s < samples; ++s) {
    const Vector u = sampler.sample();
    const Vector v = sampler.coin() ? sampler.sample() : sampler.near(u);
    const Vector w = sampler.sample();
    const Vector z = sampler.coin() ? sampler.sample() : sampler.near(w);

    const Vector aw = a.apply(w);
    const Vector az = a.apply(z);
    const Vector dw = w - z;
    const Vector du = u - v;
    const double mono = (aw - az).dot(dw);
    const double aww = aw.dot(w);
    const double h_dw = spec.h_norm_sq(dw);
    const double h_w = spec.h_norm_sq(w);
    const double b_du = spec.elastic.norm_sq(du);
    const double b_u = spec.elastic.norm_sq(u);
    const double va_w = spec.va_norm_sq(w);
    const double dc = c.distance_sq(u, w, v, z, r);
    const double cw = c.norm_sq(u, w, r);
    const double dc_first = c.distance_sq(u, w, v, w, r);

    t[0].record(mono + k.lambda_a * h_dw, 0.5 * dc - k.lambda_b * b_du, u, v, w, z);
    t[1].record(aww + k.lambda_a * h_w, k.mu_a * va_w + 0.5 * cw - k.lambda_b * b_u - k.kappa, u, v, w, z);
    t[2].record(2.0 * mono + k.lambda * h_dw + k.lambda * b_du, dc, u, v, w, z);
    t[3].record(2.0 * aww + k.lambda * (h_w + b_u + 1.0), 2.0 * k.mu_a * va_w + cw, u, v, w, z);
    t[4].record(k.lambda_3 * b_du + k.lambda_4 * h_dw, dc, u, v, w, z);
    t[5].record(2.0 * (k.lambda_3 * b_u + k.lambda_4 * h_w + k.kappa), cw, u, v, w, z);
    t[6].record(2.0 * std::max({k.lambda_3, k.lambda_4, k.kappa}) * (1.0 + b_u + h_w + va_w), cw, u, v, w, z);
    t[7].record(std::sqrt(2.0 * k.lambda_b * b_du), std::sqrt(dc_first), u, v, w, z);
    t[8].record(mono + k.lambda_1 * h_dw, 0.0, u, v, w, z);
    t[9].record(aww + k.lambda_2 * h_w, k.mu_a * va_w, u, v, w, z);
    t[10].record(k.c_a * (1.0 + std::sqrt(va_w)), std::sqrt(spec.dual_norm_sq(aw)), u, v, w, z);
    t[11].record(spec.elastic.norm_sq(w), k.mu_b * va_w, u, v, w, z);
    t[12].record(k.c_b * std::sqrt(va_w), std::sqrt(spec.dual_norm_sq(spec.elastic.apply(w))), u, v, w, z);
  }

  AuditReport report;
  for (auto& tr : t) {
    report.entries.push_back(std::move(tr.audit));
  }
  return report;
}

}  // namespace stochwave
