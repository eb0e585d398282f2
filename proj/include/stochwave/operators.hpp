#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stochwave/forcing.hpp"
#include "stochwave/mesh.hpp"
#include "stochwave/tridiagonal.hpp"

namespace stochwave {

/// rho(z) = |z|^{-1/2} z on 0 < |z| < 1 and z elsewhere; continuous,
/// odd and monotone.
double rho(double z);

/// Generalized derivative of rho. At |z| = 1 the inside branch (1/2) is
/// used. Near z = 0 the derivative |z|^{-1/2}/2 is capped at
/// `kRhoDerivativeCap` so Newton matrices stay finite.
double rho_derivative(double z);

/// Convex potential with psi' = rho.
double rho_potential(double z);

inline constexpr double kRhoDerivativeCap = 1e8;

/// Constants for a damping operator A, measured against
/// ||w||_{V_A}^2 = w^T stiffness w and |w|^2 = w^T mass w:
///   <Aw - Az, w - z> + lambda_1 |w - z|^2 >= 0
///   <Aw, w> + lambda_2 |w|^2 >= mu_a ||w||^2
///   ||Aw||_* <= c_a (1 + ||w||)
struct DampingConstants {
  double mu_a = 0.0;
  double lambda_1 = 0.0;
  double lambda_2 = 0.0;
  double c_a = 0.0;
};

/// Nonlinear damping A acting on the velocity, returned as dual
/// coefficients <Av, phi_i>.
class DampingOperator {
public:
  virtual ~DampingOperator() = default;

  [[nodiscard]] virtual std::string_view name() const = 0;
  [[nodiscard]] virtual Eigen::Index dim() const = 0;
  [[nodiscard]] virtual Vector apply(const Vector& v) const = 0;
  /// Generalized (Clarke) Jacobian at v.
  [[nodiscard]] virtual SymTridiagonal jacobian(const Vector& v) const = 0;
  /// Matrix S(v) with S(v) v = A(v); the lagged-coefficient operator used by
  /// the Picard iteration.
  [[nodiscard]] virtual SymTridiagonal secant(const Vector& v) const = 0;
  [[nodiscard]] virtual DampingConstants constants() const = 0;

  [[nodiscard]] Vector jacobian_apply(const Vector& v, const Vector& direction) const
  {
    return jacobian(v) * direction;
  }
};

/// <Av, w> = int rho(v') w' dx on a P1 mesh, integrated exactly.
class RhoDamping final : public DampingOperator {
public:
  explicit RhoDamping(const Mesh1D& mesh);

  [[nodiscard]] std::string_view name() const override { return "rho"; }
  [[nodiscard]] Eigen::Index dim() const override { return m_; }
  [[nodiscard]] Vector apply(const Vector& v) const override;
  [[nodiscard]] SymTridiagonal jacobian(const Vector& v) const override;
  [[nodiscard]] SymTridiagonal secant(const Vector& v) const override;
  [[nodiscard]] DampingConstants constants() const override;

  /// sum over cells of h * psi(v'), the potential whose gradient is apply().
  [[nodiscard]] double potential(const Vector& v) const;

private:
  SymTridiagonal cell_weighted_stiffness(const Vector& cell_weights) const;
  [[nodiscard]] Vector cell_gradients(const Vector& v) const;

  int m_;
  double h_;
};

/// A = matrix, with matrix = mu * stiffness for the -mu Laplacian instance.
class LinearDamping final : public DampingOperator {
public:
  LinearDamping(SymTridiagonal matrix, double mu_a);
  static LinearDamping laplacian(const Mesh1D& mesh, double mu);

  [[nodiscard]] std::string_view name() const override { return "linear"; }
  [[nodiscard]] Eigen::Index dim() const override { return matrix_.size(); }
  [[nodiscard]] Vector apply(const Vector& v) const override { return matrix_ * v; }
  [[nodiscard]] SymTridiagonal jacobian(const Vector&) const override { return matrix_; }
  [[nodiscard]] SymTridiagonal secant(const Vector&) const override { return matrix_; }
  [[nodiscard]] DampingConstants constants() const override;

private:
  SymTridiagonal matrix_;
  double mu_a_;
};

/// B = -b Laplacian, i.e. b * stiffness. mu_B = c_B = b in the H1_0 seminorm.
class ElasticOperator {
public:
  ElasticOperator() = default;
  ElasticOperator(const SymTridiagonal& stiffness, double coefficient);

  [[nodiscard]] double coefficient() const { return coefficient_; }
  [[nodiscard]] const SymTridiagonal& matrix() const { return matrix_; }
  [[nodiscard]] Vector apply(const Vector& u) const { return matrix_ * u; }
  /// (x, y)_B = <Bx, y>
  [[nodiscard]] double inner(const Vector& x, const Vector& y) const { return matrix_.form(x, y); }
  [[nodiscard]] double norm_sq(const Vector& x) const { return matrix_.form(x); }
  [[nodiscard]] double mu_b() const { return coefficient_; }
  [[nodiscard]] double c_b() const { return coefficient_; }

private:
  double coefficient_ = 1.0;
  SymTridiagonal matrix_;
};

/// Constants of the noise map C:
///   |C(u,w) - C(v,z)|^2 <= lambda_3 |u - v|_B^2 + lambda_4 |w - z|^2
///   kappa >= |C(0,0)|^2
struct NoiseConstants {
  double lambda_3 = 0.0;
  double lambda_4 = 0.0;
  double kappa = 0.0;
};

/// Mode-indexed noise coefficients C_j(u, v) in H. Mode indices are 1-based.
class NoiseOperator {
public:
  explicit NoiseOperator(SymTridiagonal mass) : mass_(std::move(mass)) {}
  virtual ~NoiseOperator() = default;

  [[nodiscard]] virtual std::string_view name() const = 0;
  [[nodiscard]] virtual int modes() const = 0;
  [[nodiscard]] virtual Vector mode(const Vector& u, const Vector& v, int j) const = 0;
  [[nodiscard]] virtual NoiseConstants constants() const = 0;

  /// (C_1(u,v), ..., C_r(u,v)); throws std::out_of_range if r > modes().
  [[nodiscard]] std::vector<Vector> apply(const Vector& u, const Vector& v, int r) const;
  /// sum_j C_j(u,v) dW_j with r = increments.size().
  [[nodiscard]] Vector contract(const Vector& u, const Vector& v, std::span<const double> increments) const;
  /// |C^r(u,v)|^2_{l2(H)}
  [[nodiscard]] double norm_sq(const Vector& u, const Vector& v, int r) const;
  /// |C^r(u,w) - C^r(v,z)|^2_{l2(H)}
  [[nodiscard]] double distance_sq(const Vector& u, const Vector& w, const Vector& v, const Vector& z, int r) const;

  [[nodiscard]] const SymTridiagonal& mass() const { return mass_; }

protected:
  void check_range(int r) const;

  SymTridiagonal mass_;
};

/// C ≡ 0.
class ZeroNoise final : public NoiseOperator {
public:
  ZeroNoise(SymTridiagonal mass, int modes) : NoiseOperator(std::move(mass)), modes_(modes) {}

  [[nodiscard]] std::string_view name() const override { return "zero"; }
  [[nodiscard]] int modes() const override { return modes_; }
  [[nodiscard]] Vector mode(const Vector& u, const Vector& v, int j) const override;
  [[nodiscard]] NoiseConstants constants() const override { return {}; }

private:
  int modes_;
};

/// Diagonal spectral multiplicative noise
///   C_j(u, v) = j^{-s} (alpha (u, e_j) + beta (v, e_j) + gamma) e_j
/// where e_j are the discrete Dirichlet-Laplacian eigenvectors normalized in H.
class SpectralNoise final : public NoiseOperator {
public:
  struct Parameters {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double s = 1.0;
  };

  /// `elastic_coefficient` is b in B = -b Laplacian; lambda_3 is measured in
  /// the |.|_B norm it induces. Requires s > 1/2.
  SpectralNoise(const Mesh1D& mesh, Parameters params, double elastic_coefficient);

  [[nodiscard]] std::string_view name() const override { return "spectral"; }
  [[nodiscard]] int modes() const override { return static_cast<int>(eigvecs_.size()); }
  [[nodiscard]] Vector mode(const Vector& u, const Vector& v, int j) const override;
  [[nodiscard]] NoiseConstants constants() const override { return constants_; }

  [[nodiscard]] const Vector& eigenvector(int j) const { return eigvecs_.at(static_cast<std::size_t>(j - 1)); }
  [[nodiscard]] double eigenvalue(int j) const { return eigvals_.at(static_cast<std::size_t>(j - 1)); }
  [[nodiscard]] double weight(int j) const;
  [[nodiscard]] const Parameters& parameters() const { return params_; }

private:
  Parameters params_;
  std::vector<Vector> eigvecs_;
  std::vector<Vector> mass_eigvecs_;
  std::vector<double> eigvals_;
  NoiseConstants constants_;
};

/// Constants of the combined assumptions, derived from the separate
/// damping/noise bounds:
///   lambda_A = max(lambda_1 + lambda_4 / 2, lambda_2 + lambda_4)
///   lambda_B = lambda_3
///   kappa    = |C(0,0)|^2 bound
///   lambda   = 2 max(lambda_A, lambda_B, kappa)
struct AssumptionConstants {
  double mu_a = 0.0;
  double c_a = 0.0;
  double lambda_1 = 0.0;
  double lambda_2 = 0.0;
  double lambda_3 = 0.0;
  double lambda_4 = 0.0;
  double lambda_a = 0.0;
  double lambda_b = 0.0;
  double kappa = 0.0;
  double mu_b = 0.0;
  double c_b = 0.0;
  double lambda = 0.0;
};

AssumptionConstants derive_constants(const DampingOperator& damping, const ElasticOperator& elastic,
                                     const NoiseOperator& noise);

/// Everything that defines one discrete problem on a fixed Galerkin space.
struct ProblemSpec {
  FemMatrices fem;
  std::shared_ptr<const Mesh1D> mesh;  // null for algebraic (non-mesh) problems
  std::shared_ptr<const DampingOperator> damping;
  ElasticOperator elastic;
  std::shared_ptr<const NoiseOperator> noise;
  Forcing forcing;
  Vector u0;
  Vector v0;
  AssumptionConstants constants;

  [[nodiscard]] Eigen::Index dim() const { return fem.mass.size(); }
  /// ||w||_{V_A}^2
  [[nodiscard]] double va_norm_sq(const Vector& w) const { return fem.stiffness.form(w); }
  /// |w|^2 in H
  [[nodiscard]] double h_norm_sq(const Vector& w) const { return fem.mass.form(w); }
  /// ||g||_{V_A^*}^2 = g^T stiffness^{-1} g
  [[nodiscard]] double dual_norm_sq(const Vector& g) const;
};

/// Assembles a ProblemSpec and fills in its constants. Throws
/// std::invalid_argument on dimension mismatches.
ProblemSpec make_problem(FemMatrices fem, std::shared_ptr<const Mesh1D> mesh,
                         std::shared_ptr<const DampingOperator> damping, ElasticOperator elastic,
                         std::shared_ptr<const NoiseOperator> noise, Forcing forcing, Vector u0, Vector v0);

/// Ratio of the two sides of an inequality lhs >= rhs, normalized so that
/// rounding-level violations are distinguishable from real ones.
struct InequalityAudit {
  std::string name;
  double worst_margin = 0.0;          // min over samples of (lhs - rhs) / (|lhs| + |rhs| + 1e-300)
  std::int64_t violations = 0;
  std::int64_t samples = 0;
  std::optional<std::vector<Vector>> witness;  // (u, v, w, z) of the worst violation
};

struct AuditReport {
  std::vector<InequalityAudit> entries;

  [[nodiscard]] bool ok() const;
  [[nodiscard]] const InequalityAudit& at(std::string_view name) const;
};

/// Relative margins below this count as violations; anything above is
/// rounding noise on inequalities that hold with equality.
inline constexpr double kAuditTolerance = 1e-10;

/// Samples `samples` random tuples (u, v, w, z) and evaluates every structural
/// inequality against `spec.constants`. Never throws on a violation; the
/// report carries the witness. Deterministic in `seed`.
AuditReport check_assumptions(const ProblemSpec& spec, int samples, std::uint64_t seed);

}  // namespace stochwave
