#pragma once

#include <functional>
#include <vector>

#include "stochwave/tridiagonal.hpp"

namespace stochwave {

/// Gram matrices of the P1 basis: mass gives the L2 inner product, stiffness
/// the Dirichlet form int w' z' dx.
struct FemMatrices {
  SymTridiagonal mass;
  SymTridiagonal stiffness;
};

/// Uniform P1 finite-element mesh of (0,1) with homogeneous Dirichlet
/// boundary conditions. The Galerkin space has one unknown per interior node.
class Mesh1D {
public:
  /// Throws std::invalid_argument for m == 0.
  explicit Mesh1D(int m);

  [[nodiscard]] int dim() const { return m_; }
  [[nodiscard]] int cells() const { return m_ + 1; }
  [[nodiscard]] double h() const { return h_; }
  [[nodiscard]] const std::vector<double>& nodes() const { return nodes_; }
  [[nodiscard]] const FemMatrices& matrices() const { return matrices_; }
  [[nodiscard]] const SymTridiagonal& mass() const { return matrices_.mass; }
  [[nodiscard]] const SymTridiagonal& stiffness() const { return matrices_.stiffness; }

  /// Nodal interpolant of a continuous function vanishing at 0 and 1.
  [[nodiscard]] Vector interpolate(const std::function<double(double)>& fn) const;

private:
  int m_;
  double h_;
  std::vector<double> nodes_;
  FemMatrices matrices_;
};

Mesh1D build_mesh(int m);

/// (x, y) in L2(0,1).
double inner_h(const FemMatrices& fem, const Vector& x, const Vector& y);
/// coefficient * int x' y' dx, the energy inner product of B = -coefficient * Laplacian.
double inner_b(const FemMatrices& fem, double coefficient, const Vector& x, const Vector& y);

/// Piecewise-constant derivative of the P1 function, one value per cell,
/// with the zero boundary values folded in.
Vector gradient_at_cells(const Mesh1D& mesh, const Vector& x);

/// True when every node of `coarse` is a node of `fine`.
bool is_nested(const Mesh1D& coarse, const Mesh1D& fine);

/// Nodal interpolation from a coarse mesh onto a nested fine mesh. Exact for
/// P1 functions, so this is the embedding V_coarse into V_fine.
Vector prolongate(const Mesh1D& coarse, const Mesh1D& fine, const Vector& x);

}  // namespace stochwave
