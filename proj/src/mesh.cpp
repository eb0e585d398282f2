#include "stochwave/mesh.hpp"

#include <stdexcept>

namespace stochwave {

namespace {

void check_dims(const FemMatrices& fem, const Vector& x, const Vector& y)
{
  if (x.size() != fem.mass.size() || y.size() != fem.mass.size()) {
    throw std::invalid_argument("dimension mismatch: vectors do not belong to this Galerkin space");
  }
}

}  // namespace

Mesh1D::Mesh1D(int m) : m_(m), h_(0.0)
{
  if (m < 1) {
    throw std::invalid_argument("Mesh1D: need at least one interior node (m >= 1)");
  }
  h_ = 1.0 / static_cast<double>(m + 1);
  nodes_.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    nodes_[static_cast<std::size_t>(i)] = static_cast<double>(i + 1) / static_cast<double>(m + 1);
  }
  matrices_.mass = SymTridiagonal::constant(m, 2.0 * h_ / 3.0, h_ / 6.0);
  matrices_.stiffness = SymTridiagonal::constant(m, 2.0 / h_, -1.0 / h_);
}

Vector Mesh1D::interpolate(const std::function<double(double)>& fn) const
{
  Vector x(m_);
  for (int i = 0; i < m_; ++i) {
    x[i] = fn(nodes_[static_cast<std::size_t>(i)]);
  }
  return x;
}

Mesh1D build_mesh(int m)
{
  return Mesh1D(m);
}

double inner_h(const FemMatrices& fem, const Vector& x, const Vector& y)
{
  check_dims(fem, x, y);
  return fem.mass.form(x, y);
}

double inner_b(const FemMatrices& fem, double coefficient, const Vector& x, const Vector& y)
{
  check_dims(fem, x, y);
  return coefficient * fem.stiffness.form(x, y);
}

Vector gradient_at_cells(const Mesh1D& mesh, const Vector& x)
{
  const int m = mesh.dim();
  if (x.size() != m) {
    throw std::invalid_argument("gradient_at_cells: dimension mismatch");
  }
  const double inv_h = 1.0 / mesh.h();
  Vector g(m + 1);
  double left = 0.0;
  for (int k = 0; k < m; ++k) {
    g[k] = (x[k] - left) * inv_h;
    left = x[k];
  }
  g[m] = (0.0 - left) * inv_h;
  return g;
}

bool is_nested(const Mesh1D& coarse, const Mesh1D& fine)
{
  return (fine.cells() % coarse.cells()) == 0;
}

Vector prolongate(const Mesh1D& coarse, const Mesh1D& fine, const Vector& x)
{
  if (x.size() != coarse.dim()) {
    throw std::invalid_argument("prolongate: dimension mismatch");
  }
  if (!is_nested(coarse, fine)) {
    throw std::invalid_argument("prolongate: meshes are not nested");
  }
  const int ratio = fine.cells() / coarse.cells();
  Vector y(fine.dim());
  for (int i = 0; i < fine.dim(); ++i) {
    // fine node i+1 lies in coarse cell c at local offset k
    const int fine_index = i + 1;
    const int c = fine_index / ratio;
    const int k = fine_index % ratio;
    const double left = c == 0 ? 0.0 : x[c - 1];
    const double right = c == coarse.dim() ? 0.0 : (k == 0 ? left : x[c]);
    const double w = static_cast<double>(k) / static_cast<double>(ratio);
    y[i] = k == 0 ? left : (1.0 - w) * left + w * right;
  }
  return y;
}

}  // namespace stochwave
