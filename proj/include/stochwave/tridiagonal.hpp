#pragma once

#include <Eigen/Core>

namespace stochwave {

/// Coefficient vector of a finite-element function (or of a functional
/// tested against the basis).
using Vector = Eigen::VectorXd;

/// Symmetric tridiagonal matrix stored as its diagonal and first
/// off-diagonal. Every matrix the scheme assembles in 1D has this shape.
class SymTridiagonal {
public:
  SymTridiagonal() = default;
  explicit SymTridiagonal(Eigen::Index n);
  SymTridiagonal(Vector diag, Vector off);

  static SymTridiagonal identity(Eigen::Index n, double scale = 1.0);
  static SymTridiagonal constant(Eigen::Index n, double diag, double off);

  [[nodiscard]] Eigen::Index size() const { return diag_.size(); }
  [[nodiscard]] const Vector& diag() const { return diag_; }
  [[nodiscard]] const Vector& off() const { return off_; }
  Vector& diag() { return diag_; }
  Vector& off() { return off_; }

  [[nodiscard]] Vector operator*(const Vector& x) const;
  /// x^T A y
  [[nodiscard]] double form(const Vector& x, const Vector& y) const;
  [[nodiscard]] double form(const Vector& x) const { return form(x, x); }

  SymTridiagonal& operator+=(const SymTridiagonal& other);
  SymTridiagonal& operator*=(double s);

  [[nodiscard]] Eigen::MatrixXd dense() const;

private:
  Vector diag_;
  Vector off_;
};

SymTridiagonal operator+(SymTridiagonal a, const SymTridiagonal& b);
SymTridiagonal operator*(double s, SymTridiagonal a);

/// LDL^T factorization of a symmetric tridiagonal matrix. Throws
/// std::domain_error when a pivot is not strictly positive, so a successful
/// construction certifies positive definiteness.
class TridiagonalLdlt {
public:
  explicit TridiagonalLdlt(const SymTridiagonal& a);

  [[nodiscard]] Vector solve(const Vector& rhs) const;
  [[nodiscard]] const Vector& pivots() const { return d_; }

private:
  Vector d_;
  Vector l_;
};

}  // namespace stochwave
