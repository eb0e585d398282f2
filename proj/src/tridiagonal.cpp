#include "stochwave/tridiagonal.hpp"

#include <stdexcept>
#include <string>

namespace stochwave {

SymTridiagonal::SymTridiagonal(Eigen::Index n)
    : diag_(Vector::Zero(n)), off_(Vector::Zero(n > 0 ? n - 1 : 0))
{
}

SymTridiagonal::SymTridiagonal(Vector diag, Vector off) : diag_(std::move(diag)), off_(std::move(off))
{
  if (diag_.size() == 0 ? off_.size() != 0 : off_.size() != diag_.size() - 1) {
    throw std::invalid_argument("SymTridiagonal: off-diagonal must have size n-1");
  }
}

SymTridiagonal SymTridiagonal::identity(Eigen::Index n, double scale)
{
  return constant(n, scale, 0.0);
}

SymTridiagonal SymTridiagonal::constant(Eigen::Index n, double diag, double off)
{
  SymTridiagonal a(n);
  a.diag_.setConstant(diag);
  a.off_.setConstant(off);
  return a;
}

Vector SymTridiagonal::operator*(const Vector& x) const
{
  const Eigen::Index n = size();
  if (x.size() != n) {
    throw std::invalid_argument("SymTridiagonal: dimension mismatch");
  }
  Vector y = diag_.cwiseProduct(x);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    y[i] += off_[i] * x[i + 1];
    y[i + 1] += off_[i] * x[i];
  }
  return y;
}

double SymTridiagonal::form(const Vector& x, const Vector& y) const
{
  if (x.size() != size() || y.size() != size()) {
    throw std::invalid_argument("SymTridiagonal: dimension mismatch");
  }
  return x.dot((*this) * y);
}

SymTridiagonal& SymTridiagonal::operator+=(const SymTridiagonal& other)
{
  if (other.size() != size()) {
    throw std::invalid_argument("SymTridiagonal: dimension mismatch");
  }
  diag_ += other.diag_;
  off_ += other.off_;
  return *this;
}

SymTridiagonal& SymTridiagonal::operator*=(double s)
{
  diag_ *= s;
  off_ *= s;
  return *this;
}

Eigen::MatrixXd SymTridiagonal::dense() const
{
  const Eigen::Index n = size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = diag_[i];
    if (i + 1 < n) {
      a(i, i + 1) = off_[i];
      a(i + 1, i) = off_[i];
    }
  }
  return a;
}

SymTridiagonal operator+(SymTridiagonal a, const SymTridiagonal& b)
{
  a += b;
  return a;
}

SymTridiagonal operator*(double s, SymTridiagonal a)
{
  a *= s;
  return a;
}

TridiagonalLdlt::TridiagonalLdlt(const SymTridiagonal& a) : d_(a.size()), l_(a.size() > 0 ? a.size() - 1 : 0)
{
  const Eigen::Index n = a.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    double pivot = a.diag()[i];
    if (i > 0) {
      l_[i - 1] = a.off()[i - 1] / d_[i - 1];
      pivot -= l_[i - 1] * a.off()[i - 1];
    }
    if (!(pivot > 0.0)) {
      throw std::domain_error("TridiagonalLdlt: non-positive pivot at row " + std::to_string(i));
    }
    d_[i] = pivot;
  }
}

Vector TridiagonalLdlt::solve(const Vector& rhs) const
{
  const Eigen::Index n = d_.size();
  if (rhs.size() != n) {
    throw std::invalid_argument("TridiagonalLdlt: dimension mismatch");
  }
  Vector x = rhs;
  for (Eigen::Index i = 1; i < n; ++i) {
    x[i] -= l_[i - 1] * x[i - 1];
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] /= d_[i];
  }
  for (Eigen::Index i = n - 2; i >= 0; --i) {
    x[i] -= l_[i] * x[i + 1];
  }
  return x;
}

}  // namespace stochwave
