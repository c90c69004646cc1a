#pragma once
// Symmetric positive-definite tridiagonal systems (LDL^T, no pivoting).

#include <Eigen/Dense>

#include "kummer/common.hpp"

namespace kummer {

struct TriDiag {
  Eigen::VectorXd diag;  // n
  Eigen::VectorXd sub;   // n-1

  int n() const { return static_cast<int>(diag.size()); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    const int m = n();
    if (x.size() != m) throw ShapeError("TriDiag::apply: size mismatch");
    Eigen::VectorXd y(m);
    for (int i = 0; i < m; ++i) {
      Real s = diag[i] * x[i];
      if (i > 0) s += sub[i - 1] * x[i - 1];
      if (i + 1 < m) s += sub[i] * x[i + 1];
      y[i] = s;
    }
    return y;
  }
};

struct TriDiagFactor {
  Eigen::VectorXd d;  // pivot diagonal
  Eigen::VectorXd l;  // unit-lower subdiagonal multipliers

  explicit TriDiagFactor(const TriDiag& a) {
    const int m = a.n();
    d.resize(m);
    l.resize(std::max(m - 1, 0));
    Real piv = a.diag[0];
    if (!(piv > 0) && !(piv < 0))
      throw SolverError("tridiagonal factorization: zero pivot at row 0");
    d[0] = piv;
    for (int i = 1; i < m; ++i) {
      l[i - 1] = a.sub[i - 1] / d[i - 1];
      d[i] = a.diag[i] - l[i - 1] * a.sub[i - 1];
      if (d[i] == 0)
        throw SolverError("tridiagonal factorization: zero pivot");
    }
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    const int m = static_cast<int>(d.size());
    if (b.size() != m) throw ShapeError("TriDiagFactor::solve: size mismatch");
    Eigen::VectorXd x = b;
    for (int i = 1; i < m; ++i) x[i] -= l[i - 1] * x[i - 1];
    for (int i = 0; i < m; ++i) x[i] /= d[i];
    for (int i = m - 2; i >= 0; --i) x[i] -= l[i] * x[i + 1];
    return x;
  }
};

}  // namespace kummer
