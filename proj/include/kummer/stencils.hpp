#pragma once
// Finite-difference weights on arbitrary node offsets (Fornberg's algorithm)
// and uniform-grid derivative application with one-sided closures.

#include <Eigen/Dense>
#include <vector>

#include "kummer/common.hpp"

namespace kummer {

// Weights w_j so that sum_j w_j f(xs[j]) approximates d^m f / dx^m at x0,
// exact for polynomials of degree <= xs.size()-1.
inline std::vector<Real> fornberg_weights(Real x0, const std::vector<Real>& xs,
                                          int m) {
  const int n = static_cast<int>(xs.size());
  if (m >= n) throw ShapeError("fornberg_weights: too few nodes for order");
  // c[k][j]: weight of node j for derivative k (rolling over nodes)
  std::vector<std::vector<Real>> c(m + 1, std::vector<Real>(n, 0.0));
  c[0][0] = 1.0;
  Real c1 = 1.0;
  Real c4 = xs[0] - x0;
  for (int i = 1; i < n; ++i) {
    int mn = std::min(i, m);
    Real c2 = 1.0;
    Real c5 = c4;
    c4 = xs[i] - x0;
    for (int j = 0; j < i; ++j) {
      const Real c3 = xs[i] - xs[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c[m];
}

// Apply d^m/dt^m along a uniform grid of n values with accuracy `acc`
// (stencil width m + acc, shifted one-sided near the ends).
inline Eigen::VectorXd uniform_derivative(const Eigen::VectorXd& f, Real dt,
                                          int m, int acc) {
  const int n = static_cast<int>(f.size());
  int width = m + acc;
  if (width % 2 == 0) width += 1;  // symmetric interior stencil
  if (width > n) throw ShapeError("uniform_derivative: grid too short");
  const int half = width / 2;
  Eigen::VectorXd out(n);
  // cache one-sided and centered weights
  std::vector<std::vector<Real>> wcache(width);
  for (int pos = 0; pos < width; ++pos) {
    std::vector<Real> xs(width);
    for (int j = 0; j < width; ++j) xs[j] = (j - pos) * dt;
    wcache[pos] = fornberg_weights(0.0, xs, m);
  }
  for (int i = 0; i < n; ++i) {
    int start = i - half;
    if (start < 0) start = 0;
    if (start + width > n) start = n - width;
    const auto& w = wcache[i - start];
    Real s = 0;
    for (int j = 0; j < width; ++j) s += w[j] * f[start + j];
    out[i] = s;
  }
  return out;
}

// Composite Simpson quadrature weights on a uniform grid (3/8 closure when
// the interval count is odd).
inline Eigen::VectorXd simpson_weights(int n, Real dt) {
  if (n < 2) throw ShapeError("simpson_weights: need >= 2 nodes");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  int m = n - 1;  // intervals
  int start = 0;
  if (m % 2 == 1) {
    if (m >= 3) {
      // Simpson 3/8 on the first three intervals
      w[0] += 3.0 / 8.0 * dt;
      w[1] += 9.0 / 8.0 * dt;
      w[2] += 9.0 / 8.0 * dt;
      w[3] += 3.0 / 8.0 * dt;
      start = 3;
    } else {
      // fall back to trapezoid on a tiny grid
      w[0] += 0.5 * dt;
      w[1] += 0.5 * dt;
      start = 1;
    }
  }
  for (int i = start; i + 2 <= n - 1; i += 2) {
    w[i] += dt / 3.0;
    w[i + 1] += 4.0 * dt / 3.0;
    w[i + 2] += dt / 3.0;
  }
  return w;
}

}  // namespace kummer
