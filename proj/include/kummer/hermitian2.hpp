#pragma once
// 2x2 Hermitian matrices representing (1,1)-forms in the fixed convention
//   omega_A = i * sum_{j,k} A_{j kbar} dz_j ^ dzbar_k ,
// with z1 = x1 + i x2, z2 = x3 + i x4. Under this convention:
//   omega_A ^ omega_B = mixed(A,B) * 4 dV_coord,   omega_A^2 = 8 det(A) dV,
//   the flat Euclidean form sum dx^dy corresponds to A = I/2,
//   Riemannian volume of omega_A is omega_A^2 / 2 = 4 det(A) dV_coord.

#include <complex>

#include "kummer/common.hpp"

namespace kummer {

struct Herm2 {
  Real a11 = 0.0;
  Real a22 = 0.0;
  Complex a12{0.0, 0.0};  // entry (1,2); (2,1) is its conjugate

  Herm2() = default;
  Herm2(Real d11, Real d22, Complex off) : a11(d11), a22(d22), a12(off) {}

  static Herm2 identity(Real s = 1.0) { return Herm2(s, s, Complex(0, 0)); }

  Herm2 operator+(const Herm2& o) const {
    return Herm2(a11 + o.a11, a22 + o.a22, a12 + o.a12);
  }
  Herm2 operator-(const Herm2& o) const {
    return Herm2(a11 - o.a11, a22 - o.a22, a12 - o.a12);
  }
  Herm2 operator*(Real s) const { return Herm2(a11 * s, a22 * s, a12 * s); }

  Real det() const { return a11 * a22 - std::norm(a12); }
  Real trace() const { return a11 + a22; }

  // Eigenvalues (real; a11,a22 real and matrix Hermitian).
  void eigenvalues(Real& lo, Real& hi) const {
    const Real tr = trace();
    const Real d = det();
    Real disc = tr * tr - 4.0 * d;
    if (disc < 0) disc = 0;  // numerical guard; exact disc >= 0
    const Real s = std::sqrt(disc);
    lo = 0.5 * (tr - s);
    hi = 0.5 * (tr + s);
  }
  Real min_eigenvalue() const {
    Real lo, hi;
    eigenvalues(lo, hi);
    return lo;
  }
};

// mixed(F, A) with omega_F ^ omega_A = mixed(F,A) * 4 dV_coord:
//   F11*A22 + F22*A11 - F12*conj(A12) - conj(F12)*A12.
inline Real mixed(const Herm2& f, const Herm2& a) {
  return f.a11 * a.a22 + f.a22 * a.a11 -
         2.0 * (f.a12.real() * a.a12.real() + f.a12.imag() * a.a12.imag());
}

// Exact 2x2 determinant expansion: det(A + B) = det A + mixed(B, A) + det B.
inline Real det_sum(const Herm2& a, const Herm2& b) {
  return a.det() + mixed(b, a) + b.det();
}

// Smallest generalized eigenvalue mu of F v = mu W v for Hermitian F and
// positive-definite W: roots of det(W) mu^2 - mixed(F, W) mu + det(F) = 0.
inline Real min_generalized_eigenvalue(const Herm2& f, const Herm2& w) {
  const Real dw = w.det();
  if (!(dw > 0.0) || !(w.a11 > 0.0))
    throw DomainError("min_generalized_eigenvalue: reference form not positive");
  const Real b = mixed(f, w);
  const Real c = f.det();
  Real disc = b * b - 4.0 * dw * c;
  if (disc < 0) disc = 0;
  return (b - std::sqrt(disc)) / (2.0 * dw);
}

// Laplacian of f w.r.t. omega_A given the complex Hessian H = [d_j d_kbar f]:
//   Delta_A f = -2 tr(A^{-1} H) = -2 mixed(H, A) / det A
// (positive-spectrum convention; equals -grad^2 for the flat A = I/2).
inline Real laplacian_from_hessian(const Herm2& a, const Herm2& h) {
  return -2.0 * mixed(h, a) / a.det();
}

}  // namespace kummer
