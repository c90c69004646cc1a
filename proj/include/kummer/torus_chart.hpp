#pragma once
// Uniform periodic grid on a rectangular 4-torus R^4 / Lambda with
// Lambda = diag(L) Z^4. The half quotient (x ~ -x) is realized by storing
// even functions on the full grid. This header provides the field container,
// periodic tensor-Lagrange interpolation, centered measurement stencils, the
// h-conjugated flat graph Laplacian used by the glue-frame solves, and an
// FFT-based flat Poisson solver used as a preconditioner.
//
// Conventions: complex coordinates z1 = x1 + i x2, z2 = x3 + i x4; fields are
// flat arrays indexed x1-fastest; all operators here assume the flat metric
// (the assembled geometry is exactly flat on the region the torus grid owns).

#include <array>
#include <cstdint>
#include <memory>

#include <Eigen/Dense>

#include "kummer/common.hpp"
#include "kummer/hermitian2.hpp"

namespace kummer {

using TorusField = Eigen::VectorXd;

struct TorusGrid {
  std::array<Real, 4> L{1.0, 1.0, 1.0, 1.0};
  int n = 32;

  std::int64_t size() const {
    const std::int64_t m = n;
    return m * m * m * m;
  }
  Real dx(int axis) const { return L[axis] / n; }
  Real dx_max() const {
    return std::max(std::max(dx(0), dx(1)), std::max(dx(2), dx(3)));
  }
  Real cell_volume() const { return dx(0) * dx(1) * dx(2) * dx(3); }

  int wrap(int i) const {
    i %= n;
    return i < 0 ? i + n : i;
  }
  std::int64_t index(int i0, int i1, int i2, int i3) const {
    return ((std::int64_t(wrap(i3)) * n + wrap(i2)) * n + wrap(i1)) * n +
           wrap(i0);
  }
  std::array<int, 4> coords(std::int64_t idx) const {
    std::array<int, 4> c;
    for (int a = 0; a < 4; ++a) {
      c[a] = static_cast<int>(idx % n);
      idx /= n;
    }
    return c;
  }
  std::array<Real, 4> point(std::int64_t idx) const {
    const auto c = coords(idx);
    return {c[0] * dx(0), c[1] * dx(1), c[2] * dx(2), c[3] * dx(3)};
  }
  // index of the node idx shifted by `by` cells along `axis`
  std::int64_t shift(std::int64_t idx, int axis, int by) const {
    auto c = coords(idx);
    c[axis] = wrap(c[axis] + by);
    return index(c[0], c[1], c[2], c[3]);
  }
};

// Validated constructor: even n >= 8 (evenness keeps the involution and the
// half-lattice points on-grid), positive lattice entries.
TorusGrid make_torus_grid(const std::array<Real, 4>& L, int n);

// Periodic distance from x to the nearest point of the half lattice
// (L/2) Z^4 (= the involution fixed points).
Real half_lattice_distance(const TorusGrid& g, const std::array<Real, 4>& x);

// Identify the nearest fixed point: returns its 4-bit id (bit a set when the
// point sits at L_a/2 on axis a) and optionally the wrapped displacement
// rel = x - p with |rel| the distance above.
int nearest_fixed_point(const TorusGrid& g, const std::array<Real, 4>& x,
                        std::array<Real, 4>* rel = nullptr);

// Same identification for a grid node, but carried out in index space, where
// the reflection i -> n - i negates the displacement exactly: fields
// assembled from the returned rel are exactly even for every n, not just
// when dx is a binary fraction.
int nearest_fixed_point_node(const TorusGrid& g, std::int64_t node,
                             std::array<Real, 4>* rel = nullptr);

// --- parity ---------------------------------------------------------------
void symmetrize_even(const TorusGrid& g, TorusField& f);
Real even_defect(const TorusGrid& g, const TorusField& f);  // sup |f(x)-f(-x)|

// --- interpolation ----------------------------------------------------------
// Tensor-Lagrange periodic interpolation. reach = 1: linear (2 taps/axis),
// reach = 2: cubic (4 taps/axis).
Real interpolate(const TorusGrid& g, const TorusField& f,
                 const std::array<Real, 4>& x, int reach = 2);

// --- measurement stencils (4th order, centered, periodic) ------------------
// order = 1 or 2: the 4th-order accurate first/second derivative along axis.
TorusField axis_derivative(const TorusGrid& g, const TorusField& f, int axis,
                           int order);

struct Herm2Field {
  TorusField a11, a22, re12, im12;
  Herm2 at(std::int64_t i) const {
    return Herm2{a11[i], a22[i], Complex(re12[i], im12[i])};
  }
  void resize(std::int64_t m) {
    a11.setZero(m);
    a22.setZero(m);
    re12.setZero(m);
    im12.setZero(m);
  }
};

// Complex Hessian [d_j d_kbar f] of a real field (4th-order stencils):
//   H11 = (f_11 + f_22)/4, H22 = (f_33 + f_44)/4,
//   H12 = ((f_13 + f_24) + i (f_14 - f_23))/4.
Herm2Field hermitian_hessian(const TorusGrid& g, const TorusField& f);

// Full-cover Riemann integral sum(f) * dx^4 (callers apply the half-quotient
// factor where orbifold totals are meant).
Real torus_integral(const TorusGrid& g, const TorusField& f);

// --- h-conjugated flat graph Laplacian --------------------------------------
// box f = h^3 Delta_flat (f/h) discretized as W^{-1} K with
//   (K f)_i = sum_a (dx^4/dx_a^2) (1/h_i) [ (f/h)_i - (f/h)_j ],
//   W = diag(dx^4 / h^4),
// so K = diag(1/h) L_flat diag(1/h) is symmetric, annihilates h exactly, and
// box is self-adjoint in W. The potential (diagonal defect against the plain
// graph Laplacian in f) is V = h^3 * Delta_flat_disc(1/h).
TorusField conj_box_apply(const TorusGrid& g, const TorusField& h,
                          const TorusField& f);
// (L_flat u)_i = sum_a (u_i - u_j)/dx_a^2  (the positive flat Laplacian)
TorusField flat_laplacian_apply(const TorusGrid& g, const TorusField& u);
TorusField conj_potential(const TorusGrid& g, const TorusField& h);

// --- FFT flat solver ---------------------------------------------------------
// Solves (L_flat + shift) u = r on the periodic grid (L_flat as above, the
// 2nd-order 9-point stencil, diagonal in the discrete Fourier basis). With
// shift = 0 the constant mode of r is projected out and u has zero mean.
class FlatPoisson {
 public:
  FlatPoisson(const TorusGrid& g, Real shift);
  ~FlatPoisson();
  FlatPoisson(const FlatPoisson&) = delete;
  FlatPoisson& operator=(const FlatPoisson&) = delete;

  void solve(const TorusField& r, TorusField& u) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace kummer
