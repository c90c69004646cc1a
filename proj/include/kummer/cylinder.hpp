#pragma once
// Linear theory on a finite cylinder [t0, t1] x M for the model operator
//   L f = -d^2 f/dt^2 + Delta_M f + f
// acting mode-by-mode: for a cross-section eigenmode with eigenvalue lambda,
// the radial factor satisfies  -f'' + (1 + lambda) f = rho.
//
// Discretization: uniform axial grid, symmetric second-difference stiffness
// + trapezoidal mass, with end closures:
//   decay:   Robin  f' = +- sqrt(1+lambda) f  (the decaying solution's rate)
//   neumann: zero flux
//   dirichlet_zero: pinned value
// The discrete operator is the mass-normalized symmetric form, so
// <L f, f>_M equals the Dirichlet energy identity exactly.
//
// Measurement paths (Sobolev norms, L^4, sup) use 6th-order axial stencils
// and Simpson quadrature; the solver path stays 2nd-order symmetric.

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "kummer/cross_section.hpp"

namespace kummer {

struct AxialGrid {
  Real t0 = 0.0, t1 = 1.0;
  int n = 2;
  Real dt() const { return (t1 - t0) / (n - 1); }
  Real t(int i) const { return t0 + i * dt(); }
  bool operator==(const AxialGrid& o) const {
    return t0 == o.t0 && t1 == o.t1 && n == o.n;
  }
};

enum class EndCondition { decay, neumann, dirichlet_zero };

struct CylinderField {
  std::shared_ptr<const EigenSystem> es;
  AxialGrid grid;
  Eigen::MatrixXd coef;  // [n_t x n_modes]

  CylinderField() = default;
  CylinderField(std::shared_ptr<const EigenSystem> e, const AxialGrid& g)
      : es(std::move(e)), grid(g) {
    coef = Eigen::MatrixXd::Zero(g.n, es->n_modes());
  }
};

void require_compatible(const CylinderField& a, const CylinderField& b);

// One radial mode problem: -f'' + (1+lambda) f = rho.
Eigen::VectorXd solve_mode_ode(Real lambda, const AxialGrid& g,
                               const Eigen::VectorXd& rhs,
                               EndCondition bottom = EndCondition::decay,
                               EndCondition top = EndCondition::decay);

// Forward application of the same discrete operator (exact inverse pair with
// solve_mode_ode).
Eigen::VectorXd apply_mode_operator(Real lambda, const AxialGrid& g,
                                    const Eigen::VectorXd& f,
                                    EndCondition bottom = EndCondition::decay,
                                    EndCondition top = EndCondition::decay);

// Whole-cylinder solve, mode by mode.
CylinderField solve_cylinder(const CylinderField& rhs,
                             EndCondition bottom = EndCondition::decay,
                             EndCondition top = EndCondition::decay);

CylinderField apply_cylinder_operator(const CylinderField& f,
                                      EndCondition bottom = EndCondition::decay,
                                      EndCondition top = EndCondition::decay);

// Solver-path L^2 inner product (trapezoid in t, exact in M).
Real inner_l2(const CylinderField& a, const CylinderField& b);
Real norm_l2(const CylinderField& a);

// Measured squared Sobolev norm of order k in {0,1,2,3}:
//   ||f||_{L^2_k}^2 = sum_j binom(k,j) sum_modes (1+lambda)^{k-j}
//                     int (d^j f_mode/dt^j)^2 dt,
// i.e. <f, (-d_t^2 + 1 + Delta_M)^k f> after integration by parts (boundary
// terms dropped; intended for fields supported away from the ends).
Real sobolev_norm(const CylinderField& f, int k);

// Pointwise product with spectral projection back to the basis; throws
// AliasingError if the relative L^2 tail beyond the basis exceeds `tail_tol`.
CylinderField multiply(const CylinderField& a, const CylinderField& b,
                       Real tail_tol = 0.01);

// Pointwise samples of a field on a sphere grid at every axial level
// ([n_t x n_nodes]); used by measurement paths.
Eigen::MatrixXd field_samples(const CylinderField& f, const SphereGrid& nodes);

// sup norm and L^4 norm (Simpson in t, exact quadrature in M).
Real sup_norm(const CylinderField& f);
Real l4_norm(const CylinderField& f);

// Embedding-constant probes: seeded random band-limited bump fields;
// reports the max over probes of ||f||_sup / ||f||_{L^2_3} and
// ||f||_{L^4} / ||f||_{L^2_1} plus per-probe values (for translation and
// length-independence checks).
struct EmbeddingProbeReport {
  Real c0_ratio_max = 0;
  Real l4_ratio_max = 0;
  std::vector<Real> c0_ratios, l4_ratios;
};
EmbeddingProbeReport embedding_ratio_probe(
    const std::shared_ptr<const EigenSystem>& es, const AxialGrid& g,
    int n_probes, std::uint64_t seed, Real bump_center = 0.0,
    Real bump_width = 1.0);

}  // namespace kummer
