#pragma once
// Cross-section geometry for cylindrical ends: the unit circle, the round
// unit S^3, and S^3 / {±1}. Provides an exact product quadrature (Hopf
// coordinates), the Laplace eigenmode basis built from harmonic homogeneous
// polynomials, projection/reconstruction, and pointwise mode evaluation with
// first and mixed second complex derivatives (used by curvature/nonlinear
// assembly on radial-spectral charts).
//
// Conventions: z1 = x1 + i x2, z2 = x3 + i x4; Hopf parametrization
//   z1 = sqrt(1-u) e^{i xi1}, z2 = sqrt(u) e^{i xi2},  u in [0,1],
//   dVol_{S^3} = (1/2) du dxi1 dxi2  (total 2 pi^2; quotient measure pi^2).
// A degree-k harmonic homogeneous polynomial restricted to S^3 is a Laplace
// eigenfunction with eigenvalue k(k+2); functions on S^3/{±1} are the even-k
// ones. Modes are grouped into radial families by (k, m = p*q) where (p,q)
// is the complex bidegree.

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <vector>

#include "kummer/common.hpp"

namespace kummer {

enum class CrossKind { circle, sphere3, sphere3_quotient };

struct CrossSectionSpec {
  CrossKind kind = CrossKind::sphere3_quotient;
  int max_degree = 8;  // top polynomial degree of retained modes
};

// Complex polynomial in z1, zbar1, z2, zbar2; a real-valued mode evaluates
// as Re(sum coef * z1^a zbar1^b z2^c zbar2^d).
struct CPoly {
  struct Term {
    std::array<int, 4> e;  // exponents (a, b, c, d)
    Complex c;
  };
  std::vector<Term> terms;

  Complex eval(Complex z1, Complex z2) const;
  CPoly d_z1() const;
  CPoly d_zbar1() const;
  CPoly d_z2() const;
  CPoly d_zbar2() const;
  CPoly scaled(Complex s) const;
  static CPoly sum(const std::vector<const CPoly*>& ps,
                   const std::vector<Complex>& ws);
};

struct SphereGrid {
  int exactness = 0;  // integrates polynomials of total degree <= exactness
  int nu = 0, nxi1 = 0, nxi2 = 0;
  bool quotient_measure = false;
  std::vector<std::array<Real, 4>> x;  // unit-sphere points
  std::vector<Complex> z1, z2;
  std::vector<Real> w;  // weights; sum = 2 pi^2 (or pi^2 for quotient)
  int n_nodes() const { return static_cast<int>(w.size()); }
};

SphereGrid make_sphere_grid(int exactness, bool quotient_measure);

struct Mode {
  int k = 0;        // polynomial degree; eigenvalue k(k+2)
  int p = 0, q = 0; // complex bidegree, p >= q
  int m = 0;        // radial family label p*q
  Real lambda = 0;  // Laplace eigenvalue on the cross-section
  CPoly poly;       // real mode = Re(poly), homogeneous of degree k
};

struct EigenSystem {
  CrossSectionSpec spec;
  SphereGrid grid;          // projection grid (exactness 2*max_degree + 2)
  std::vector<Mode> modes;  // deterministic order: by k, then q, then index
  Eigen::MatrixXd values;   // [n_nodes x n_modes] orthonormal w.r.t. grid.w

  struct Family {
    int k = 0, m = 0;
    Real lambda = 0;
    std::vector<int> mode_index;
  };
  std::vector<Family> families;  // distinct (k, m) radial families

  int n_modes() const { return static_cast<int>(modes.size()); }
  Real measure_total() const;  // 2 pi^2 or pi^2 (quotient), 2 pi (circle)
};

// Build the eigensystem for a cross-section.
EigenSystem spectrum(const CrossSectionSpec& spec);

// Coefficients of grid samples against the mode basis (exact for
// polynomial data within the grid exactness). samples.size() == n_nodes.
Eigen::VectorXd project(const EigenSystem& es, const Eigen::VectorXd& samples);

// Grid samples from coefficients.
Eigen::VectorXd reconstruct(const EigenSystem& es, const Eigen::VectorXd& coef);

// Evaluate one mode at an arbitrary nonzero point of R^4 (homogeneous
// evaluation at x/|x|).
Real evaluate_mode(const EigenSystem& es, int mode, const std::array<Real, 4>& x);

// Evaluate all modes at one point (row vector of length n_modes).
Eigen::VectorXd evaluate_modes(const EigenSystem& es, const std::array<Real, 4>& x);

// Pointwise derivative tables on a node set (unit-sphere points): mode values,
// first complex derivatives, and mixed second derivatives d_a d_bbar, all of
// the real modes (evaluated on the unit sphere; radial homogeneity scaling is
// the caller's business).
struct ModeTables {
  Eigen::MatrixXd Y;                    // values
  Eigen::MatrixXd d1_re, d1_im;         // d/dz1
  Eigen::MatrixXd d2_re, d2_im;         // d/dz2
  Eigen::MatrixXd h11, h22;             // d_a d_abar (real for real modes)
  Eigen::MatrixXd h12_re, h12_im;       // d_1 d_2bar
};
ModeTables build_mode_tables(const EigenSystem& es, const SphereGrid& nodes);

// Quadrature of arbitrary samples on a grid.
Real integrate(const SphereGrid& g, const Eigen::VectorXd& samples);

}  // namespace kummer
