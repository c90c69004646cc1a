#pragma once
// Model manifolds with cylindrical ends and the gluing machinery: a single
// resolved-core piece whose ALE end is written as a half-cylinder (the
// conformal factor h = r turns rho = r^2 into e^{2t}), the doubled manifold
// obtained by gluing two such pieces along a neck of length 2T, the cutoff
// parametrix built from the piece inverses, its defect as an exact discrete
// commutator, the Neumann-series glued inverse, and the kernel-projected
// (modified) inverse on manifolds whose operator has the exact kernel h.
//
// Piece charts are built so that beyond s = 1.5 the geometry is *exactly*
// cylindrical (the Eguchi-Hanson profile is ramped into the product metric
// over s in [0.5, 1.5]); gluing two such pieces at neck coordinate t = 0
// therefore produces operator rows identical to the piece rows wherever the
// cutoffs see them, which makes the parametrix defect identity
//   box P0 - I = sum_i [box, beta_i] P_i gamma_i
// hold to rounding, not just asymptotically.

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "kummer/mode_ops.hpp"

namespace kummer {

// Cap applied to the conformal factor near the resolved core so h stays
// bounded away from zero on the chart: identity for r >= 0.5, constant 0.35
// below r = 0.2, monotone C^3 quintic-step blend between.
Real core_conformal_cap(Real r);

// Single piece: resolved core at the bottom (zero-flux closure at r = 0.1),
// asymptotically cylindrical end at the top with the decaying-solution Robin
// closure. No kernel.
SpectralChart make_y_model(std::shared_ptr<const EigenSystem> es, Real s_top,
                           Real ds);

// Core + exact cylinder with zero-flux closures at both ends: the operator
// kernel is exactly (the capped) h. Used to exercise the kernel-projected
// solve.
SpectralChart make_single_neck(std::shared_ptr<const EigenSystem> es,
                               Real s_top, Real ds);

struct GluedModel {
  Real T = 0, ds = 0;
  SpectralChart glued;   // [t_min, t_max], zero-flux at both core floors
  SpectralChart piece1;  // prefix chart, decaying closure at its top
  SpectralChart piece2;  // suffix chart, decaying closure at its bottom
  int n1 = 0;    // piece1 node i  <->  glued node i
  int off2 = 0;  // piece2 node i  <->  glued node off2 + i
  // Radial cutoffs sampled on the glued grid: gamma1 + gamma2 = 1 with the
  // crossover in [-1/2, 1/2]; beta_i = 1 on supp gamma_i and ramps off over
  // half the neck, so |beta'| <= 4/T.
  Eigen::VectorXd beta1, gamma1, beta2, gamma2;
};

GluedModel make_glued_yy(std::shared_ptr<const EigenSystem> es, Real T,
                         Real ds);

// Parametrix P0 rho = sum_i beta_i * P_i(gamma_i rho).
Eigen::MatrixXd parametrix_apply(const GluedModel& gm,
                                 const Eigen::MatrixXd& rho);

// [UTIL] Cutoff descending from 1 at t = a to 0 at t = b with a flat-topped
// derivative profile: |slope| ~ 1/(b - a) over the ramp bulk, smooth corners
// of width min(1, (b-a)/4).  Built by cumulative trapezoid on the given grid
// so it lands at exactly 0 and 1 on-grid.
Eigen::VectorXd descending_cutoff(const Eigen::VectorXd& t, Real a, Real b);

// Defect S rho = box(P0 rho) - rho.
Eigen::MatrixXd defect_apply(const GluedModel& gm, const Eigen::MatrixXd& rho);

// Adjoint of the defect in the discrete L^2(dmu): every factor of S is
// self-adjoint there except the cutoff multipliers, so S^T is S with the
// roles of beta and gamma exchanged and box applied first.
Eigen::MatrixXd defect_adjoint_apply(const GluedModel& gm,
                                     const Eigen::MatrixXd& rho);

// [MEAS] Operator norm ||S||_{L^2 -> L^2} via power iteration on S^T S.
Real defect_norm_estimate(const GluedModel& gm, int iters, uint64_t seed);

// The same defect assembled from the cutoff commutators,
// sum_i [box, M_{beta_i}] P_i (gamma_i rho); agrees with defect_apply to
// rounding by construction (test oracle for the gluing identity).
Eigen::MatrixXd defect_via_commutators(const GluedModel& gm,
                                       const Eigen::MatrixXd& rho);

struct GluedInverseReport {
  Eigen::MatrixXd f;
  int terms = 0;           // Neumann series terms used
  Real series_ratio = 0;   // geometric decay ratio of the term norms
  Real residual_rel = 0;   // ||box f - rho|| / ||rho||
};

// box^{-1} rho via the Neumann series of the parametrix defect.
GluedInverseReport glued_inverse(const GluedModel& gm,
                                 const Eigen::MatrixXd& rho, Real tol,
                                 int max_terms = 200);

struct ModifiedInverseResult {
  Eigen::MatrixXd f;  // solves box f = rho - tau * hhat, <f, hhat> = 0
  Real tau = 0;       // <rho, hhat> in L^2(dmu), hhat the normalized kernel
};

// Kernel-projected inverse on a manifold with exact kernel h.
ModifiedInverseResult modified_inverse(const SpectralChart& ch,
                                       const Eigen::MatrixXd& rho);

struct KernelCensus {
  int dim = 0;                 // eigenvalues below tol * op_scale
  std::vector<Real> lowest;    // few smallest eigenvalues across families
  Real gap = 0;                // smallest eigenvalue above the kernel cluster
  Real op_scale = 0;           // crude operator magnitude (max diagonal)
  Real h_box_residual = 0;     // ||box hhat|| / op_scale
};

KernelCensus kernel_census(const SpectralChart& ch, Real tol = 1e-8);

struct PieceDecayFit {
  int kdeg = 0, m = 0;
  Real expected_rate = 0;  // sqrt(1 + k(k+2))
  Real fitted_rate = 0;    // from a semilog fit of the family amplitude
  Real r2 = 0;
};

struct PieceSolveReport {
  Eigen::MatrixXd f;
  Real residual_rel = 0;
  std::vector<PieceDecayFit> decay;
};

// Solve on a piece and measure the exponential decay of each excited
// family beyond the data support (fit window [fit_lo, fit_hi] in s).
PieceSolveReport invert_on_piece(const SpectralChart& ch,
                                 const Eigen::MatrixXd& rhs, Real fit_lo,
                                 Real fit_hi);

struct NeckSweepPoint {
  Real T = 0;
  Real defect_norm = 0;   // max over probes of ||S rho|| / ||rho||
  Real p0_gain = 0;       // max over probes of ||P0 rho||_{H2} / ||rho||
  Real inv_error_rel = 0; // glued_inverse vs direct solve, relative L^2
  int series_terms = 0;
  Real series_ratio = 0;
  Real sigma1 = 0;        // smallest operator eigenvalue on the glued manifold
};

// [MEAS] Sweep neck half-lengths; n_probes seeded band-supported probes per T.
std::vector<NeckSweepPoint> neck_sweep(std::shared_ptr<const EigenSystem> es,
                                       const std::vector<Real>& Ts, Real ds,
                                       int n_probes, uint64_t seed);

}  // namespace kummer
