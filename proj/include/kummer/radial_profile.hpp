#pragma once
// Radial Kahler potentials psi(rho) on C^2 (rho = |z1|^2 + |z2|^2):
//   euclidean:     psi = rho
//   eguchi_hanson: psi = F(rho) with F'(rho) = sqrt(1 + rho^-2), the unique
//                  profile with det[d dbar psi] = 1 decaying to the flat one.
// The decaying part G = F - rho has the closed form
//   G(rho) = sqrt(rho^2+1) - rho - log((1 + sqrt(rho^2+1)) / rho),
// written in cancellation-free terms so it is accurate uniformly in rho;
// its tail is G(rho) = -1/(2 rho) + rho^-3/24 - ... (rho^-2 term absent).
// Two independent evaluators (asymptotic series; adaptive quadrature of
// G' = F' - 1 seeded from the far tail) are exposed for cross-checks.

#include "kummer/common.hpp"

namespace kummer {

enum class ProfileKind { euclidean, eguchi_hanson };

struct RadialProfile {
  ProfileKind kind = ProfileKind::eguchi_hanson;
  // test hook: additive error injected into psi' (CLI fault-injection path,
  // lets the identity check demonstrate that it catches a wrong profile)
  Real inject_fprime = 0.0;

  // psi', psi'', and the cancellation-free psi' - 1
  Real p(Real rho) const;
  Real s(Real rho) const;
  Real p_minus_1(Real rho) const;

  // decaying potential part G(rho) (identically 0 for the euclidean profile)
  Real g_decay(Real rho) const;             // authoritative (closed form)
  Real g_decay_series(Real rho) const;      // independent tail series, rho >= 2
  Real g_decay_quadrature(Real rho) const;  // independent quadrature path
  Real f_value(Real rho) const { return rho + g_decay(rho); }
};

// Monge-Ampere identity residual  (psi')^2 + rho psi' psi'' - det_target,
// where det_target = 1 for both supported profiles.
Real ma_identity_residual(const RadialProfile& pr, Real rho);

// Least-squares tail coefficients of G against {rho^-1, rho^-2, rho^-3} on
// log-spaced samples of [rho_min, rho_max].
struct TailFit {
  Real a1 = 0, a2 = 0, a3 = 0;
  Real max_rel_residual = 0;
};
TailFit tail_fit(const RadialProfile& pr, Real rho_min, Real rho_max, int n);

}  // namespace kummer
