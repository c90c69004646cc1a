#pragma once
// Cutoff Eguchi-Hanson geometry: the glued potential
//   psi_cut(rho) = F(rho) - beta_R(r) G(rho),   r = sqrt(rho),
// where beta_R ramps from 0 to 1 on r in [sqrt(R)/2, sqrt(R)] (quintic,
// C^2). Inside the ramp the potential is exactly Eguchi-Hanson, outside it is
// exactly flat, so the volume defect
//   eta(rho) = 1/det[d dbar psi_cut] - 1
// is supported exactly on the ramp annulus.
//
// All quantities live in Y-chart units; under the chart map z_X = z_Y / R the
// Hermitian matrix entries (hence det, eta, positivity) are invariant, so the
// same evaluators serve the torus-side annulus at r_X in [R^{-1/2}/2, R^{-1/2}].

#include "kummer/hermitian2.hpp"
#include "kummer/radial_profile.hpp"

namespace kummer {

struct CutoffProfile {
  Real R = 64.0;
  RadialProfile base{ProfileKind::eguchi_hanson};

  explicit CutoffProfile(Real R_ = 64.0) : R(R_) {
    if (!(R > 1.0)) throw ConfigError("CutoffProfile: R must exceed 1");
  }

  Real r_ramp_lo() const { return 0.5 * std::sqrt(R); }
  Real r_ramp_hi() const { return std::sqrt(R); }

  // cutoff factor as a function of rho, with d/drho and d2/drho2
  void beta_of_rho(Real rho, Real& b, Real& db, Real& d2b) const;

  // psi_cut' and psi_cut''
  Real p(Real rho) const;
  Real s(Real rho) const;

  // det[d dbar psi_cut] = p^2 + rho p s (exactly 1 outside the ramp)
  Real det(Real rho) const;

  // volume defect; exact-zero branches outside the ramp annulus
  Real eta(Real rho) const;

  // positivity margin of the cutoff form: min(p, p + rho s); must be > 0
  Real positivity_margin(Real rho) const;
};

// Complex Hessian [d_j d_kbar psi] of a radial potential with psi' = p,
// psi'' = s at the point (z1, z2): entry (j,k) = p delta_jk + s zbar_j z_k.
Herm2 kahler_matrix(Real p, Real s, Complex z1, Complex z2);

// [d_j d_kbar (beta_R G)] at a point: the correction subtracted from the
// pure Eguchi-Hanson form by the cutoff.
Herm2 cutoff_form_correction(const CutoffProfile& cp, Complex z1, Complex z2);

// eta evaluated across the ramp annulus on a dense radial sampling;
// returns sup |eta| and the samples (for decay sweeps and plots).
struct EtaScan {
  Real sup_eta = 0;
  Real sup_correction = 0;  // largest matrix entry of the cutoff correction
  std::vector<Real> rho, eta;
};
EtaScan eta_on_annulus(const CutoffProfile& cp, int n_samples = 400);

}  // namespace kummer
