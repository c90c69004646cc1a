#include "kummer/eh_geometry.hpp"

#include <cmath>

namespace kummer {

void CutoffProfile::beta_of_rho(Real rho, Real& b, Real& db, Real& d2b) const {
  if (!(rho > 0)) throw DomainError("beta_of_rho: rho must be positive");
  const Real r = std::sqrt(rho);
  const Real lo = r_ramp_lo(), hi = r_ramp_hi();
  if (r <= lo) {
    b = 0.0;
    db = 0.0;
    d2b = 0.0;
    return;
  }
  if (r >= hi) {
    b = 1.0;
    db = 0.0;
    d2b = 0.0;
    return;
  }
  const Real x = (r - lo) / (hi - lo);
  const Real bx = smoothstep5(x);
  const Real bx1 = smoothstep5_d1(x) / (hi - lo);    // d beta / dr
  const Real bx2 = smoothstep5_d2(x) / sq(hi - lo);  // d2 beta / dr2
  // r = sqrt(rho): dr/drho = 1/(2r), d2r/drho2 = -1/(4 rho r)
  const Real drdrho = 0.5 / r;
  const Real d2rdrho2 = -0.25 / (rho * r);
  b = bx;
  db = bx1 * drdrho;
  d2b = bx2 * drdrho * drdrho + bx1 * d2rdrho2;
}

Real CutoffProfile::p(Real rho) const {
  Real b, db, d2b;
  beta_of_rho(rho, b, db, d2b);
  if (b == 0.0) return base.p(rho);
  if (b == 1.0) return 1.0;
  // psi_cut' = F' - (beta' G + beta G') = 1 + (1-beta) G' - beta' G
  return 1.0 + (1.0 - b) * base.p_minus_1(rho) - db * base.g_decay(rho);
}

Real CutoffProfile::s(Real rho) const {
  Real b, db, d2b;
  beta_of_rho(rho, b, db, d2b);
  if (b == 0.0) return base.s(rho);
  if (b == 1.0) return 0.0;
  // psi_cut'' = F'' - (beta'' G + 2 beta' G' + beta F'' )  with G'' = F''
  return (1.0 - b) * base.s(rho) - d2b * base.g_decay(rho) -
         2.0 * db * base.p_minus_1(rho);
}

Real CutoffProfile::det(Real rho) const {
  Real b, db, d2b;
  beta_of_rho(rho, b, db, d2b);
  if (b == 0.0 || b == 1.0) return 1.0;  // exact Monge-Ampere branches
  const Real pp = p(rho), ss = s(rho);
  return pp * pp + rho * pp * ss;
}

Real CutoffProfile::eta(Real rho) const {
  Real b, db, d2b;
  beta_of_rho(rho, b, db, d2b);
  if (b == 0.0 || b == 1.0) return 0.0;  // exact branches off the ramp
  const Real d = det(rho);
  if (!(d > 0))
    throw PositivityError("cutoff profile lost positivity at rho = " +
                          format_double(rho) + " (det = " + format_double(d) +
                          ", R = " + format_double(R) + ")");
  return 1.0 / d - 1.0;
}

Real CutoffProfile::positivity_margin(Real rho) const {
  const Real pp = p(rho);
  const Real dd = pp + rho * s(rho);
  return std::min(pp, dd);
}

Herm2 kahler_matrix(Real p, Real s, Complex z1, Complex z2) {
  Herm2 a;
  a.a11 = p + s * std::norm(z1);
  a.a22 = p + s * std::norm(z2);
  a.a12 = s * std::conj(z1) * z2;
  return a;
}

Herm2 cutoff_form_correction(const CutoffProfile& cp, Complex z1, Complex z2) {
  const Real rho = std::norm(z1) + std::norm(z2);
  Real b, db, d2b;
  cp.beta_of_rho(rho, b, db, d2b);
  const Real g = cp.base.g_decay(rho);
  const Real gp = cp.base.p_minus_1(rho);  // G' = F' - 1
  const Real gpp = cp.base.s(rho);         // G'' = F''
  const Real corr_p = db * g + b * gp;
  const Real corr_s = d2b * g + 2.0 * db * gp + b * gpp;
  return kahler_matrix(corr_p, corr_s, z1, z2);
}

EtaScan eta_on_annulus(const CutoffProfile& cp, int n_samples) {
  if (n_samples < 8) throw ConfigError("eta_on_annulus: too few samples");
  EtaScan scan;
  const Real lo = 0.9 * cp.r_ramp_lo(), hi = 1.1 * cp.r_ramp_hi();
  for (int i = 0; i < n_samples; ++i) {
    const Real r = lo + (hi - lo) * i / (n_samples - 1);
    const Real rho = r * r;
    const Real e = cp.eta(rho);
    scan.rho.push_back(rho);
    scan.eta.push_back(e);
    scan.sup_eta = std::max(scan.sup_eta, std::abs(e));
    const Herm2 c = cutoff_form_correction(cp, Complex(r, 0), Complex(0, 0));
    const Real entry =
        std::max({std::abs(c.a11), std::abs(c.a22), std::abs(c.a12)});
    scan.sup_correction = std::max(scan.sup_correction, entry);
  }
  return scan;
}

}  // namespace kummer
