#include "kummer/ends.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kummer/fit.hpp"
#include "kummer/radial_profile.hpp"

namespace kummer {

Real core_conformal_cap(Real r) {
  // Monotone C^3 floor: constant 0.35 below 0.2, identity above 0.5, and in
  // between the derivative is the quintic step, f' = smoothstep5(v), so
  //   f = 0.35 + w * (2.5 v^4 - 3 v^5 + v^6),  v = (r - 0.2) / w,  w = 0.3,
  // which meets the identity branch with matching f', f'', f'''.
  if (r >= 0.5) return r;
  if (r <= 0.2) return 0.35;
  const Real v = (r - 0.2) / 0.3;
  const Real v2 = v * v;
  return 0.35 + 0.3 * (v2 * v2 * (2.5 + v * (-3.0 + v)));
}

namespace {

constexpr Real kFloorS = -2.3;   // chart floor: r = e^{-2.3} ~ 0.1
constexpr Real kRampLo = 0.5;    // EH -> cylinder coefficient ramp (models)
constexpr Real kCoreTop = 1.5;   // exactly cylindrical beyond this s

// Radial geometry of a resolved core in the cylinder coordinate s = log r
// (rho = r^2), optionally ramped into the exact product cylinder.
struct ModelGeom {
  const RadialProfile* prof = nullptr;
  bool ramp_to_cylinder = false;

  RadialPoint operator()(Real s) const {
    const Real rho = std::exp(2.0 * s);
    Real P, S;
    if (ramp_to_cylinder && s >= kCoreTop) {
      P = 1.0;
      S = 0.0;
    } else {
      P = prof->p(rho);
      S = prof->s(rho);
      if (ramp_to_cylinder && s > kRampLo) {
        const Real blend = 1.0 - smoothstep5(s - kRampLo);
        P = 1.0 + blend * (P - 1.0);
        S = blend * S;
      }
    }
    RadialPoint g;
    g.P = P;
    g.S = S;
    g.rho = rho;
    g.h = core_conformal_cap(std::exp(s));
    g.h_phys = g.h;
    return g;
  }
};

const RadialProfile& eh_profile() {
  static const RadialProfile prof{ProfileKind::eguchi_hanson, 0.0};
  return prof;
}

int index_of(Real s, Real s0, Real ds) {
  const Real x = (s - s0) / ds;
  const int i = static_cast<int>(std::lround(x));
  if (std::abs(x - i) > 1e-6)
    throw ConfigError("ends: grid breakpoint does not align with ds");
  return i;
}

Eigen::MatrixXd radial_scale(const Eigen::VectorXd& c,
                             const Eigen::MatrixXd& f) {
  return c.asDiagonal() * f;
}

}  // namespace

SpectralChart make_y_model(std::shared_ptr<const EigenSystem> es, Real s_top,
                           Real ds) {
  if (s_top < 6.0)
    throw ConfigError("make_y_model: s_top too small for a clean end closure");
  ModelGeom geom{&eh_profile(), false};
  return build_chart(std::move(es), kFloorS, s_top, ds, geom,
                     Closure::neumann, Closure::decay_up);
}

SpectralChart make_single_neck(std::shared_ptr<const EigenSystem> es,
                               Real s_top, Real ds) {
  ModelGeom geom{&eh_profile(), false};
  return build_chart(std::move(es), kFloorS, s_top, ds, geom,
                     Closure::neumann, Closure::neumann);
}

GluedModel make_glued_yy(std::shared_ptr<const EigenSystem> es, Real T,
                         Real ds) {
  if (!(T >= 3.0)) throw ConfigError("make_glued_yy: need T >= 3");
  GluedModel gm;
  gm.T = T;
  gm.ds = ds;

  const Real A = T + kCoreTop;          // s-coordinate of the neck middle
  const Real t_min = kFloorS - A;       // piece-1 floor in glued coordinates
  const Real t_max = A - kFloorS;       // piece-2 floor
  // Piece-1 chart must cover supp(beta1) = (-inf, 3/2 + T/2]; add margin 1.
  const Real t_top1_raw = 0.5 * T + 2.5;

  // Mirror-symmetric glued geometry: piece-1 formulas for t <= 0. (The
  // chart-coordinate rho is then monotone only up to the middle; it is kept
  // as the piece value and used for diagnostics only.)
  ModelGeom core{&eh_profile(), true};
  auto glued_geom = [&](Real t) { return core(A - std::abs(t)); };
  gm.glued = build_chart(es, t_min, t_max, ds, glued_geom, Closure::neumann,
                         Closure::neumann);

  const int im = index_of(0.0, t_min, ds);
  const int n1 = static_cast<int>(
                     std::ceil((t_top1_raw - t_min) / ds - 1e-9)) + 1;
  gm.n1 = n1;
  const Real t_top1 = t_min + (n1 - 1) * ds;

  auto piece1_geom = [&](Real t) { return core(A + t); };
  gm.piece1 = build_chart(es, t_min, t_top1, ds, piece1_geom, Closure::neumann,
                          Closure::decay_up);

  const int ns_g = gm.glued.ns;
  gm.off2 = ns_g - n1;
  const Real t_bot2 = t_min + gm.off2 * ds;
  auto piece2_geom = [&](Real t) { return core(A - t); };
  gm.piece2 = build_chart(es, t_bot2, t_max, ds, piece2_geom,
                          Closure::decay_down, Closure::neumann);

  // The mirrored conformal factor kinks at t = 0, which corrupts the
  // potential entry of that single row; both piece charts carry the smooth
  // (exact-cylinder) value there, so restore it from piece 1.
  gm.glued.Vpot[im] = gm.piece1.Vpot[im];

  gm.gamma1.resize(ns_g);
  gm.gamma2.resize(ns_g);
  for (int i = 0; i < ns_g; ++i) {
    const Real t = t_min + i * ds;
    gm.gamma1[i] = 1.0 - smoothstep5(t + 0.5);
    gm.gamma2[i] = 1.0 - gm.gamma1[i];
  }
  // beta_i = 1 on supp(gamma_i), descending across the neck with a
  // flat-topped derivative profile: corners of fixed width 1 and integrated
  // ramp length exactly T/2, so the bulk slope is exactly 2/T.  A single
  // quintic ramp has vanishing gradient exactly where the piece solutions
  // are still alive (next to the data), which makes the defect decay much
  // faster than the 1/T gradient bound; the flat profile keeps that bound
  // sharp, and the fixed corner shape keeps the prefactor T-independent.
  Eigen::VectorXd tg(ns_g);
  for (int i = 0; i < ns_g; ++i) tg[i] = t_min + i * ds;
  gm.beta1 = descending_cutoff(tg, 0.5, 1.5 + 0.5 * T);
  gm.beta2 = gm.beta1.reverse();
  return gm;
}

Eigen::VectorXd descending_cutoff(const Eigen::VectorXd& t, Real a, Real b) {
  const int n = static_cast<int>(t.size());
  if (!(b > a)) throw ConfigError("descending_cutoff: need b > a");
  const Real w0 = std::min(1.0, (b - a) / 3.0);
  // Derivative shape: saturated quintic rise/fall at the corners, flat top.
  auto dshape = [&](Real u) -> Real {
    if (u <= 0.0 || u >= b - a) return 0.0;
    const Real up = std::min(u / w0, 1.0);
    const Real dn = std::min((b - a - u) / w0, 1.0);
    return smoothstep5(up) * smoothstep5(dn);
  };
  // Cumulative trapezoid on the chart grid itself; normalizing by the same
  // grid integral lands the cutoff at exactly 0 past the ramp.
  Eigen::VectorXd cum(n);
  cum[0] = 0.0;
  for (int i = 1; i < n; ++i) {
    const Real d0 = dshape(t[i - 1] - a), d1 = dshape(t[i] - a);
    cum[i] = cum[i - 1] + 0.5 * (t[i] - t[i - 1]) * (d0 + d1);
  }
  const Real total = cum[n - 1];
  if (!(total > 0))
    throw ConfigError("descending_cutoff: ramp not resolved by the grid");
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i)
    out[i] = std::clamp(1.0 - cum[i] / total, 0.0, 1.0);
  return out;
}

Eigen::MatrixXd parametrix_apply(const GluedModel& gm,
                                 const Eigen::MatrixXd& rho) {
  const int ns = gm.glued.ns, nm = gm.glued.n_modes();
  if (rho.rows() != ns || rho.cols() != nm)
    throw ShapeError("parametrix_apply: field shape mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(ns, nm);

  Eigen::MatrixXd r1 = radial_scale(gm.gamma1.head(gm.n1),
                                    rho.topRows(gm.n1));
  Eigen::MatrixXd f1 = box_solve(gm.piece1, r1);
  out.topRows(gm.n1) += radial_scale(gm.beta1.head(gm.n1), f1);

  const int n2 = gm.glued.ns - gm.off2;
  Eigen::MatrixXd r2 = radial_scale(gm.gamma2.tail(n2), rho.bottomRows(n2));
  Eigen::MatrixXd f2 = box_solve(gm.piece2, r2);
  out.bottomRows(n2) += radial_scale(gm.beta2.tail(n2), f2);
  return out;
}

Eigen::MatrixXd defect_apply(const GluedModel& gm,
                             const Eigen::MatrixXd& rho) {
  return box_apply(gm.glued, parametrix_apply(gm, rho)) - rho;
}

namespace {

// W-adjoint of the parametrix.  Piece solves and box are self-adjoint in the
// discrete measure (piece weights agree with the glued weights on shared
// nodes), so transposing P0 just exchanges the beta and gamma cutoffs.
Eigen::MatrixXd parametrix_adjoint_apply(const GluedModel& gm,
                                         const Eigen::MatrixXd& rho) {
  const int ns = gm.glued.ns, nm = gm.glued.n_modes();
  if (rho.rows() != ns || rho.cols() != nm)
    throw ShapeError("parametrix_adjoint_apply: field shape mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(ns, nm);

  Eigen::MatrixXd r1 = radial_scale(gm.beta1.head(gm.n1), rho.topRows(gm.n1));
  Eigen::MatrixXd f1 = box_solve(gm.piece1, r1);
  out.topRows(gm.n1) += radial_scale(gm.gamma1.head(gm.n1), f1);

  const int n2 = gm.glued.ns - gm.off2;
  Eigen::MatrixXd r2 = radial_scale(gm.beta2.tail(n2), rho.bottomRows(n2));
  Eigen::MatrixXd f2 = box_solve(gm.piece2, r2);
  out.bottomRows(n2) += radial_scale(gm.gamma2.tail(n2), f2);
  return out;
}

}  // namespace

Eigen::MatrixXd defect_adjoint_apply(const GluedModel& gm,
                                     const Eigen::MatrixXd& rho) {
  return parametrix_adjoint_apply(gm, box_apply(gm.glued, rho)) - rho;
}

Real defect_norm_estimate(const GluedModel& gm, int iters, uint64_t seed) {
  const int ns = gm.glued.ns, nm = gm.glued.n_modes();
  Rng rng(seed);
  Eigen::MatrixXd v(ns, nm);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nm; ++j) v(i, j) = rng.gauss();
  const Real nv = chart_norm(gm.glued, v);
  if (!(nv > 0)) return 0.0;
  v /= nv;
  Real sigma2 = 0;
  for (int it = 0; it < iters; ++it) {
    const Eigen::MatrixXd w = defect_adjoint_apply(gm, defect_apply(gm, v));
    sigma2 = chart_inner(gm.glued, v, w);
    const Real wn = chart_norm(gm.glued, w);
    if (!(wn > 0)) return 0.0;
    v = w / wn;
  }
  return std::sqrt(std::max(sigma2, 0.0));
}

Eigen::MatrixXd defect_via_commutators(const GluedModel& gm,
                                       const Eigen::MatrixXd& rho) {
  const int ns = gm.glued.ns, nm = gm.glued.n_modes();
  if (rho.rows() != ns || rho.cols() != nm)
    throw ShapeError("defect_via_commutators: field shape mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(ns, nm);

  const int n2 = ns - gm.off2;
  for (int piece = 0; piece < 2; ++piece) {
    const SpectralChart& ch = piece == 0 ? gm.piece1 : gm.piece2;
    const int n = piece == 0 ? gm.n1 : n2;
    const int off = piece == 0 ? 0 : gm.off2;
    const Eigen::VectorXd gseg = piece == 0 ? gm.gamma1.head(n).eval()
                                            : gm.gamma2.tail(n).eval();
    const Eigen::VectorXd& beta = piece == 0 ? gm.beta1 : gm.beta2;

    Eigen::MatrixXd phi_local =
        box_solve(ch, radial_scale(gseg, rho.middleRows(off, n)));
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(ns, nm);
    phi.middleRows(off, n) = phi_local;
    // [box, M_beta] phi = box(beta phi) - beta box(phi) on the glued grid
    out += box_apply(gm.glued, radial_scale(beta, phi)) -
           radial_scale(beta, box_apply(gm.glued, phi));
  }
  return out;
}

GluedInverseReport glued_inverse(const GluedModel& gm,
                                 const Eigen::MatrixXd& rho, Real tol,
                                 int max_terms) {
  GluedInverseReport rep;
  const Real rho_norm = chart_norm(gm.glued, rho);
  if (!(rho_norm > 0)) {
    rep.f = Eigen::MatrixXd::Zero(rho.rows(), rho.cols());
    return rep;
  }
  Eigen::MatrixXd term = rho, acc = rho;
  Real prev = rho_norm;
  Real ratio_acc = 0;
  int ratio_n = 0;
  int j = 0;
  for (; j < max_terms; ++j) {
    term = -defect_apply(gm, term);
    acc += term;
    const Real tn = chart_norm(gm.glued, term);
    if (prev > 0) {
      ratio_acc += std::log(std::max(tn / prev, 1e-300));
      ++ratio_n;
    }
    prev = tn;
    if (tn <= tol * rho_norm) {
      ++j;
      break;
    }
  }
  rep.terms = j;
  rep.series_ratio = ratio_n ? std::exp(ratio_acc / ratio_n) : 0.0;
  if (prev > tol * rho_norm)
    throw SolverError("glued_inverse: Neumann series did not converge in " +
                      std::to_string(max_terms) + " terms");
  rep.f = parametrix_apply(gm, acc);
  rep.residual_rel =
      chart_norm(gm.glued, box_apply(gm.glued, rep.f) - rho) / rho_norm;
  return rep;
}

ModifiedInverseResult modified_inverse(const SpectralChart& ch,
                                       const Eigen::MatrixXd& rho) {
  ModifiedInverseResult out;
  const Eigen::MatrixXd hhat = normalized_kernel_field(ch);
  out.tau = chart_inner(ch, rho, hhat);
  out.f = box_solve(ch, rho - out.tau * hhat, 0.0, /*deflate_kernel=*/true);
  return out;
}

KernelCensus kernel_census(const SpectralChart& ch, Real tol) {
  KernelCensus c;
  for (const auto& fam : ch.es->families) {
    const TriDiag K = family_matrix(ch, fam.k, fam.m);
    c.op_scale = std::max(c.op_scale,
                          (K.diag.cwiseQuotient(ch.w)).cwiseAbs().maxCoeff());
  }
  std::vector<Real> eigs;
  for (const auto& fe : family_spectra(ch, 4))
    eigs.insert(eigs.end(), fe.lowest.begin(), fe.lowest.end());
  std::sort(eigs.begin(), eigs.end());
  const Real cut = tol * c.op_scale;
  for (Real e : eigs)
    if (e < cut) ++c.dim;
  c.lowest.assign(eigs.begin(), eigs.begin() + std::min<size_t>(6, eigs.size()));
  c.gap = c.dim < static_cast<int>(eigs.size()) ? eigs[c.dim] : 0.0;
  const Eigen::MatrixXd hhat = normalized_kernel_field(ch);
  c.h_box_residual =
      chart_norm(ch, box_apply(ch, hhat)) / std::max(c.op_scale, 1e-300);
  return c;
}

PieceSolveReport invert_on_piece(const SpectralChart& ch,
                                 const Eigen::MatrixXd& rhs, Real fit_lo,
                                 Real fit_hi) {
  PieceSolveReport rep;
  rep.f = box_solve(ch, rhs);
  const Real rn = chart_norm(ch, rhs);
  rep.residual_rel =
      chart_norm(ch, box_apply(ch, rep.f) - rhs) / std::max(rn, 1e-300);

  Real global_max = 0;
  std::vector<Eigen::VectorXd> amp(ch.es->families.size());
  for (size_t fi = 0; fi < ch.es->families.size(); ++fi) {
    const auto& fam = ch.es->families[fi];
    Eigen::VectorXd a = Eigen::VectorXd::Zero(ch.ns);
    for (int idx : fam.mode_index) a += rep.f.col(idx).cwiseAbs2();
    amp[fi] = a.cwiseSqrt();
    global_max = std::max(global_max, amp[fi].maxCoeff());
  }
  for (size_t fi = 0; fi < ch.es->families.size(); ++fi) {
    const auto& fam = ch.es->families[fi];
    if (amp[fi].maxCoeff() < 1e-11 * global_max) continue;
    std::vector<Real> xs, ys;
    for (int i = 0; i < ch.ns; ++i) {
      const Real s = ch.s(i);
      if (s < fit_lo || s > fit_hi) continue;
      if (amp[fi][i] < 1e-13 * global_max) continue;
      xs.push_back(s);
      ys.push_back(amp[fi][i]);
    }
    if (xs.size() < 4) continue;
    const LineFit lf = fit_semilog(xs, ys);
    PieceDecayFit df;
    df.kdeg = fam.k;
    df.m = fam.m;
    df.expected_rate = std::sqrt(1.0 + fam.lambda);
    df.fitted_rate = -lf.slope;
    df.r2 = lf.r2;
    rep.decay.push_back(df);
  }
  return rep;
}

std::vector<NeckSweepPoint> neck_sweep(std::shared_ptr<const EigenSystem> es,
                                       const std::vector<Real>& Ts, Real ds,
                                       int n_probes, uint64_t seed) {
  if (n_probes < 1) throw ConfigError("neck_sweep: need at least one probe");
  std::vector<NeckSweepPoint> out;
  for (Real T : Ts) {
    const GluedModel gm = make_glued_yy(es, T, ds);
    const int ns = gm.glued.ns, nm = gm.glued.n_modes();
    NeckSweepPoint pt;
    pt.T = T;

    // Operator norm of the defect via power iteration on S^T S.  Localized
    // probes understate it badly: a bump in the middle of the neck decays by
    // e^{-T/2} before reaching the cutoff gradients, hiding the 1/T scaling.
    pt.defect_norm = defect_norm_estimate(gm, 25, seed + 77);

    Eigen::MatrixXd first_probe;
    for (int p = 0; p < n_probes; ++p) {
      Rng rng(seed + 1000 * p + static_cast<uint64_t>(T));
      // Probe 0 is a fixed bump spanning the cutoff crossover band; the rest
      // are random bumps in the middle half of the neck, random mode content.
      const Real c = p == 0 ? 0.0 : (rng.uniform() - 0.5) * T;
      const Real width = p == 0 ? 1.0 : 0.5 + rng.uniform();
      Eigen::MatrixXd probe(ns, nm);
      Eigen::VectorXd coef(nm);
      for (int m = 0; m < nm; ++m) coef[m] = rng.gauss();
      coef /= coef.norm();
      const Real t_min = gm.glued.s0;
      for (int i = 0; i < ns; ++i) {
        const Real t = t_min + i * ds;
        probe.row(i) = coef.transpose() * std::exp(-sq((t - c) / width));
      }
      const Real pn = chart_norm(gm.glued, probe);
      pt.p0_gain = std::max(
          pt.p0_gain,
          chart_sobolev(gm.glued, parametrix_apply(gm, probe), 2) / pn);
      if (p == 0) first_probe = probe;
    }

    const GluedInverseReport gi = glued_inverse(gm, first_probe, 1e-11);
    pt.series_terms = gi.terms;
    pt.series_ratio = gi.series_ratio;
    const Eigen::MatrixXd direct = box_solve(gm.glued, first_probe);
    pt.inv_error_rel = chart_norm(gm.glued, gi.f - direct) /
                       chart_norm(gm.glued, direct);

    Real sigma1 = std::numeric_limits<Real>::infinity();
    for (const auto& fe : family_spectra(gm.glued, 1))
      sigma1 = std::min(sigma1, fe.lowest.at(0));
    pt.sigma1 = sigma1;
    out.push_back(pt);
  }
  return out;
}

}  // namespace kummer
