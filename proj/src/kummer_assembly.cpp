#include "kummer/kummer_assembly.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "kummer/ends.hpp"

namespace kummer {

namespace {

// Upper cap of the conformal factor: identity up to a = 0.18 Lmin, constant
// level = 0.20875 Lmin beyond b = 0.2375 Lmin, blended by the antiderivative
// of (1 - smoothstep5) so the slope falls monotonically 1 -> 0 (C^3 overall).
// The level equals a + (b-a)/2 because the quintic blend has mean 1/2.
// Both cap edges sit strictly inside the quarter-lattice cut locus at
// 0.25 Lmin, so the composition h(r) = upcap(core_cap(R r)/R) of the nearest
// fixed-point distance is globally smooth on the torus.
struct UpperCap {
  Real a = 0, w = 0, level = 0;
  explicit UpperCap(Real lmin)
      : a(0.18 * lmin), w(0.0575 * lmin), level(0.20875 * lmin) {}
  Real operator()(Real u) const {
    if (u <= a) return u;
    const Real v = (u - a) / w;
    if (v >= 1.0) return level;
    const Real v2 = v * v;
    // int_0^v (1 - smoothstep5) = v - (2.5 v^4 - 3 v^5 + v^6)
    return a + w * (v - v2 * v2 * (2.5 + v * (-3.0 + v)));
  }
};

Real global_h(const CutoffProfile& cp, const UpperCap& cap, Real r) {
  return cap(core_conformal_cap(cp.R * r) / cp.R);
}

std::shared_ptr<const EigenSystem> cached_spectrum(int max_degree) {
  static std::map<int, std::shared_ptr<const EigenSystem>> cache;
  auto it = cache.find(max_degree);
  if (it != cache.end()) return it->second;
  CrossSectionSpec spec;
  spec.kind = CrossKind::sphere3_quotient;
  spec.max_degree = max_degree;
  auto es = std::make_shared<const EigenSystem>(spectrum(spec));
  cache.emplace(max_degree, es);
  return es;
}

int auto_torus_n(Real R, Real lmax) {
  // dx_a = L_a / n strictly below r_hole / 4 on every axis: start from
  // n >= 4 sqrt(R) Lmax rounded up to a multiple of 4 (floored at 32) and
  // bump past any exact tie so the gluing balls are genuinely resolved.
  const Real need = std::sqrt(R) * lmax;
  int n = std::max(32, 4 * static_cast<int>(std::ceil(need - 1e-12)));
  while (lmax / n >= 0.25 / std::sqrt(R) * (1.0 - 1e-12)) n += 4;
  return n;
}

NeckLayout make_layout(Real R, Real lmin, Real dx, int chart_ns) {
  NeckLayout nl;
  nl.r_hole = 1.0 / std::sqrt(R);
  nl.r_out = std::min(2.2 * nl.r_hole, 0.24 * lmin);
  nl.s_floor = -2.3;
  nl.s_top = std::log(R * std::max(nl.r_out, nl.r_hole * std::exp(0.3)));
  nl.ds = (nl.s_top - nl.s_floor) / (chart_ns - 1);

  // Ownership boundary: aim for the geometric mean of hole and chart edge,
  // clamped so the interface interpolation stencil (reach nodes above
  // r_split plus one cell below r_out) stays inside both grids.
  const Real target = std::sqrt(nl.r_hole * nl.r_out);
  const Real lo = nl.r_hole + dx;
  const Real hi_cubic = nl.r_out - 2.0 * dx;
  const Real hi_linear = nl.r_out - dx;
  if (lo <= hi_cubic) {
    nl.interp_reach = 2;
    nl.r_split = std::clamp(target, lo, hi_cubic);
    nl.solver_ready = true;
  } else if (lo <= hi_linear) {
    nl.interp_reach = 1;
    nl.r_split = std::clamp(target, lo, hi_linear);
    nl.solver_ready = true;
  } else {
    // Degenerate collar (R = 16 class): no interface window. Measurement
    // assembly stays valid; interface solvers must refuse this layout.
    nl.interp_reach = 1;
    nl.r_split = std::min(target, hi_linear);
    nl.solver_ready = false;
  }
  nl.s_split = std::log(R * nl.r_split);
  return nl;
}

}  // namespace

std::array<std::array<Real, 4>, 16> fixed_points(
    const std::array<Real, 4>& lattice) {
  std::array<std::array<Real, 4>, 16> fp{};
  for (int id = 0; id < 16; ++id)
    for (int a = 0; a < 4; ++a)
      fp[id][a] = (id >> a) & 1 ? 0.5 * lattice[a] : 0.0;
  return fp;
}

Real GluedGeometry::h_of_r(Real r) const {
  return global_h(profile, UpperCap(lmin()), r);
}

Real GluedGeometry::cap_level() const { return UpperCap(lmin()).level; }

GluedGeometry assemble(const std::array<Real, 4>& lattice, Real R,
                       const Resolutions& res) {
  for (int a = 0; a < 4; ++a)
    if (!(lattice[a] > 0) || !std::isfinite(lattice[a]))
      throw ConfigError("assemble: lattice length " + std::to_string(a) +
                        " = " + format_double(lattice[a]) +
                        " must be positive and finite");
  if (!(R >= 16.0) || !std::isfinite(R))
    throw ConfigError("assemble: gluing parameter R = " + format_double(R) +
                      " below the supported minimum 16");
  if (res.chart_ns < 16)
    throw ConfigError("assemble: chart_ns = " + std::to_string(res.chart_ns) +
                      " (need >= 16 radial samples)");

  GluedGeometry g;
  g.lattice = lattice;
  g.R = R;
  g.T = 0.5 * std::log(R);
  g.profile = CutoffProfile(R);
  g.profile.base = RadialProfile{res.profile};

  const Real lmin = g.lmin();
  const Real lmax =
      std::max(std::max(lattice[0], lattice[1]), std::max(lattice[2], lattice[3]));
  const Real r_hole = 1.0 / std::sqrt(R);
  if (r_hole > 0.25 * lmin * (1.0 + 1e-12))
    throw ConfigError(
        "assemble: gluing balls overlap: r_hole = " + format_double(r_hole) +
        " exceeds a quarter of the shortest lattice length " +
        format_double(lmin));

  const int n = res.torus_n > 0 ? res.torus_n : auto_torus_n(R, lmax);
  g.grid = make_torus_grid(lattice, n);
  const Real dx = g.grid.dx_max();
  if (dx >= 0.25 * r_hole * (1.0 - 1e-12))
    throw ConfigError("assemble: torus grid under-resolved: dx_max = " +
                      format_double(dx) + " must stay strictly below "
                      "r_hole/4 = " + format_double(0.25 * r_hole) +
                      " (torus_n = " + std::to_string(n) + ")");

  g.es = cached_spectrum(res.max_degree);
  g.fps = fixed_points(lattice);
  g.neck = make_layout(R, lmin, dx, res.chart_ns);

  // Positivity of the cutoff profile across the ramp annulus.
  {
    const Real lo = g.profile.r_ramp_lo(), hi = g.profile.r_ramp_hi();
    for (int i = 0; i <= 400; ++i) {
      const Real r = lo + (hi - lo) * i / 400.0;
      const Real m = g.profile.positivity_margin(r * r);
      if (!(m > 0))
        throw PositivityError(
            "assemble: cutoff profile loses positivity at R = " +
            format_double(R) + " (margin " + format_double(m) + ")");
    }
  }

  // --- torus fields ---------------------------------------------------------
  const UpperCap cap(lmin);
  const std::int64_t m = g.grid.size();
  g.h.resize(m);
  g.eta.setZero(m);
  g.det4.setOnes(m);
  g.A.resize(m);
  g.role.assign(m, static_cast<std::uint8_t>(NodeRole::unused));
  g.owner.assign(m, -1);

  const Real r_owner = g.neck.r_out + 2.0 * dx;
  for (std::int64_t i = 0; i < m; ++i) {
    // index-space identification keeps the assembled fields exactly even
    std::array<Real, 4> rel{};
    const int id = nearest_fixed_point_node(g.grid, i, &rel);
    const Real r = std::sqrt(rel[0] * rel[0] + rel[1] * rel[1] +
                             rel[2] * rel[2] + rel[3] * rel[3]);
    g.h[i] = global_h(g.profile, cap, r);
    if (r <= r_owner) g.owner[i] = static_cast<std::int16_t>(id);

    if (r >= r_hole) {
      // exactly flat branch
      g.A.a11[i] = 0.5;
      g.A.a22[i] = 0.5;
    } else if (r == 0.0) {
      // fixed-point node: placeholder values, never read (role unused)
      g.A.a11[i] = 0.5;
      g.A.a22[i] = 0.5;
    } else {
      // resolved/cutoff branch, evaluated in scale-invariant Y-chart units
      const Real rho_y = (R * r) * (R * r);
      const Real p = g.profile.p(rho_y);
      const Real s = g.profile.s(rho_y);
      const Complex z1(R * rel[0], R * rel[1]);
      const Complex z2(R * rel[2], R * rel[3]);
      const Herm2 a = kahler_matrix(p, s, z1, z2) * 0.5;
      g.A.a11[i] = a.a11;
      g.A.a22[i] = a.a22;
      g.A.re12[i] = a.a12.real();
      g.A.im12[i] = a.a12.imag();
      g.eta[i] = g.profile.eta(rho_y);
      g.det4[i] = 4.0 * a.det();
    }

    if (r >= g.neck.r_split)
      g.role[i] = static_cast<std::uint8_t>(NodeRole::active);
    else if (r >= 2.0 * dx)
      g.role[i] = static_cast<std::uint8_t>(NodeRole::fill);
  }

  // ghost pass: inactive nodes with an active axis neighbor
  for (std::int64_t i = 0; i < m; ++i) {
    if (g.role[i] == static_cast<std::uint8_t>(NodeRole::active)) continue;
    bool ghost = false;
    for (int a = 0; a < 4 && !ghost; ++a)
      for (int d = -1; d <= 1 && !ghost; d += 2)
        ghost = g.role[g.grid.shift(i, a, d)] ==
                static_cast<std::uint8_t>(NodeRole::active);
    if (ghost) g.role[i] = static_cast<std::uint8_t>(NodeRole::ghost);
  }

  g.Vdisc = conj_potential(g.grid, g.h);

  // --- neck charts (one per fixed point, built independently) ---------------
  const Real R_ = R;
  RadialSampler sampler = [cp = g.profile, cap, R_](Real s) {
    RadialPoint pt;
    pt.rho = std::exp(2.0 * s);
    pt.P = cp.p(pt.rho);
    pt.S = cp.s(pt.rho);
    pt.h_phys = global_h(cp, cap, std::exp(s) / R_);
    pt.h = R_ * pt.h_phys;  // assembly scale: the conjugated rows are
                            // invariant under the joint chart rescaling
    return pt;
  };
  // Cylinder-frame measurement chart: h = e^s with no cap, over the fixed
  // band s in [T - 1, T + 0.3] around the annulus support [T - log 2, T],
  // with an R-independent step. In this frame eta is self-similar across R
  // and the discrete norm operators have identical rows at every R (up to
  // O(R^-2)), so measured decay slopes carry no resolution bias. The solver
  // charts below carry the capped global h over the full neck window.
  RadialSampler cyl_sampler = [cp = g.profile, R_](Real s) {
    RadialPoint pt;
    pt.rho = std::exp(2.0 * s);
    pt.P = cp.p(pt.rho);
    pt.S = cp.s(pt.rho);
    pt.h = std::exp(s);
    pt.h_phys = pt.h / R_;
    return pt;
  };
  g.measure_chart = build_chart(g.es, g.T - 1.0, g.T + 0.3, 0.005, cyl_sampler,
                                Closure::neumann, Closure::dirichlet);
  g.measure_eta.resize(g.measure_chart.ns);
  for (int i = 0; i < g.measure_chart.ns; ++i)
    g.measure_eta[i] = g.profile.eta(std::exp(2.0 * g.measure_chart.s(i)));

  g.chart.reserve(16);
  g.chart_eta.resize(16);
  g.chart_p.resize(16);
  g.chart_s.resize(16);
  for (int f = 0; f < 16; ++f) {
    g.chart.push_back(build_chart(g.es, g.neck.s_floor, g.neck.s_top,
                                  g.neck.ds, sampler, Closure::neumann,
                                  Closure::dirichlet));
    const int ns = g.chart[f].ns;
    g.chart_eta[f].resize(ns);
    g.chart_p[f].resize(ns);
    g.chart_s[f].resize(ns);
    for (int i = 0; i < ns; ++i) {
      const Real rho = std::exp(2.0 * g.chart[f].s(i));
      g.chart_eta[f][i] = g.profile.eta(rho);
      g.chart_p[f][i] = g.profile.p(rho);
      g.chart_s[f][i] = g.profile.s(rho);
    }
  }
  return g;
}

GluedGeometry assemble_lattice_matrix(const Eigen::Matrix4d& lattice, Real R,
                                      const Resolutions& res) {
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j && lattice(i, j) != 0.0)
        throw ConfigError(
            "assemble: only rectangular lattices are supported; off-diagonal "
            "entry (" +
            std::to_string(i) + "," + std::to_string(j) + ") = " +
            format_double(lattice(i, j)));
  return assemble({lattice(0, 0), lattice(1, 1), lattice(2, 2), lattice(3, 3)},
                  R, res);
}

// --- measured scalars --------------------------------------------------------

Real sup_eta(const GluedGeometry& geom) {
  Real sup = geom.eta.cwiseAbs().maxCoeff();
  for (int f = 0; f < 16; ++f)
    sup = std::max(sup, geom.chart_eta[f].cwiseAbs().maxCoeff());
  return sup;
}

Real sup_scaled_eta(const GluedGeometry& geom) {
  Real sup = 0;
  const auto& ch = geom.chart[0];
  for (int i = 0; i < ch.ns; ++i)
    sup = std::max(sup, cube(geom.R * ch.h[i]) *
                            std::abs(geom.chart_eta[0][i]));
  for (std::int64_t i = 0; i < geom.grid.size(); ++i)
    sup = std::max(sup, cube(geom.R * geom.h[i]) * std::abs(geom.eta[i]));
  return sup;
}

std::vector<Real> eta_norms(const GluedGeometry& geom, int kmax) {
  if (kmax < 0 || kmax > 3)
    throw ConfigError("eta_norms: order k = " + std::to_string(kmax) +
                      " outside the supported range 0..3");
  // eta is radial and supported on r <= r_hole, strictly inside the
  // measurement band, so the sixteen chart integrals cover it exactly once.
  // The constant cross-section mode has unit-normalized value 1/pi on the
  // quotient sphere, hence coefficient pi * eta(s). Norms are taken on the
  // cylinder-frame measurement chart, where eta is self-similar across R.
  const auto& ch = geom.measure_chart;
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(ch.ns, ch.n_modes());
  f.col(0) = kPi * geom.measure_eta;
  std::vector<Real> out(kmax + 1);
  for (int k = 0; k <= kmax; ++k)
    out[k] = 4.0 * chart_sobolev(ch, f, k);  // 16 identical necks: x sqrt(16)
  return out;
}

Real eta_l2_direct(const GluedGeometry& geom) {
  const auto& ch = geom.measure_chart;
  Real acc = 0;
  for (int i = 0; i < ch.ns; ++i)
    acc += ch.w[i] * sq(kPi * geom.measure_eta[i]);
  return 4.0 * std::sqrt(acc);
}

Real flat_volume(const GluedGeometry& geom) {
  return 0.5 * geom.lattice[0] * geom.lattice[1] * geom.lattice[2] *
         geom.lattice[3];
}

namespace {
// integral of (4 det A - 1) over one gluing ball, full-cover measure:
// the integrand is exactly -eta/(1+eta) * (volume element), supported on the
// ramp annulus r in [r_hole/2, r_hole]; composite Simpson in r is
// cancellation-free (no subtraction of near-equal volumes).
Real ball_volume_defect(const GluedGeometry& geom) {
  const Real R = geom.R;
  const Real lo = 0.5 / std::sqrt(R), hi = 1.0 / std::sqrt(R);
  const int n = 4000;  // even
  const Real dr = (hi - lo) / n;
  Real acc = 0;
  for (int i = 0; i <= n; ++i) {
    const Real r = lo + i * dr;
    const Real eta = geom.profile.eta(sq(R * r));
    const Real f = -eta / (1.0 + eta) * 2.0 * kPi * kPi * cube(r);
    const Real w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * f;
  }
  return acc * dr / 3.0;
}
}  // namespace

Real omega_volume(const GluedGeometry& geom) {
  // The resolved profile preserves volume exactly outside the ramp
  // (det[d dbar psi] = 1 there), so the whole deviation from the flat volume
  // is the ramp-annulus defect, once per fixed point, halved for the orbifold.
  return flat_volume(geom) + 8.0 * ball_volume_defect(geom);
}

Real lambda_ratio(const GluedGeometry& geom) {
  return 1.0 + 8.0 * ball_volume_defect(geom) / flat_volume(geom);
}

NeckAgreement neck_agreement(const GluedGeometry& geom) {
  NeckAgreement na;
  for (int f = 1; f < 16; ++f) {
    na.dev_eta = std::max(
        na.dev_eta,
        (geom.chart_eta[f] - geom.chart_eta[0]).cwiseAbs().maxCoeff());
    na.dev_h = std::max(
        na.dev_h, (geom.chart[f].h - geom.chart[0].h).cwiseAbs().maxCoeff());
  }
  return na;
}

Real h_interface_jump(const GluedGeometry& geom) {
  // Sample the interface band [r_split, r_out] on a few spheres around each
  // fixed point and compare the torus-interpolated conformal factor with the
  // chart's radial profile (the same closed form, so the jump measures pure
  // interpolation error).
  const int n_r = 5, n_dir = 24;
  Rng rng(20260816);
  Real sup = 0;
  for (int f = 0; f < 16; ++f) {
    for (int ir = 0; ir < n_r; ++ir) {
      const Real r = geom.neck.r_split +
                     (geom.neck.r_out - geom.neck.r_split) * ir / (n_r - 1.0);
      for (int d = 0; d < n_dir; ++d) {
        std::array<Real, 4> u{rng.gauss(), rng.gauss(), rng.gauss(),
                              rng.gauss()};
        Real nn = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2] +
                            u[3] * u[3]);
        if (nn < 1e-12) continue;
        std::array<Real, 4> x;
        for (int a = 0; a < 4; ++a) x[a] = geom.fps[f][a] + r * u[a] / nn;
        const Real hi = interpolate(geom.grid, geom.h, x, geom.neck.interp_reach);
        sup = std::max(sup, std::abs(hi - geom.h_of_r(r)));
      }
    }
  }
  return sup;
}

ClosednessScan closedness_scan(const GluedGeometry& geom) {
  // d omega = 0 pointwise for an i d dbar potential; the discrete residual
  //   max(|d_{z1} A_{2 kbar} - d_{z2} A_{1 kbar}|, k = 1, 2)
  // measures the stencil error of the assembled form. `band` covers
  // r >= r_hole/2 (cutoff annulus plus the flat complement); `flat` covers
  // nodes whose whole stencil sees the constant flat branch and is exactly 0.
  const auto& g = geom.grid;
  const std::int64_t m = g.size();
  // complex derivative d/dz1 = (d/dx1 - i d/dx2)/2, d/dz2 = (d/dx3 - i d/dx4)/2
  const TorusField a11_3 = axis_derivative(g, geom.A.a11, 2, 1);
  const TorusField a11_4 = axis_derivative(g, geom.A.a11, 3, 1);
  const TorusField a22_1 = axis_derivative(g, geom.A.a22, 0, 1);
  const TorusField a22_2 = axis_derivative(g, geom.A.a22, 1, 1);
  const TorusField re_1 = axis_derivative(g, geom.A.re12, 0, 1);
  const TorusField re_2 = axis_derivative(g, geom.A.re12, 1, 1);
  const TorusField re_3 = axis_derivative(g, geom.A.re12, 2, 1);
  const TorusField re_4 = axis_derivative(g, geom.A.re12, 3, 1);
  const TorusField im_1 = axis_derivative(g, geom.A.im12, 0, 1);
  const TorusField im_2 = axis_derivative(g, geom.A.im12, 1, 1);
  const TorusField im_3 = axis_derivative(g, geom.A.im12, 2, 1);
  const TorusField im_4 = axis_derivative(g, geom.A.im12, 3, 1);

  const Real r_lo = 0.5 * geom.neck.r_hole;
  const Real r_flat = geom.neck.r_hole + 3.0 * g.dx_max();
  ClosednessScan scan;
  for (std::int64_t i = 0; i < m; ++i) {
    const auto x = g.point(i);
    const Real r = half_lattice_distance(g, x);
    if (r < r_lo) continue;
    // k = 1: d1 A_{2 1bar} - d2 A_{1 1bar}; A_{2 1bar} = conj(A12)
    const Complex d1A21 =
        0.5 * Complex(re_1[i] - im_2[i], -(im_1[i] + re_2[i]));
    const Complex d2A11 = 0.5 * Complex(a11_3[i], -a11_4[i]);
    // k = 2: d1 A_{2 2bar} - d2 A_{1 2bar}; A_{1 2bar} = A12
    const Complex d1A22 = 0.5 * Complex(a22_1[i], -a22_2[i]);
    const Complex d2A12 = 0.5 * Complex(re_3[i] + im_4[i], im_3[i] - re_4[i]);
    const Real res =
        std::max(std::abs(d1A21 - d2A11), std::abs(d1A22 - d2A12));
    scan.band = std::max(scan.band, res);
    if (r >= r_flat) scan.flat = std::max(scan.flat, res);
  }
  return scan;
}

Real closedness_residual(const GluedGeometry& geom) {
  return closedness_scan(geom).band;
}

Real chart_closedness_residual(const GluedGeometry& geom, Real corner_margin) {
  // The chart potential is radial, so closedness reduces to the identity
  // dp/ds = 2 rho s on the log-radial grid. Evaluate with the interior
  // 4th-order 5-point first-derivative stencil. The cutoff ramp ends at
  // s = T - log 2 and s = T are C^2 corners where the stencil degrades to
  // second order; corner_margin > 0 excludes bands of that half-width
  // around them, on which the profile is smooth and the full stencil order
  // is observed.
  Real sup = 0;
  const Real ds = geom.neck.ds;
  const Real c1 = geom.T - std::log(2.0), c2 = geom.T;
  for (std::size_t c = 0; c < geom.chart_p.size(); ++c) {
    const auto& P = geom.chart_p[c];
    const auto& S = geom.chart_s[c];
    const auto n = P.size();
    for (Eigen::Index i = 2; i + 2 < n; ++i) {
      const Real s = geom.neck.s_floor + ds * static_cast<Real>(i);
      if (std::abs(s - c1) < corner_margin || std::abs(s - c2) < corner_margin)
        continue;
      const Real dp = (P[i - 2] - 8.0 * P[i - 1] + 8.0 * P[i + 1] - P[i + 2]) /
                      (12.0 * ds);
      const Real rho = std::exp(2.0 * s);
      sup = std::max(sup, std::abs(dp - 2.0 * rho * S[i]));
    }
  }
  return sup;
}

}  // namespace kummer
