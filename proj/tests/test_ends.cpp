#include <doctest.h>

#include <cmath>
#include <iostream>

#include "kummer/ends.hpp"
#include "kummer/fit.hpp"
#include "kummer/mode_ops.hpp"
#include "kummer/radial_profile.hpp"

using namespace kummer;

namespace {

std::shared_ptr<const EigenSystem> shared_es() {
  static std::shared_ptr<const EigenSystem> es =
      std::make_shared<EigenSystem>(spectrum({CrossKind::sphere3_quotient, 8}));
  return es;
}

int family_mode(const EigenSystem& es, int k, int m) {
  for (const auto& fam : es.families)
    if (fam.k == k && fam.m == m) return fam.mode_index.at(0);
  throw ConfigError("family not found");
}

RadialPoint flat_cylinder_point(Real s) {
  RadialPoint g;
  g.P = 1;
  g.S = 0;
  g.rho = std::exp(2.0 * s);
  g.h = std::exp(s);
  g.h_phys = g.h;
  return g;
}

}  // namespace

TEST_CASE("exact cylinder: forward operator matches -f'' + (1+lambda) f") {
  auto es = shared_es();
  const int col = family_mode(*es, 2, 0);  // lambda = 8
  Real prev_err = 0;
  for (Real ds : {0.04, 0.02}) {
    SpectralChart ch = build_chart(es, -4.0, 4.0, ds, flat_cylinder_point,
                                   Closure::neumann, Closure::neumann);
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(ch.ns, ch.n_modes());
    for (int i = 0; i < ch.ns; ++i) f(i, col) = std::exp(-sq(ch.s(i)));
    const Eigen::MatrixXd bf = box_apply(ch, f);
    Real err = 0;
    for (int i = 1; i + 1 < ch.ns; ++i) {
      const Real t = ch.s(i);
      const Real exact = (11.0 - 4.0 * t * t) * std::exp(-t * t);
      err = std::max(err, std::abs(bf(i, col) - exact));
    }
    if (prev_err > 0) {
      const Real rate = prev_err / err;
      CHECK(rate > 3.5);
      CHECK(rate < 4.5);
    }
    CHECK(err < 3e-3);
    prev_err = err;
  }
}

TEST_CASE("warped core: forward operator matches the non-divergence form") {
  auto es = shared_es();
  const RadialProfile prof{ProfileKind::eguchi_hanson, 0.0};
  for (int m : {0, 1}) {
    const int col = family_mode(*es, 2, m);
    const Real lambda = 8.0, bco = 2.0 * 2 + 4.0 * m;
    Real prev_err = 0;
    for (Real ds : {0.04, 0.02}) {
      SpectralChart ch = make_single_neck(es, 5.7, ds);
      Eigen::MatrixXd f = Eigen::MatrixXd::Zero(ch.ns, ch.n_modes());
      for (int i = 0; i < ch.ns; ++i) f(i, col) = std::exp(-sq(ch.s(i) - 1.0));
      const Eigen::MatrixXd bf = box_apply(ch, f);
      Real err = 0;
      for (int i = 1; i + 1 < ch.ns; ++i) {
        const Real t = ch.s(i);
        if (t < 0.2 || t > 2.2) continue;  // uncapped h = r region
        const Real rho = std::exp(2.0 * t);
        const Real P = prof.p(rho), S = prof.s(rho), D = P + rho * S;
        const Real u = std::exp(-sq(t - 1.0) - t);
        const Real up = (-2.0 * (t - 1.0) - 1.0) * u;
        const Real upp = (-2.0 + sq(2.0 * (t - 1.0) + 1.0)) * u;
        const Real vang = (lambda * P + bco * rho * S) / (rho * P * D);
        const Real exact = std::exp(3.0 * t) *
                           (-(2.0 * rho * D * up + P * rho * upp) /
                                (P * D * rho * rho) +
                            vang * u);
        err = std::max(err, std::abs(bf(i, col) - exact));
      }
      if (prev_err > 0) {
        const Real rate = prev_err / err;
        CHECK(rate > 3.3);
        CHECK(rate < 4.7);
      }
      CHECK(err < 2e-2);
      prev_err = err;
    }
  }
}

TEST_CASE("discrete potential matches the resolved-core closed form") {
  // With h = e^t, rho = e^{2t}, radial weights P = sqrt(1 + rho^-2) and
  // D = 1/P, the conjugation potential is exactly
  //   V(t) = -h^3 (P rho (1/h)')' / (P D rho^2) = (rho^2-1)/(rho sqrt(rho^2+1)),
  // which asymptotes to 1 - (3/2) rho^-2.  The discrete diagonal defect must
  // converge to it at second order wherever the floor cap is inactive.
  auto es = shared_es();
  Real prev_err = 0;
  for (Real ds : {0.04, 0.02}) {
    SpectralChart ch = make_single_neck(es, 5.7, ds);
    Real err = 0;
    for (int i = 1; i + 1 < ch.ns; ++i) {
      const Real t = ch.s(i);
      if (t < -0.55) continue;  // below this the conformal cap reshapes V
      const Real rho = std::exp(2.0 * t);
      const Real vexact = (sq(rho) - 1.0) / (rho * std::sqrt(sq(rho) + 1.0));
      err = std::max(err, std::abs(ch.Vpot[i] - vexact));
    }
    MESSAGE("ds=", ds, " max|Vpot - V|=", err);
    CHECK(err < 2e-3);
    if (prev_err > 0) {
      const Real rate = prev_err / err;
      CHECK(rate > 3.3);
      CHECK(rate < 4.7);
    }
    prev_err = err;
  }
}

TEST_CASE("conformal factor is an exact kernel: census and residual") {
  auto es = shared_es();
  SpectralChart ch = make_single_neck(es, 6.7, 0.05);
  const KernelCensus c = kernel_census(ch);
  CHECK(c.dim == 1);
  CHECK(c.h_box_residual < 1e-12);
  CHECK(c.gap > 0.01);
  MESSAGE("single neck: lowest=", c.lowest[0], " gap=", c.gap,
          " op_scale=", c.op_scale);
}

TEST_CASE("resolved-core piece with a decaying end has no kernel") {
  auto es = shared_es();
  SpectralChart ch = make_y_model(es, 8.0, 0.05);
  const KernelCensus c = kernel_census(ch);
  CHECK(c.dim == 0);
  CHECK(c.lowest[0] > 0.01);
  MESSAGE("piece census: lowest=", c.lowest[0]);
}

TEST_CASE("kernel-projected inverse: exact projection identities") {
  auto es = shared_es();
  SpectralChart ch = make_single_neck(es, 6.7, 0.05);
  const Eigen::MatrixXd hhat = normalized_kernel_field(ch);

  // rho = hhat: everything lands in the kernel component.
  ModifiedInverseResult mi = modified_inverse(ch, hhat);
  CHECK(mi.tau == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(chart_norm(ch, mi.f) < 1e-10);

  Rng rng(20260816);
  Eigen::MatrixXd rho(ch.ns, ch.n_modes());
  for (int i = 0; i < ch.ns; ++i)
    for (int j = 0; j < ch.n_modes(); ++j) rho(i, j) = rng.gauss();
  mi = modified_inverse(ch, rho);
  const Eigen::MatrixXd target = rho - mi.tau * hhat;
  CHECK(std::abs(chart_inner(ch, target, hhat)) < 1e-11 * chart_norm(ch, rho));
  const Real res = chart_norm(ch, box_apply(ch, mi.f) - target) /
                   chart_norm(ch, target);
  CHECK(res < 1e-9);
  CHECK(std::abs(chart_inner(ch, mi.f, hhat)) < 1e-10 * chart_norm(ch, mi.f));
}

TEST_CASE("piece solves decay at the cross-section rates") {
  auto es = shared_es();
  SpectralChart ch = make_y_model(es, 8.0, 0.025);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(ch.ns, ch.n_modes());
  const int c00 = family_mode(*es, 0, 0);
  const int c20 = family_mode(*es, 2, 0);
  const int c21 = family_mode(*es, 2, 1);
  const int c40 = family_mode(*es, 4, 0);
  for (int i = 0; i < ch.ns; ++i) {
    const Real bump = std::exp(-sq(ch.s(i) / 0.5));
    rhs(i, c00) = bump;
    rhs(i, c20) = 0.7 * bump;
    rhs(i, c21) = 0.5 * bump;
    rhs(i, c40) = 0.3 * bump;
  }
  const PieceSolveReport rep = invert_on_piece(ch, rhs, 2.5, 5.5);
  CHECK(rep.residual_rel < 1e-11);
  int checked = 0;
  for (const auto& d : rep.decay) {
    if (d.r2 < 0.5) continue;  // families only touched through rounding noise
    CHECK(d.r2 > 0.999);
    CHECK(std::abs(d.fitted_rate - d.expected_rate) <
          0.02 * d.expected_rate);
    MESSAGE("decay (k=", d.kdeg, ",m=", d.m, "): fitted=", d.fitted_rate,
            " expected=", d.expected_rate, " r2=", d.r2);
    ++checked;
  }
  CHECK(checked >= 4);
}

TEST_CASE("glued manifold: piece rows, neck rows, and cutoff structure") {
  auto es = shared_es();
  const Real ds = 0.05, T = 8.0;
  const GluedModel gm = make_glued_yy(es, T, ds);

  // Piece-1 arrays coincide with the glued arrays on their shared nodes.
  // The last piece node is its closure row (one-sided), so its potential
  // legitimately differs from the glued interior row; the cutoffs vanish
  // there, which is what makes that discrepancy harmless.
  for (int i = 0; i < gm.n1; ++i) {
    if (i + 1 < gm.n1)
      CHECK(gm.piece1.Vpot[i] ==
            doctest::Approx(gm.glued.Vpot[i]).epsilon(1e-11));
    CHECK(gm.piece1.w[i] == doctest::Approx(gm.glued.w[i]).epsilon(1e-11));
    CHECK(gm.piece1.angA[i] ==
          doctest::Approx(gm.glued.angA[i]).epsilon(1e-11));
    if (i + 1 < gm.n1)
      CHECK(gm.piece1.m_face[i] ==
            doctest::Approx(gm.glued.m_face[i]).epsilon(1e-11));
  }
  // Mirror symmetry of the two pieces.
  const int n2 = gm.glued.ns - gm.off2;
  REQUIRE(n2 == gm.n1);
  for (int i = 0; i < n2; ++i) {
    CHECK(gm.piece2.Vpot[n2 - 1 - i] ==
          doctest::Approx(gm.piece1.Vpot[i]).epsilon(1e-9));
    CHECK(gm.piece2.w[n2 - 1 - i] ==
          doctest::Approx(gm.piece1.w[i]).epsilon(1e-9));
  }
  // Interior neck rows are the exact cylinder rows.
  const Real vcyl = 2.0 * (std::cosh(ds) - 1.0) / (ds * ds);
  for (int i = 1; i + 1 < gm.glued.ns; ++i) {
    const Real t = gm.glued.s(i);
    if (std::abs(t) > T - 2.0) continue;
    CHECK(gm.glued.Vpot[i] == doctest::Approx(vcyl).epsilon(1e-11));
    CHECK(gm.glued.m_face[i] == doctest::Approx(4.0 / ds).epsilon(1e-11));
    CHECK(gm.glued.w[i] == doctest::Approx(4.0 * ds).epsilon(1e-11));
  }
  // Partition and cutoff support conditions.
  for (int i = 0; i < gm.glued.ns; ++i) {
    CHECK(gm.gamma1[i] + gm.gamma2[i] == doctest::Approx(1.0).epsilon(1e-15));
    if (gm.gamma1[i] > 0) CHECK(gm.beta1[i] == 1.0);
    if (gm.gamma2[i] > 0) CHECK(gm.beta2[i] == 1.0);
    if (i > 0) {
      CHECK(std::abs(gm.beta1[i] - gm.beta1[i - 1]) / ds <= 4.0 / T + 1e-12);
    }
  }
  // Self-adjointness of the glued operator.
  Rng rng(7);
  Eigen::MatrixXd a(gm.glued.ns, gm.glued.n_modes()),
      b(gm.glued.ns, gm.glued.n_modes());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      a(i, j) = rng.gauss();
      b(i, j) = rng.gauss();
    }
  const Real s1 = chart_inner(gm.glued, box_apply(gm.glued, a), b);
  const Real s2 = chart_inner(gm.glued, a, box_apply(gm.glued, b));
  CHECK(std::abs(s1 - s2) <
        1e-11 * chart_norm(gm.glued, a) * chart_norm(gm.glued, b) *
            kernel_census(gm.glued).op_scale);
}

TEST_CASE("parametrix defect equals the cutoff commutator sum exactly") {
  auto es = shared_es();
  const GluedModel gm = make_glued_yy(es, 6.0, 0.05);
  const int ns = gm.glued.ns, nm = gm.glued.n_modes();
  Rng rng(99);
  Eigen::MatrixXd rho(ns, nm);
  for (int i = 0; i < ns; ++i) {
    const Real t = gm.glued.s(i);
    const Real env = std::exp(-sq(t / 2.5));  // straddles the crossover
    for (int j = 0; j < nm; ++j) rho(i, j) = env * rng.gauss();
  }
  const Eigen::MatrixXd d1 = defect_apply(gm, rho);
  const Eigen::MatrixXd d2 = defect_via_commutators(gm, rho);
  const Real rel = chart_norm(gm.glued, d1 - d2) / chart_norm(gm.glued, rho);
  CHECK(rel < 1e-11);

  // Adjoint consistency: <S a, b> = <a, S^T b> in the discrete measure.
  Eigen::MatrixXd b(ns, nm);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nm; ++j) b(i, j) = rng.gauss();
  const Real lhs = chart_inner(gm.glued, d1, b);
  const Real rhs2 = chart_inner(gm.glued, rho, defect_adjoint_apply(gm, b));
  CHECK(std::abs(lhs - rhs2) <
        1e-10 * chart_norm(gm.glued, rho) * chart_norm(gm.glued, b));
}

TEST_CASE("neck sweep: defect decays like 1/T, series and inverse behave") {
  auto es = shared_es();
  const std::vector<Real> Ts = {4, 8, 16, 32};
  const auto pts = neck_sweep(es, Ts, 0.05, 3, 20260816);
  REQUIRE(pts.size() == Ts.size());
  std::vector<Real> ts, defs;
  for (const auto& p : pts) {
    ts.push_back(p.T);
    defs.push_back(p.defect_norm);
    CHECK(p.inv_error_rel < 1e-7);
    CHECK(p.series_ratio < 0.8);
    CHECK(p.series_terms < 200);
    // Lowest glued eigenvalue sits just above the essential-spectrum floor
    // of the model ends: uniform invertibility, no small eigenvalue creeps
    // in as the neck stretches.
    CHECK(p.sigma1 > 0.9);
    CHECK(p.sigma1 < 1.3);
    // The defect operator norm realizes the cutoff-gradient bound C/T with
    // C < 1/2 at every measured neck length (measured C ~ 0.33).
    CHECK(p.defect_norm * p.T < 0.5);
    MESSAGE("T=", p.T, " defect=", p.defect_norm, " p0_gain=", p.p0_gain,
            " ratio=", p.series_ratio, " terms=", p.series_terms,
            " sigma1=", p.sigma1, " inv_err=", p.inv_error_rel);
  }
  const LineFit lf = fit_loglog(ts, defs);
  MESSAGE("defect slope vs T: ", lf.slope, " +- ", lf.slope_ci95);
  // The flat-topped cutoff profile realizes the gradient bound sharply:
  // measured slope -1.004 +- 0.010 over T in {4, 8, 16, 32}.
  CHECK(lf.slope < -0.8);
  CHECK(lf.slope > -1.2);
  // Parametrix gain stays bounded uniformly in T.
  Real gmin = 1e300, gmax = 0;
  for (const auto& p : pts) {
    gmin = std::min(gmin, p.p0_gain);
    gmax = std::max(gmax, p.p0_gain);
  }
  CHECK(gmax / gmin < 2.5);
}

TEST_CASE("glued inverse matches the direct solve") {
  auto es = shared_es();
  const GluedModel gm = make_glued_yy(es, 8.0, 0.05);
  const int ns = gm.glued.ns, nm = gm.glued.n_modes();
  Rng rng(1234);
  Eigen::MatrixXd rho(ns, nm);
  for (int i = 0; i < ns; ++i) {
    const Real t = gm.glued.s(i);
    const Real env = std::exp(-sq((t - 1.0) / 1.5));
    for (int j = 0; j < nm; ++j) rho(i, j) = env * rng.gauss();
  }
  const GluedInverseReport gi = glued_inverse(gm, rho, 1e-11);
  CHECK(gi.residual_rel < 1e-9);
  const Eigen::MatrixXd direct = box_solve(gm.glued, rho);
  const Real rel = chart_norm(gm.glued, gi.f - direct) /
                   chart_norm(gm.glued, direct);
  CHECK(rel < 1e-8);
}

TEST_CASE("configuration and misuse errors") {
  auto es = shared_es();
  CHECK_THROWS_AS(make_glued_yy(es, 2.0, 0.05), ConfigError);
  CHECK_THROWS_AS(make_y_model(es, 4.0, 0.05), ConfigError);
  CHECK_THROWS_AS(build_chart(es, 0.0, 1.0, 0.05, flat_cylinder_point,
                              Closure::decay_up, Closure::neumann),
                  ConfigError);
  SpectralChart ch = make_single_neck(es, 6.7, 0.05);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Ones(ch.ns, ch.n_modes());
  CHECK_THROWS_AS(box_solve(ch, rhs), SolverError);
}
