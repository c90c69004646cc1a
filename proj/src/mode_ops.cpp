#include "kummer/mode_ops.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace kummer {

namespace {

Real closure_kappa(Closure c, Real lambda, bool at_top, Real eta) {
  switch (c) {
    case Closure::neumann:
    case Closure::dirichlet:
      return 0.0;
    case Closure::decay_down:
      if (at_top)
        throw ConfigError("decay_down closure is only valid at the bottom end");
      return std::sqrt(1.0 + lambda) - eta;
    case Closure::decay_up:
      if (!at_top)
        throw ConfigError("decay_up closure is only valid at the top end");
      return std::sqrt(1.0 + lambda) + eta;
  }
  throw ConfigError("unknown closure");
}

// Family matrix without potential/closures: the Sobolev generator
// N - 1 = Delta_Theta restricted to a family.
TriDiag family_matrix_laplace(const SpectralChart& ch, int kdeg, int m) {
  const Real lambda = Real(kdeg) * (kdeg + 2);
  const Real b = 2.0 * kdeg + 4.0 * m;
  TriDiag K;
  K.diag = Eigen::VectorXd::Zero(ch.ns);
  K.sub = -ch.m_face;
  for (int i = 0; i < ch.ns; ++i) {
    Real d = lambda * ch.angA[i] + b * ch.angB[i];
    if (i > 0) d += ch.m_face[i - 1];
    if (i + 1 < ch.ns) d += ch.m_face[i];
    K.diag[i] = d;
  }
  return K;
}

}  // namespace

SpectralChart build_chart(std::shared_ptr<const EigenSystem> es, Real s0,
                          Real s1, Real ds, const RadialSampler& geom,
                          Closure bottom, Closure top) {
  if (!es) throw ConfigError("build_chart: null eigensystem");
  if (!(ds > 0) || !(s1 > s0)) throw ConfigError("build_chart: bad interval");
  if (bottom == Closure::decay_up)
    throw ConfigError("build_chart: decay_up closure is only valid at the top");
  if (top == Closure::decay_down)
    throw ConfigError(
        "build_chart: decay_down closure is only valid at the bottom");
  const int ns = static_cast<int>(std::lround((s1 - s0) / ds)) + 1;
  if (ns < 4) throw ConfigError("build_chart: fewer than 4 radial nodes");
  if (std::abs((s0 + (ns - 1) * ds) - s1) > 1e-9 * std::max(1.0, std::abs(s1)))
    throw ConfigError("build_chart: ds does not divide the interval");

  SpectralChart ch;
  ch.es = std::move(es);
  ch.ns = ns;
  ch.s0 = s0;
  ch.ds = ds;
  ch.bottom = bottom;
  ch.top = top;

  std::vector<RadialPoint> node(ns);
  std::vector<RadialPoint> face(ns - 1);
  for (int i = 0; i < ns; ++i) node[i] = geom(s0 + i * ds);
  for (int i = 0; i + 1 < ns; ++i) face[i] = geom(s0 + (i + 0.5) * ds);

  ch.m_face.resize(ns - 1);
  ch.Vpot.resize(ns);
  ch.angA.resize(ns);
  ch.angB.resize(ns);
  ch.w.resize(ns);
  ch.h.resize(ns);
  ch.rho.resize(ns);

  for (int i = 0; i < ns; ++i) {
    const RadialPoint& g = node[i];
    const Real D = g.P + g.rho * g.S;
    if (!(g.P > 0) || !(D > 0) || !(g.h > 0) || !(g.rho > 0))
      throw PositivityError("build_chart: nonpositive geometry at s=" +
                            std::to_string(s0 + i * ds));
    const Real h2 = g.h * g.h;
    ch.w[i] = 4.0 * g.P * D * g.rho * g.rho / (h2 * h2) * ds;
    ch.angA[i] = 4.0 * ds * g.P * g.rho / h2;
    ch.angB[i] = 4.0 * ds * g.rho * g.rho * g.S / h2;
    ch.h[i] = g.h_phys;
    ch.rho[i] = g.rho;
  }
  for (int i = 0; i + 1 < ns; ++i) {
    const Real c = face[i].P * face[i].rho;  // flux coefficient at the face
    if (!(c > 0)) throw PositivityError("build_chart: nonpositive face flux");
    ch.m_face[i] = 4.0 * c / (ds * node[i].h * node[i + 1].h);
  }
  // Discrete potential: diagonal defect of the h-conjugated operator.
  for (int i = 0; i < ns; ++i) {
    const Real h2 = node[i].h * node[i].h;
    Real diag0 = 0, madj = 0;
    if (i > 0) {
      diag0 += 4.0 * face[i - 1].P * face[i - 1].rho / (ds * h2);
      madj += ch.m_face[i - 1];
    }
    if (i + 1 < ns) {
      diag0 += 4.0 * face[i].P * face[i].rho / (ds * h2);
      madj += ch.m_face[i];
    }
    ch.Vpot[i] = (diag0 - madj) / ch.w[i];
  }
  ch.cbot = 4.0 * node[0].P * node[0].rho / (node[0].h * node[0].h);
  ch.ctop = 4.0 * node[ns - 1].P * node[ns - 1].rho /
            (node[ns - 1].h * node[ns - 1].h);
  // End orientation of h; a decaying closure is only meaningful on a
  // cylinder-like end where h runs at unit log-slope.
  const Real slope_bot = std::log(node[1].h / node[0].h) / ds;
  const Real slope_top = std::log(node[ns - 1].h / node[ns - 2].h) / ds;
  if (bottom == Closure::decay_down) {
    if (std::abs(std::abs(slope_bot) - 1.0) > 0.1)
      throw ConfigError("build_chart: decaying bottom closure off-cylinder");
    ch.eta_bot = slope_bot > 0 ? 1.0 : -1.0;
  }
  if (top == Closure::decay_up) {
    if (std::abs(std::abs(slope_top) - 1.0) > 0.1)
      throw ConfigError("build_chart: decaying top closure off-cylinder");
    ch.eta_top = slope_top > 0 ? 1.0 : -1.0;
  }
  return ch;
}

TriDiag family_matrix(const SpectralChart& ch, int kdeg, int m) {
  const Real lambda = Real(kdeg) * (kdeg + 2);
  TriDiag K = family_matrix_laplace(ch, kdeg, m);
  K.diag += ch.w.cwiseProduct(ch.Vpot);
  K.diag[0] += closure_kappa(ch.bottom, lambda, false, ch.eta_bot) * ch.cbot;
  K.diag[ch.ns - 1] +=
      closure_kappa(ch.top, lambda, true, ch.eta_top) * ch.ctop;
  return K;
}

Eigen::MatrixXd box_apply(const SpectralChart& ch, const Eigen::MatrixXd& f) {
  if (f.rows() != ch.ns || f.cols() != ch.n_modes())
    throw ShapeError("box_apply: field shape mismatch");
  Eigen::MatrixXd out(ch.ns, ch.n_modes());
  for (const auto& fam : ch.es->families) {
    const TriDiag K = family_matrix(ch, fam.k, fam.m);
    for (int idx : fam.mode_index)
      out.col(idx) = K.apply(f.col(idx)).cwiseQuotient(ch.w);
  }
  return out;
}

Eigen::MatrixXd box_solve(const SpectralChart& ch, const Eigen::MatrixXd& rhs,
                          Real shift, bool deflate_kernel) {
  if (ch.bottom == Closure::dirichlet || ch.top == Closure::dirichlet)
    throw ConfigError("box_solve: dirichlet closures need interface data");
  if (rhs.rows() != ch.ns || rhs.cols() != ch.n_modes())
    throw ShapeError("box_solve: field shape mismatch");
  Eigen::MatrixXd out(ch.ns, ch.n_modes());
  const int n = ch.ns;
  for (const auto& fam : ch.es->families) {
    TriDiag K = family_matrix(ch, fam.k, fam.m);
    if (shift != 0.0) K.diag += shift * ch.w;
    // The (0,0) family with zero-flux ends is singular exactly when K
    // annihilates the conformal factor (single smooth piece); a glued
    // manifold's kinked h is not annihilated and stays invertible.
    bool singular = false;
    if (shift == 0.0 && fam.k == 0 && fam.m == 0 &&
        ch.bottom == Closure::neumann && ch.top == Closure::neumann) {
      const Real scale =
          K.diag.cwiseAbs().cwiseProduct(ch.h.cwiseAbs()).maxCoeff();
      singular = K.apply(ch.h).cwiseAbs().maxCoeff() < 1e-9 * scale;
    }
    if (!singular) {
      TriDiagFactor F(K);
      for (int idx : fam.mode_index)
        out.col(idx) = F.solve(ch.w.cwiseProduct(rhs.col(idx)));
      continue;
    }
    if (!deflate_kernel)
      throw SolverError(
          "box_solve: (0,0) family is singular (kernel h); "
          "request the deflated solve");
    // Exact kernel h: project the data, pin the last node, restore the
    // kernel component to zero mean against h.
    const Eigen::VectorXd& hcol = ch.h;
    const Real hn2 = hcol.cwiseProduct(ch.w).dot(hcol);
    TriDiag Kr;
    Kr.diag = K.diag.head(n - 1);
    Kr.sub = K.sub.head(n - 2);
    TriDiagFactor Fr(Kr);
    for (int idx : fam.mode_index) {
      Eigen::VectorXd r = ch.w.cwiseProduct(rhs.col(idx));
      const Real comp = hcol.dot(r) / hn2;  // <rhs, h>_w / <h,h>_w
      r -= comp * ch.w.cwiseProduct(hcol);
      Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
      x.head(n - 1) = Fr.solve(r.head(n - 1));
      const Real c = hcol.cwiseProduct(ch.w).dot(x) / hn2;
      x -= c * hcol;
      out.col(idx) = x;
    }
  }
  return out;
}

Eigen::VectorXd potential_v(const SpectralChart& ch) { return ch.Vpot; }

Real chart_inner(const SpectralChart& ch, const Eigen::MatrixXd& a,
                 const Eigen::MatrixXd& b) {
  if (a.rows() != ch.ns || b.rows() != ch.ns || a.cols() != b.cols())
    throw ShapeError("chart_inner: shape mismatch");
  return (ch.w.asDiagonal() * a).cwiseProduct(b).sum();
}

Real chart_norm(const SpectralChart& ch, const Eigen::MatrixXd& a) {
  return std::sqrt(std::max(0.0, chart_inner(ch, a, a)));
}

Real chart_sobolev(const SpectralChart& ch, const Eigen::MatrixXd& f, int k) {
  if (k < 0 || k > 3) throw ConfigError("chart_sobolev: order 0..3");
  Eigen::MatrixXd g = f;
  for (int j = 0; j < k; ++j) {
    Eigen::MatrixXd next(ch.ns, ch.n_modes());
    for (const auto& fam : ch.es->families) {
      const TriDiag L = family_matrix_laplace(ch, fam.k, fam.m);
      for (int idx : fam.mode_index)
        next.col(idx) = L.apply(g.col(idx)).cwiseQuotient(ch.w) + g.col(idx);
    }
    g.swap(next);
  }
  return std::sqrt(std::max(0.0, chart_inner(ch, f, g)));
}

std::vector<FamilyEigs> family_spectra(const SpectralChart& ch, int n_lowest) {
  std::vector<FamilyEigs> out;
  const int n = ch.ns;
  for (const auto& fam : ch.es->families) {
    TriDiag K = family_matrix(ch, fam.k, fam.m);
    int lo = 0, hi = n;  // active index range (dirichlet ends eliminated)
    if (ch.bottom == Closure::dirichlet) lo = 1;
    if (ch.top == Closure::dirichlet) hi = n - 1;
    const int na = hi - lo;
    Eigen::VectorXd d(na), e(std::max(0, na - 1));
    for (int i = 0; i < na; ++i) d[i] = K.diag[lo + i] / ch.w[lo + i];
    for (int i = 0; i + 1 < na; ++i)
      e[i] = K.sub[lo + i] / std::sqrt(ch.w[lo + i] * ch.w[lo + i + 1]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
    FamilyEigs fe;
    fe.kdeg = fam.k;
    fe.m = fam.m;
    const int take = std::min<int>(n_lowest, na);
    fe.lowest.assign(eig.eigenvalues().data(),
                     eig.eigenvalues().data() + take);
    out.push_back(std::move(fe));
  }
  return out;
}

Eigen::MatrixXd normalized_kernel_field(const SpectralChart& ch) {
  int idx0 = -1;
  for (const auto& fam : ch.es->families)
    if (fam.k == 0 && fam.m == 0) idx0 = fam.mode_index.at(0);
  if (idx0 < 0) throw ConfigError("normalized_kernel_field: no constant mode");
  const Real y0 = ch.es->values(0, idx0);
  const Real mu = ch.es->measure_total();
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(ch.ns, ch.n_modes());
  f.col(idx0) = ch.h * (y0 * mu);
  const Real nrm = chart_norm(ch, f);
  if (!(nrm > 0)) throw SolverError("normalized_kernel_field: zero norm");
  return f / nrm;
}

}  // namespace kummer
