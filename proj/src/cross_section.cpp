#include "kummer/cross_section.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace kummer {

// ---------------------------------------------------------------------------
// CPoly
// ---------------------------------------------------------------------------
Complex CPoly::eval(Complex z1, Complex z2) const {
  const Complex zb1 = std::conj(z1), zb2 = std::conj(z2);
  Complex s(0, 0);
  for (const Term& t : terms) {
    Complex v = t.c;
    for (int i = 0; i < t.e[0]; ++i) v *= z1;
    for (int i = 0; i < t.e[1]; ++i) v *= zb1;
    for (int i = 0; i < t.e[2]; ++i) v *= z2;
    for (int i = 0; i < t.e[3]; ++i) v *= zb2;
    s += v;
  }
  return s;
}

static CPoly cpoly_derive(const CPoly& p, int slot) {
  CPoly out;
  for (const CPoly::Term& t : p.terms) {
    if (t.e[slot] == 0) continue;
    CPoly::Term d = t;
    d.c *= static_cast<Real>(t.e[slot]);
    d.e[slot] -= 1;
    out.terms.push_back(d);
  }
  return out;
}
CPoly CPoly::d_z1() const { return cpoly_derive(*this, 0); }
CPoly CPoly::d_zbar1() const { return cpoly_derive(*this, 1); }
CPoly CPoly::d_z2() const { return cpoly_derive(*this, 2); }
CPoly CPoly::d_zbar2() const { return cpoly_derive(*this, 3); }

CPoly CPoly::scaled(Complex s) const {
  CPoly out = *this;
  for (auto& t : out.terms) t.c *= s;
  return out;
}

CPoly CPoly::sum(const std::vector<const CPoly*>& ps,
                 const std::vector<Complex>& ws) {
  CPoly out;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (std::abs(ws[i]) == 0.0) continue;
    for (const auto& t : ps[i]->terms) {
      CPoly::Term nt = t;
      nt.c *= ws[i];
      out.terms.push_back(nt);
    }
  }
  // merge duplicate exponent tuples (deterministic order)
  std::sort(out.terms.begin(), out.terms.end(),
            [](const CPoly::Term& a, const CPoly::Term& b) { return a.e < b.e; });
  CPoly merged;
  for (const auto& t : out.terms) {
    if (!merged.terms.empty() && merged.terms.back().e == t.e)
      merged.terms.back().c += t.c;
    else
      merged.terms.push_back(t);
  }
  // drop numerically dead terms
  Real mx = 0;
  for (const auto& t : merged.terms) mx = std::max(mx, std::abs(t.c));
  CPoly pruned;
  for (const auto& t : merged.terms)
    if (std::abs(t.c) > 1e-14 * mx) pruned.terms.push_back(t);
  return pruned;
}

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes on [0,1] by Newton iteration on P_n.
// ---------------------------------------------------------------------------
static void gauss_legendre_01(int n, std::vector<Real>& x, std::vector<Real>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    // initial guess on [-1,1]
    Real t = std::cos(kPi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      // evaluate P_n and P_n' at t by recurrence
      Real p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const Real p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const Real dp = n * (t * p1 - p0) / (t * t - 1.0);
      const Real dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    Real p0 = 1.0, p1 = t;
    for (int k = 2; k <= n; ++k) {
      const Real p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const Real dp = n * (t * p1 - p0) / (t * t - 1.0);
    x[i] = 0.5 * (1.0 + t);
    w[i] = 1.0 / ((1.0 - t * t) * dp * dp);  // weight on [-1,1] is 2/(...)
    // mapping [-1,1]->[0,1] multiplies weights by 1/2; 2 * 1/2 = 1:
  }
  std::sort(x.begin(), x.end());
  // weights were stored in node order before sorting; recompute pairing:
  // simpler: recompute weights from sorted nodes
  for (int i = 0; i < n; ++i) {
    const Real t = 2.0 * x[i] - 1.0;
    Real p0 = 1.0, p1 = t;
    for (int k = 2; k <= n; ++k) {
      const Real p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const Real dp = n * (t * p1 - p0) / (t * t - 1.0);
    w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}

SphereGrid make_sphere_grid(int exactness, bool quotient_measure) {
  SphereGrid g;
  g.exactness = exactness;
  g.quotient_measure = quotient_measure;
  g.nu = (exactness + 2 + 3) / 4;         // ceil((exactness/2 + 1)/2)
  g.nxi1 = g.nxi2 = exactness + 1;
  std::vector<Real> un, uw;
  gauss_legendre_01(g.nu, un, uw);
  const int n1 = g.nxi1, n2 = g.nxi2;
  const Real base = 0.5 * (2.0 * kPi / n1) * (2.0 * kPi / n2) *
                    (quotient_measure ? 0.5 : 1.0);
  g.x.reserve(g.nu * n1 * n2);
  for (int iu = 0; iu < g.nu; ++iu) {
    const Real u = un[iu];
    const Real c = std::sqrt(1.0 - u), s = std::sqrt(u);
    for (int i1 = 0; i1 < n1; ++i1) {
      const Real a1 = 2.0 * kPi * i1 / n1;
      const Complex z1 = c * Complex(std::cos(a1), std::sin(a1));
      for (int i2 = 0; i2 < n2; ++i2) {
        const Real a2 = 2.0 * kPi * i2 / n2;
        const Complex z2 = s * Complex(std::cos(a2), std::sin(a2));
        g.z1.push_back(z1);
        g.z2.push_back(z2);
        g.x.push_back({z1.real(), z1.imag(), z2.real(), z2.imag()});
        g.w.push_back(base * uw[iu]);
      }
    }
  }
  return g;
}

Real integrate(const SphereGrid& g, const Eigen::VectorXd& samples) {
  if (samples.size() != g.n_nodes())
    throw ShapeError("integrate: sample count does not match grid");
  Real s = 0;
  for (int i = 0; i < g.n_nodes(); ++i) s += g.w[i] * samples[i];
  return s;
}

// ---------------------------------------------------------------------------
// Harmonic polynomial blocks.
// The bidegree-(p,q) monomial space is indexed by (a,b), a in [0,p], b in
// [0,q], standing for z1^a zbar1^b z2^{p-a} zbar2^{q-b}. The complex Laplacian
// contraction  dd := d_{z1} d_{zbar1} + d_{z2} d_{zbar2}  maps it onto the
// (p-1, q-1) space; harmonics are its kernel (dimension p+q+1).
// ---------------------------------------------------------------------------
static Eigen::MatrixXcd contraction_matrix(int p, int q) {
  const int nc = (p + 1) * (q + 1);
  const int nr = p * q;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(std::max(nr, 1), nc);
  if (nr == 0) return Eigen::MatrixXcd::Zero(1, nc);  // zero map
  auto col = [&](int a, int b) { return a * (q + 1) + b; };
  auto row = [&](int a, int b) { return a * q + b; };  // a in [0,p-1], b in [0,q-1]
  for (int a = 0; a <= p; ++a)
    for (int b = 0; b <= q; ++b) {
      const int cidx = col(a, b);
      const int c = p - a, d = q - b;
      if (a >= 1 && b >= 1) m(row(a - 1, b - 1), cidx) += Real(a * b);
      if (c >= 1 && d >= 1 && a <= p - 1 && b <= q - 1)
        m(row(a, b), cidx) += Real(c * d);
    }
  return m;
}

static CPoly vector_to_poly(int p, int q, const Eigen::VectorXcd& v) {
  CPoly out;
  for (int a = 0; a <= p; ++a)
    for (int b = 0; b <= q; ++b) {
      const Complex c = v[a * (q + 1) + b];
      if (std::abs(c) < 1e-13) continue;
      out.terms.push_back({{a, b, p - a, q - b}, c});
    }
  return out;
}

static Real eval_real_mode(const CPoly& p, Complex z1, Complex z2) {
  return p.eval(z1, z2).real();
}

// Orthonormalize candidate real functions w.r.t. grid weights; returns the
// recombination matrix (n_cand x rank).
static Eigen::MatrixXd orthonormalize(const SphereGrid& g,
                                      const Eigen::MatrixXd& cand, int rank) {
  Eigen::MatrixXd b = cand;
  for (int i = 0; i < g.n_nodes(); ++i) b.row(i) *= std::sqrt(g.w[i]);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (!(sv[0] > 0) || sv[rank - 1] < 1e-10 * sv[0])
    throw DomainError("cross-section basis: defective block (rank drop)");
  if (rank < cand.cols() && sv[rank] > 1e-6 * sv[0])
    throw DomainError("cross-section basis: excess rank in block");
  Eigen::MatrixXd r(cand.cols(), rank);
  for (int j = 0; j < rank; ++j)
    r.col(j) = svd.matrixV().col(j) / sv[j];
  return r;
}

static void append_block(EigenSystem& es, int p, int q) {
  const int k = p + q;
  const int dim = k + 1;  // complex dimension of H(p,q)
  const Eigen::MatrixXcd m = contraction_matrix(p, q);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(m);
  lu.setThreshold(1e-10);
  const Eigen::MatrixXcd ker = lu.kernel();
  if (ker.cols() != dim)
    throw DomainError("harmonic block dimension mismatch");

  // Real candidate functions: Re(w), Im(w) = Re(-i w) for each kernel vector.
  std::vector<CPoly> cand_poly;
  for (int j = 0; j < ker.cols(); ++j) {
    const CPoly w = vector_to_poly(p, q, ker.col(j));
    cand_poly.push_back(w);
    cand_poly.push_back(w.scaled(Complex(0, -1)));
  }
  const int n_cand = static_cast<int>(cand_poly.size());
  Eigen::MatrixXd cand(es.grid.n_nodes(), n_cand);
  for (int j = 0; j < n_cand; ++j)
    for (int i = 0; i < es.grid.n_nodes(); ++i)
      cand(i, j) = eval_real_mode(cand_poly[j], es.grid.z1[i], es.grid.z2[i]);

  const int rank = (p == q) ? dim : 2 * dim;
  const Eigen::MatrixXd recomb = orthonormalize(es.grid, cand, rank);

  const int col0 = static_cast<int>(es.modes.size());
  es.values.conservativeResize(es.grid.n_nodes(), col0 + rank);
  es.values.block(0, col0, es.grid.n_nodes(), rank) = cand * recomb;
  for (int j = 0; j < rank; ++j) {
    Mode md;
    md.k = k;
    md.p = p;
    md.q = q;
    md.m = p * q;
    md.lambda = Real(k) * Real(k + 2);
    std::vector<const CPoly*> ps;
    std::vector<Complex> ws;
    for (int c = 0; c < n_cand; ++c) {
      ps.push_back(&cand_poly[c]);
      ws.push_back(Complex(recomb(c, j), 0));
    }
    md.poly = CPoly::sum(ps, ws);
    es.modes.push_back(md);
  }
}

static void build_circle(EigenSystem& es) {
  // Fourier basis on the unit circle, n uniform nodes, eigenvalues m^2.
  const int K = es.spec.max_degree;
  const int n = 4 * K + 8;
  es.grid.exactness = n - 1;
  es.grid.nu = 1;
  es.grid.nxi1 = n;
  es.grid.nxi2 = 1;
  es.grid.quotient_measure = false;
  for (int i = 0; i < n; ++i) {
    const Real a = 2.0 * kPi * i / n;
    const Complex z1(std::cos(a), std::sin(a));
    es.grid.z1.push_back(z1);
    es.grid.z2.push_back(Complex(0, 0));
    es.grid.x.push_back({z1.real(), z1.imag(), 0, 0});
    es.grid.w.push_back(2.0 * kPi / n);
  }
  const Real inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * kPi);
  auto push = [&](int m, bool is_sin) {
    Mode md;
    md.k = m;
    md.p = m;
    md.q = 0;
    md.m = 0;
    md.lambda = Real(m) * Real(m);
    const Real nrm = (m == 0) ? inv_sqrt_2pi : std::sqrt(2.0) * inv_sqrt_2pi;
    // cos(m t) = Re(z^m); sin(m t) = Re(-i z^m)
    md.poly.terms.push_back(
        {{m, 0, 0, 0}, is_sin ? Complex(0, -nrm) : Complex(nrm, 0)});
    const int col = static_cast<int>(es.modes.size());
    es.values.conservativeResize(es.grid.n_nodes(), col + 1);
    for (int i = 0; i < es.grid.n_nodes(); ++i)
      es.values(i, col) = md.poly.eval(es.grid.z1[i], es.grid.z2[i]).real();
    es.modes.push_back(md);
  };
  push(0, false);
  for (int m = 1; m <= K; ++m) {
    push(m, false);
    push(m, true);
  }
}

EigenSystem spectrum(const CrossSectionSpec& spec) {
  if (spec.max_degree < 0 || spec.max_degree > 24)
    throw ConfigError("spectrum: max_degree out of supported range [0,24]");
  EigenSystem es;
  es.spec = spec;
  if (spec.kind == CrossKind::circle) {
    build_circle(es);
  } else {
    const bool quot = (spec.kind == CrossKind::sphere3_quotient);
    es.grid = make_sphere_grid(2 * spec.max_degree + 2, quot);
    es.values.resize(es.grid.n_nodes(), 0);
    for (int k = 0; k <= spec.max_degree; ++k) {
      if (quot && (k % 2 != 0)) continue;
      for (int q = k / 2; q >= 0; --q) {
        const int p = k - q;
        if (p < q) continue;
        append_block(es, p, q);
      }
    }
  }
  // families: group by (k, m) preserving first-appearance order
  for (int j = 0; j < es.n_modes(); ++j) {
    const Mode& md = es.modes[j];
    bool found = false;
    for (auto& f : es.families)
      if (f.k == md.k && f.m == md.m) {
        f.mode_index.push_back(j);
        found = true;
        break;
      }
    if (!found)
      es.families.push_back({md.k, md.m, md.lambda, {j}});
  }
  return es;
}

Real EigenSystem::measure_total() const {
  if (spec.kind == CrossKind::circle) return 2.0 * kPi;
  return grid.quotient_measure ? kPi * kPi : 2.0 * kPi * kPi;
}

Eigen::VectorXd project(const EigenSystem& es, const Eigen::VectorXd& samples) {
  if (samples.size() != es.grid.n_nodes())
    throw ShapeError("project: sample count does not match grid");
  Eigen::VectorXd ws(samples.size());
  for (int i = 0; i < samples.size(); ++i) ws[i] = es.grid.w[i] * samples[i];
  return es.values.transpose() * ws;
}

Eigen::VectorXd reconstruct(const EigenSystem& es, const Eigen::VectorXd& coef) {
  if (coef.size() != es.n_modes())
    throw ShapeError("reconstruct: coefficient count does not match basis");
  return es.values * coef;
}

Real evaluate_mode(const EigenSystem& es, int mode, const std::array<Real, 4>& x) {
  const Real r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
  if (!(r2 > 0)) throw DomainError("evaluate_mode: zero point");
  const Real ir = 1.0 / std::sqrt(r2);
  const Complex z1(x[0] * ir, x[1] * ir), z2(x[2] * ir, x[3] * ir);
  return es.modes[mode].poly.eval(z1, z2).real();
}

Eigen::VectorXd evaluate_modes(const EigenSystem& es,
                               const std::array<Real, 4>& x) {
  Eigen::VectorXd v(es.n_modes());
  const Real r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
  if (!(r2 > 0)) throw DomainError("evaluate_modes: zero point");
  const Real ir = 1.0 / std::sqrt(r2);
  const Complex z1(x[0] * ir, x[1] * ir), z2(x[2] * ir, x[3] * ir);
  for (int j = 0; j < es.n_modes(); ++j)
    v[j] = es.modes[j].poly.eval(z1, z2).real();
  return v;
}

ModeTables build_mode_tables(const EigenSystem& es, const SphereGrid& nodes) {
  const int n = nodes.n_nodes(), m = es.n_modes();
  ModeTables t;
  t.Y.resize(n, m);
  t.d1_re.resize(n, m);
  t.d1_im.resize(n, m);
  t.d2_re.resize(n, m);
  t.d2_im.resize(n, m);
  t.h11.resize(n, m);
  t.h22.resize(n, m);
  t.h12_re.resize(n, m);
  t.h12_im.resize(n, m);
  for (int j = 0; j < m; ++j) {
    const CPoly& w = es.modes[j].poly;
    // real mode Y = (w + conj(w))/2; complex derivatives of Y:
    //   d_a Y      = (d_a w + conj(d_abar w)) / 2
    //   d_a d_bbar Y = (d_a d_bbar w + conj(d_b d_abar w)) / 2
    const CPoly w1 = w.d_z1(), w1b = w.d_zbar1();
    const CPoly w2 = w.d_z2(), w2b = w.d_zbar2();
    const CPoly w11b = w1.d_zbar1();   // d1 d1bar w
    const CPoly w22b = w2.d_zbar2();   // d2 d2bar w
    const CPoly w12b = w1.d_zbar2();   // d1 d2bar w
    const CPoly w21b = w2.d_zbar1();   // d2 d1bar w
    for (int i = 0; i < n; ++i) {
      const Complex z1 = nodes.z1[i], z2 = nodes.z2[i];
      t.Y(i, j) = w.eval(z1, z2).real();
      const Complex d1 = 0.5 * (w1.eval(z1, z2) + std::conj(w1b.eval(z1, z2)));
      const Complex d2 = 0.5 * (w2.eval(z1, z2) + std::conj(w2b.eval(z1, z2)));
      t.d1_re(i, j) = d1.real();
      t.d1_im(i, j) = d1.imag();
      t.d2_re(i, j) = d2.real();
      t.d2_im(i, j) = d2.imag();
      const Complex h11 =
          0.5 * (w11b.eval(z1, z2) + std::conj(w11b.eval(z1, z2)));
      const Complex h22 =
          0.5 * (w22b.eval(z1, z2) + std::conj(w22b.eval(z1, z2)));
      const Complex h12 =
          0.5 * (w12b.eval(z1, z2) + std::conj(w21b.eval(z1, z2)));
      t.h11(i, j) = h11.real();
      t.h22(i, j) = h22.real();
      t.h12_re(i, j) = h12.real();
      t.h12_im(i, j) = h12.imag();
    }
  }
  return t;
}

}  // namespace kummer
