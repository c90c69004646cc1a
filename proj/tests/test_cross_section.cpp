#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "kummer/common.hpp"
#include "kummer/cross_section.hpp"

using namespace kummer;

namespace {

// Independent eigenvalue oracle for the round unit S^3 via Hopf coordinates:
// separating f = g(theta) e^{i(m1 xi1 + m2 xi2)} reduces the Laplacian to the
// 1D problem
//   -(rho g')' + rho (m1^2/cos^2 + m2^2/sin^2) g = lambda rho g,
//   rho(theta) = cos(theta) sin(theta),  theta in (0, pi/2),
// discretized in symmetric flux form on a cell-centered grid (boundary flux
// vanishes with rho). Returns all eigenvalues <= lambda_max.
std::vector<double> sector_eigenvalues(int m1, int m2, int n, double lambda_max) {
  const double h = (kPi / 2.0) / n;
  Eigen::VectorXd diag(n), sub(n - 1);
  auto rho = [](double th) { return std::cos(th) * std::sin(th); };
  std::vector<double> rc(n), face(n + 1);
  for (int i = 0; i < n; ++i) rc[i] = rho((i + 0.5) * h);
  for (int i = 0; i <= n; ++i) face[i] = rho(i * h);
  face[0] = 0.0;
  face[n] = 0.0;
  for (int i = 0; i < n; ++i) {
    const double th = (i + 0.5) * h;
    const double pot = m1 * m1 / sq(std::cos(th)) + m2 * m2 / sq(std::sin(th));
    diag[i] = (face[i] + face[i + 1]) / (h * h) + rc[i] * pot;
  }
  for (int i = 0; i + 1 < n; ++i) sub[i] = -face[i + 1] / (h * h);
  // symmetrize against the weight rc: T = D^{-1/2} A D^{-1/2}
  for (int i = 0; i < n; ++i) diag[i] /= rc[i];
  for (int i = 0; i + 1 < n; ++i) sub[i] /= std::sqrt(rc[i] * rc[i + 1]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    const double l = solver.eigenvalues()[i];
    if (l <= lambda_max) out.push_back(l);
  }
  return out;
}

double eval_poly(const CPoly& p, const std::array<double, 4>& x) {
  return p.eval(Complex(x[0], x[1]), Complex(x[2], x[3])).real();
}

}  // namespace

TEST_CASE("sphere grid integrates polynomials exactly and has right volume") {
  const SphereGrid g = make_sphere_grid(12, false);
  double tot = 0;
  for (double w : g.w) tot += w;
  CHECK(std::abs(tot - 2 * kPi * kPi) < 1e-12);

  const SphereGrid gq = make_sphere_grid(12, true);
  tot = 0;
  for (double w : gq.w) tot += w;
  CHECK(std::abs(tot - kPi * kPi) < 1e-12);

  // a random degree-12 polynomial integrates identically on a finer grid
  Rng rng(17);
  std::vector<std::array<int, 4>> expo;
  std::vector<double> coef;
  for (int t = 0; t < 40; ++t) {
    std::array<int, 4> e;
    int rem = 12;
    for (int s = 0; s < 4; ++s) {
      e[s] = static_cast<int>(rng.uniform() * (rem + 1));
      rem -= e[s];
    }
    expo.push_back(e);
    coef.push_back(rng.gauss());
  }
  auto poly_at = [&](const std::array<double, 4>& x) {
    double s = 0;
    for (size_t t = 0; t < expo.size(); ++t) {
      double v = coef[t];
      for (int a = 0; a < 4; ++a)
        for (int r = 0; r < expo[t][a]; ++r) v *= x[a];
      s += v;
    }
    return s;
  };
  const SphereGrid g2 = make_sphere_grid(20, false);
  Eigen::VectorXd s1(g.n_nodes()), s2(g2.n_nodes());
  for (int i = 0; i < g.n_nodes(); ++i) s1[i] = poly_at(g.x[i]);
  for (int i = 0; i < g2.n_nodes(); ++i) s2[i] = poly_at(g2.x[i]);
  const double i1 = integrate(g, s1), i2 = integrate(g2, s2);
  CHECK(std::abs(i1 - i2) < 1e-12 * (1.0 + std::abs(i2)));
}

TEST_CASE("quotient sphere eigensystem: orthonormal, correct counts") {
  const EigenSystem es = spectrum({CrossKind::sphere3_quotient, 8});
  CHECK(es.n_modes() == 165);  // sum over even k<=8 of (k+1)^2

  std::map<int, int> count_by_k;
  for (const auto& m : es.modes) {
    CHECK(m.k % 2 == 0);
    CHECK(m.lambda == doctest::Approx(m.k * (m.k + 2)).epsilon(1e-15));
    count_by_k[m.k]++;
  }
  CHECK(count_by_k[0] == 1);
  CHECK(count_by_k[2] == 9);
  CHECK(count_by_k[4] == 25);
  CHECK(count_by_k[6] == 49);
  CHECK(count_by_k[8] == 81);

  // Gram matrix against quadrature weights
  Eigen::MatrixXd wv = es.values;
  for (int i = 0; i < es.grid.n_nodes(); ++i) wv.row(i) *= es.grid.w[i];
  Eigen::MatrixXd gram = es.values.transpose() * wv;
  gram -= Eigen::MatrixXd::Identity(es.n_modes(), es.n_modes());
  CHECK(gram.cwiseAbs().maxCoeff() < 1e-12);

  // radial families: (k,m) distinct pairs; mode multiplicity within family
  int total = 0;
  for (const auto& f : es.families) {
    CHECK(f.k * (f.k + 2) == doctest::Approx(f.lambda));
    total += static_cast<int>(f.mode_index.size());
  }
  CHECK(total == 165);
  CHECK(es.families.size() == 15);  // even k<=8: 1+2+3+4+5 (p,q) splits
}

TEST_CASE("eigenvalues and multiplicities match the Hopf-sector oracle") {
  const int K = 8;
  const double lmax = K * (K + 2) + 0.5;
  std::map<int, int> oracle_count;  // k -> multiplicity
  std::vector<double> all;
  for (int m1 = -K; m1 <= K; ++m1)
    for (int m2 = -K; m2 <= K; ++m2) {
      if ((m1 + m2) % 2 != 0) continue;            // antipodal-invariant sectors
      if (std::abs(m1) + std::abs(m2) > K) continue;  // sector floor above lmax
      const auto eigs = sector_eigenvalues(m1, m2, 2000, lmax);
      for (double l : eigs) all.push_back(l);
    }
  for (double l : all) {
    // match to nearest k(k+2)
    int best = -1;
    double bd = 1e9;
    for (int k = 0; k <= K; k += 2) {
      const double d = std::abs(l - k * (k + 2));
      if (d < bd) {
        bd = d;
        best = k;
      }
    }
    CHECK(bd < 0.05);
    oracle_count[best]++;
  }
  CHECK(oracle_count[0] == 1);
  CHECK(oracle_count[2] == 9);
  CHECK(oracle_count[4] == 25);
  CHECK(oracle_count[6] == 49);
  CHECK(oracle_count[8] == 81);
}

TEST_CASE("projection is exact on even polynomials of degree <= max_degree") {
  const EigenSystem es = spectrum({CrossKind::sphere3_quotient, 8});
  Rng rng(99);
  // random even polynomial: sum of monomials of even total degree <= 8
  std::vector<std::array<int, 4>> expo;
  std::vector<double> coef;
  for (int t = 0; t < 30; ++t) {
    std::array<int, 4> e{};
    int deg = 2 * static_cast<int>(rng.uniform() * 5);  // 0,2,4,6,8
    for (int s = 0; s < 3; ++s) {
      e[s] = static_cast<int>(rng.uniform() * (deg - (s > 0 ? e[0] : 0) + 1));
    }
    // rebuild cleanly: distribute deg over 4 slots
    int rem = deg;
    for (int s = 0; s < 4; ++s) e[s] = 0;
    for (int s = 0; s < 3; ++s) {
      e[s] = static_cast<int>(rng.uniform() * (rem + 1));
      rem -= e[s];
    }
    e[3] = rem;
    expo.push_back(e);
    coef.push_back(rng.gauss());
  }
  Eigen::VectorXd samples(es.grid.n_nodes());
  for (int i = 0; i < es.grid.n_nodes(); ++i) {
    double s = 0;
    for (size_t t = 0; t < expo.size(); ++t) {
      double v = coef[t];
      for (int a = 0; a < 4; ++a)
        for (int r = 0; r < expo[t][a]; ++r) v *= es.grid.x[i][a];
      s += v;
    }
    samples[i] = s;
  }
  const Eigen::VectorXd back = reconstruct(es, project(es, samples));
  CHECK((back - samples).cwiseAbs().maxCoeff() <
        1e-12 * (1.0 + samples.cwiseAbs().maxCoeff()));

  // round trip on random coefficients
  Eigen::VectorXd c(es.n_modes());
  for (int j = 0; j < es.n_modes(); ++j) c[j] = rng.gauss();
  const Eigen::VectorXd c2 = project(es, reconstruct(es, c));
  CHECK((c2 - c).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mode polynomial tables: harmonicity and derivative consistency") {
  const EigenSystem es = spectrum({CrossKind::sphere3_quotient, 6});
  const SphereGrid nodes = make_sphere_grid(10, true);
  const ModeTables t = build_mode_tables(es, nodes);

  // harmonic: trace of complex Hessian vanishes
  CHECK((t.h11 + t.h22).cwiseAbs().maxCoeff() < 1e-11);

  // derivative tables match finite differences of the homogeneous polynomial
  Rng rng(5);
  const double eps = 1e-5;
  for (int trial = 0; trial < 12; ++trial) {
    const int j = static_cast<int>(rng.uniform() * es.n_modes());
    const int i = static_cast<int>(rng.uniform() * nodes.n_nodes());
    const auto& P = es.modes[j].poly;
    std::array<double, 4> x = nodes.x[i];
    auto at = [&](int a, double d) {
      auto y = x;
      y[a] += d;
      return eval_poly(P, y);
    };
    // d/dz1 = (d/dx1 - i d/dx2)/2
    const double fx1 = (at(0, eps) - at(0, -eps)) / (2 * eps);
    const double fx2 = (at(1, eps) - at(1, -eps)) / (2 * eps);
    const Complex d1 = 0.5 * Complex(fx1, -fx2);
    CHECK(std::abs(d1.real() - t.d1_re(i, j)) < 2e-8);
    CHECK(std::abs(d1.imag() - t.d1_im(i, j)) < 2e-8);
    // d1 d1bar = quarter Laplacian in (x1,x2)
    const double fxx =
        (at(0, eps) - 2 * at(0, 0) + at(0, -eps)) / (eps * eps);
    const double fyy =
        (at(1, eps) - 2 * at(1, 0) + at(1, -eps)) / (eps * eps);
    CHECK(std::abs(0.25 * (fxx + fyy) - t.h11(i, j)) < 2e-5);
  }

  // table Y agrees with evaluate_mode
  for (int trial = 0; trial < 8; ++trial) {
    const int j = static_cast<int>(rng.uniform() * es.n_modes());
    const int i = static_cast<int>(rng.uniform() * nodes.n_nodes());
    CHECK(t.Y(i, j) ==
          doctest::Approx(evaluate_mode(es, j, nodes.x[i])).epsilon(1e-12));
  }

  // homogeneity: P(s x) = s^k P(x)
  const int j = 10 % es.n_modes();
  std::array<double, 4> x = {0.3, -0.2, 0.5, 0.7};
  const double v1 = eval_poly(es.modes[j].poly, x);
  for (auto& c : x) c *= 1.7;
  const double v2 = eval_poly(es.modes[j].poly, x);
  CHECK(v2 == doctest::Approx(std::pow(1.7, es.modes[j].k) * v1).epsilon(1e-12));
}

TEST_CASE("full sphere keeps odd degrees; circle gives Fourier modes") {
  const EigenSystem full = spectrum({CrossKind::sphere3, 3});
  // k = 0,1,2,3 -> 1 + 4 + 9 + 16 = 30
  CHECK(full.n_modes() == 30);
  bool saw_odd = false;
  for (const auto& m : full.modes) saw_odd |= (m.k == 1);
  CHECK(saw_odd);

  const EigenSystem c = spectrum({CrossKind::circle, 4});
  CHECK(c.n_modes() == 9);  // 1 + 2*4
  Eigen::MatrixXd wv = c.values;
  for (int i = 0; i < c.grid.n_nodes(); ++i) wv.row(i) *= c.grid.w[i];
  Eigen::MatrixXd gram = c.values.transpose() * wv;
  gram -= Eigen::MatrixXd::Identity(c.n_modes(), c.n_modes());
  CHECK(gram.cwiseAbs().maxCoeff() < 1e-12);
  for (const auto& m : c.modes)
    CHECK(m.lambda == doctest::Approx(m.k * m.k));
}

TEST_CASE("shape errors are loud") {
  const EigenSystem es = spectrum({CrossKind::sphere3_quotient, 2});
  Eigen::VectorXd bad(3);
  bad.setZero();
  CHECK_THROWS_AS(project(es, bad), ShapeError);
  CHECK_THROWS_AS(reconstruct(es, bad), ShapeError);
  CHECK_THROWS_AS(spectrum({CrossKind::sphere3_quotient, 99}), ConfigError);
}
