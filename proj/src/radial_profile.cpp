#include "kummer/radial_profile.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

namespace kummer {

namespace {
constexpr Real kTailStart = 1e6;  // series is at machine precision beyond this

void require_positive_rho(Real rho) {
  if (!(rho > 0)) throw DomainError("radial profile: rho must be positive");
}
}  // namespace

Real RadialProfile::p(Real rho) const {
  require_positive_rho(rho);
  if (kind == ProfileKind::euclidean) return 1.0 + inject_fprime;
  return std::sqrt(1.0 + 1.0 / (rho * rho)) + inject_fprime;
}

Real RadialProfile::p_minus_1(Real rho) const {
  require_positive_rho(rho);
  if (kind == ProfileKind::euclidean) return inject_fprime;
  const Real x = 1.0 / (rho * rho);
  // sqrt(1+x) - 1 = x / (1 + sqrt(1+x)), no cancellation
  return x / (1.0 + std::sqrt(1.0 + x)) + inject_fprime;
}

Real RadialProfile::s(Real rho) const {
  require_positive_rho(rho);
  if (kind == ProfileKind::euclidean) return 0.0;
  return -1.0 / (rho * rho * rho * std::sqrt(1.0 + 1.0 / (rho * rho)));
}

Real RadialProfile::g_decay_series(Real rho) const {
  require_positive_rho(rho);
  if (kind == ProfileKind::euclidean) return 0.0;
  if (rho < 2.0)
    throw DomainError("g_decay_series: tail series used below rho = 2");
  // G(rho) = -sum_{j>=1} c_j rho^{-(2j-1)}/(2j-1),  c_j = binom(1/2, j)
  const Real x = 1.0 / (rho * rho);
  Real c = 0.5;  // c_1
  Real xpow = 1.0 / rho;
  Real sum = 0.0;
  for (int j = 1; j <= 60; ++j) {
    const Real term = c * xpow / (2 * j - 1);
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    c *= (0.5 - j) / (j + 1);
    xpow *= x;
  }
  return -sum;
}

namespace {
// adaptive Simpson for the integral of integrand over [a, b]
template <typename F>
Real adaptive_simpson(const F& f, Real a, Real b, Real fa, Real fm, Real fb,
                      Real tol, int depth) {
  const Real m = 0.5 * (a + b);
  const Real lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const Real flm = f(lm), frm = f(rm);
  const Real whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
  const Real left = (m - a) / 6.0 * (fa + 4 * flm + fm);
  const Real right = (b - m) / 6.0 * (fm + 4 * frm + fb);
  const Real delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}
}  // namespace

Real RadialProfile::g_decay_quadrature(Real rho) const {
  require_positive_rho(rho);
  if (kind == ProfileKind::euclidean) return 0.0;
  if (rho >= kTailStart) return g_decay_series(rho);
  // G(rho) = G(rho*) - int_rho^rho* (F'(s) - 1) ds, on x = log s.
  // The integrand is the true profile: the fault-injection knob perturbs only
  // the *reported* derivative (what identity checks audit), not this integral.
  auto integrand = [](Real x) {
    const Real s = std::exp(x);
    const Real u = 1.0 / (s * s);
    return (u / (1.0 + std::sqrt(1.0 + u))) * s;
  };
  const Real a = std::log(rho), b = std::log(kTailStart);
  const Real fa = integrand(a), fb = integrand(b), fm = integrand(0.5 * (a + b));
  // relative target 1e-14 against the result's magnitude ~ 1/(2 rho); the
  // Richardson correction inside the recursion buys another digit or two
  const Real head = 0.5 / rho;
  const Real integral =
      adaptive_simpson(integrand, a, b, fa, fm, fb, 1e-14 * head, 30);
  return g_decay_series(kTailStart) - integral;
}

Real RadialProfile::g_decay(Real rho) const {
  require_positive_rho(rho);
  if (kind == ProfileKind::euclidean) return 0.0;
  // G(rho) = sqrt(rho^2+1) - rho - log((1 + sqrt(rho^2+1))/rho): the unique
  // antiderivative of F' - 1 vanishing at infinity. Both terms are written
  // cancellation-free so the tail ~ -1/(2 rho) keeps full relative accuracy.
  const Real q = std::sqrt(rho * rho + 1.0);
  const Real diff = 1.0 / (q + rho);  // sqrt(rho^2+1) - rho
  return diff - std::log1p((1.0 + diff) / rho);
}

Real ma_identity_residual(const RadialProfile& pr, Real rho) {
  const Real p = pr.p(rho);
  const Real s = pr.s(rho);
  return p * p + rho * p * s - 1.0;
}

TailFit tail_fit(const RadialProfile& pr, Real rho_min, Real rho_max, int n) {
  if (!(rho_min > 0) || !(rho_max > rho_min) || n < 4)
    throw ConfigError("tail_fit: bad sampling window");
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd y(n);
  std::vector<Real> rhos(n);
  for (int i = 0; i < n; ++i) {
    const Real rho =
        std::exp(std::log(rho_min) +
                 (std::log(rho_max) - std::log(rho_min)) * i / (n - 1));
    rhos[i] = rho;
    a(i, 0) = 1.0 / rho;
    a(i, 1) = 1.0 / (rho * rho);
    a(i, 2) = 1.0 / (rho * rho * rho);
    y[i] = pr.g_decay(rho);
  }
  // column scaling for conditioning
  Eigen::Vector3d scale;
  for (int j = 0; j < 3; ++j) scale[j] = a.col(j).norm();
  for (int j = 0; j < 3; ++j) a.col(j) /= scale[j];
  Eigen::Vector3d c = a.colPivHouseholderQr().solve(y);
  for (int j = 0; j < 3; ++j) c[j] /= scale[j];
  TailFit fit;
  fit.a1 = c[0];
  fit.a2 = c[1];
  fit.a3 = c[2];
  for (int i = 0; i < n; ++i) {
    const Real rho = rhos[i];
    const Real model = c[0] / rho + c[1] / (rho * rho) + c[2] / cube(rho);
    fit.max_rel_residual = std::max(
        fit.max_rel_residual, std::abs(model - y[i]) / std::abs(y[i]));
  }
  return fit;
}

}  // namespace kummer
