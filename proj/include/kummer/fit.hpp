#pragma once
// Least-squares line fits for measured scaling laws (log-log slopes with
// 95% confidence intervals).

#include <cmath>
#include <cstddef>
#include <vector>

#include "kummer/common.hpp"

namespace kummer {

struct LineFit {
  Real slope = 0.0;
  Real intercept = 0.0;
  Real slope_stderr = 0.0;
  Real slope_ci95 = 0.0;  // half-width of a 95% confidence interval
  Real r2 = 0.0;
  int n = 0;
};

// Two-sided Student-t 0.975 quantiles for small degrees of freedom.
inline Real student_t_975(int dof) {
  static const Real table[] = {12.706, 4.303, 3.182, 2.776, 2.571,
                               2.447,  2.365, 2.306, 2.262, 2.228};
  if (dof < 1) return 12.706;
  if (dof <= 10) return table[dof - 1];
  // Adequate for the dof range used here (fits have <= ~12 points).
  return 2.0 + 2.6 / dof;
}

inline LineFit fit_line(const std::vector<Real>& x, const std::vector<Real>& y) {
  if (x.size() != y.size()) throw ShapeError("fit_line: size mismatch");
  const int n = static_cast<int>(x.size());
  if (n < 2) throw ShapeError("fit_line: need at least 2 points");
  Real sx = 0, sy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const Real mx = sx / n, my = sy / n;
  Real sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  Real ss_res = 0;
  for (int i = 0; i < n; ++i) {
    const Real r = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += r * r;
  }
  f.r2 = (syy > 0) ? 1.0 - ss_res / syy : 1.0;
  if (n > 2) {
    const Real s2 = ss_res / (n - 2);
    f.slope_stderr = std::sqrt(s2 / sxx);
    f.slope_ci95 = student_t_975(n - 2) * f.slope_stderr;
  }
  return f;
}

// Fit log(y) = slope*log(x) + c. Skips nothing; throws on nonpositive y.
inline LineFit fit_loglog(const std::vector<Real>& x, const std::vector<Real>& y) {
  std::vector<Real> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0 || y[i] <= 0)
      throw DomainError("fit_loglog: nonpositive sample");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return fit_line(lx, ly);
}

// Fit log(y) = slope*t + c (exponential rate against a linear abscissa).
inline LineFit fit_semilog(const std::vector<Real>& t, const std::vector<Real>& y) {
  std::vector<Real> ly(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] <= 0) throw DomainError("fit_semilog: nonpositive sample");
    ly[i] = std::log(y[i]);
  }
  return fit_line(t, ly);
}

}  // namespace kummer
