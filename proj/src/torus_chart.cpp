#include "kummer/torus_chart.hpp"

#include <fftw3.h>

#include <cmath>
#include <vector>

namespace kummer {

TorusGrid make_torus_grid(const std::array<Real, 4>& L, int n) {
  if (n < 8 || n % 2 != 0)
    throw ConfigError("make_torus_grid: node count must be even and >= 8");
  for (int a = 0; a < 4; ++a)
    if (!(L[a] > 0))
      throw ConfigError("make_torus_grid: lattice entries must be positive");
  TorusGrid g;
  g.L = L;
  g.n = n;
  return g;
}

namespace {

// wrap v into [-p/2, p/2)
Real wrap_per(Real v, Real p) {
  v -= p * std::floor(v / p + 0.5);
  return v;
}

}  // namespace

Real half_lattice_distance(const TorusGrid& g, const std::array<Real, 4>& x) {
  Real s = 0;
  for (int a = 0; a < 4; ++a) {
    const Real u = wrap_per(x[a], 0.5 * g.L[a]);
    s += u * u;
  }
  return std::sqrt(s);
}

int nearest_fixed_point(const TorusGrid& g, const std::array<Real, 4>& x,
                        std::array<Real, 4>* rel) {
  int id = 0;
  for (int a = 0; a < 4; ++a) {
    const Real half = 0.5 * g.L[a];
    const Real u = wrap_per(x[a], half);
    // x - u is an integer multiple of L/2; an odd multiple is a half point
    const long m = std::lround((x[a] - u) / half);
    if (m & 1L) id |= (1 << a);
    if (rel) (*rel)[a] = u;
  }
  return id;
}

int nearest_fixed_point_node(const TorusGrid& g, std::int64_t node,
                             std::array<Real, 4>* rel) {
  // Fixed points sit at index multiples of n/2 (n is even), so the whole
  // identification is exact integer arithmetic; the displacement d * dx
  // negates exactly under i -> n - i. Ties at n/4 round toward the origin
  // copy, mirroring wrap_per's round-half-even bias direction only up to a
  // set of measure zero (the classification is symmetric in |d| either way).
  const auto c = g.coords(node);
  const int n = g.n, half = n / 2;
  int id = 0;
  for (int a = 0; a < 4; ++a) {
    // wrapped offsets from the 0-copy and the n/2-copy, both in [-n/2, n/2)
    const int d0 = (c[a] + half) % n - half;
    const int d1 = c[a] - half;
    const bool use1 = std::abs(d1) < std::abs(d0);
    if (use1) id |= (1 << a);
    if (rel) (*rel)[a] = (use1 ? d1 : d0) * g.dx(a);
  }
  return id;
}

void symmetrize_even(const TorusGrid& g, TorusField& f) {
  if (f.size() != g.size()) throw ShapeError("symmetrize_even: field size");
  const int n = g.n;
  for (int i3 = 0; i3 < n; ++i3)
    for (int i2 = 0; i2 < n; ++i2)
      for (int i1 = 0; i1 < n; ++i1)
        for (int i0 = 0; i0 < n; ++i0) {
          const std::int64_t i = g.index(i0, i1, i2, i3);
          const std::int64_t j = g.index(-i0, -i1, -i2, -i3);
          if (j < i) continue;
          const Real v = 0.5 * (f[i] + f[j]);
          f[i] = v;
          f[j] = v;
        }
}

Real even_defect(const TorusGrid& g, const TorusField& f) {
  if (f.size() != g.size()) throw ShapeError("even_defect: field size");
  const int n = g.n;
  Real sup = 0;
  for (int i3 = 0; i3 < n; ++i3)
    for (int i2 = 0; i2 < n; ++i2)
      for (int i1 = 0; i1 < n; ++i1)
        for (int i0 = 0; i0 < n; ++i0) {
          const std::int64_t i = g.index(i0, i1, i2, i3);
          const std::int64_t j = g.index(-i0, -i1, -i2, -i3);
          sup = std::max(sup, std::abs(f[i] - f[j]));
        }
  return sup;
}

Real interpolate(const TorusGrid& g, const TorusField& f,
                 const std::array<Real, 4>& x, int reach) {
  if (f.size() != g.size()) throw ShapeError("interpolate: field size");
  if (reach != 1 && reach != 2)
    throw ConfigError("interpolate: reach must be 1 (linear) or 2 (cubic)");
  int base[4];
  Real wts[4][4];
  int ntap = (reach == 1) ? 2 : 4;
  for (int a = 0; a < 4; ++a) {
    const Real t = x[a] / g.dx(a);
    const Real fl = std::floor(t);
    const Real u = t - fl;
    base[a] = static_cast<int>(fl);
    if (reach == 1) {
      wts[a][0] = 1.0 - u;
      wts[a][1] = u;
    } else {
      // cubic Lagrange on offsets {-1, 0, 1, 2}
      wts[a][0] = -u * (u - 1.0) * (u - 2.0) / 6.0;
      wts[a][1] = (u * u - 1.0) * (u - 2.0) / 2.0;
      wts[a][2] = -u * (u + 1.0) * (u - 2.0) / 2.0;
      wts[a][3] = u * (u * u - 1.0) / 6.0;
    }
  }
  const int off0 = (reach == 1) ? 0 : -1;
  Real acc = 0;
  for (int t3 = 0; t3 < ntap; ++t3)
    for (int t2 = 0; t2 < ntap; ++t2)
      for (int t1 = 0; t1 < ntap; ++t1) {
        const Real w123 = wts[1][t1] * wts[2][t2] * wts[3][t3];
        const int i1 = base[1] + off0 + t1;
        const int i2 = base[2] + off0 + t2;
        const int i3 = base[3] + off0 + t3;
        for (int t0 = 0; t0 < ntap; ++t0) {
          const std::int64_t i =
              g.index(base[0] + off0 + t0, i1, i2, i3);
          acc += w123 * wts[0][t0] * f[i];
        }
      }
  return acc;
}

TorusField axis_derivative(const TorusGrid& g, const TorusField& f, int axis,
                           int order) {
  if (f.size() != g.size()) throw ShapeError("axis_derivative: field size");
  if (axis < 0 || axis > 3) throw ConfigError("axis_derivative: axis 0..3");
  if (order != 1 && order != 2)
    throw ConfigError("axis_derivative: order 1 or 2");
  const Real d = g.dx(axis);
  TorusField out(g.size());
  const int n = g.n;
  std::int64_t stride = 1;
  for (int a = 0; a < axis; ++a) stride *= n;
  const std::int64_t span = stride * n;
  const std::int64_t n_outer = g.size() / span;
  const Real c1 = 1.0 / (12.0 * d), c2 = 1.0 / (12.0 * d * d);
  for (std::int64_t o = 0; o < n_outer; ++o) {
    const std::int64_t base = o * span;
    for (int c = 0; c < n; ++c) {
      const Real* fm2 = f.data() + base + std::int64_t(g.wrap(c - 2)) * stride;
      const Real* fm1 = f.data() + base + std::int64_t(g.wrap(c - 1)) * stride;
      const Real* f0 = f.data() + base + std::int64_t(c) * stride;
      const Real* fp1 = f.data() + base + std::int64_t(g.wrap(c + 1)) * stride;
      const Real* fp2 = f.data() + base + std::int64_t(g.wrap(c + 2)) * stride;
      Real* dst = out.data() + base + std::int64_t(c) * stride;
      if (order == 1) {
        // paired differences: fields constant along the axis differentiate
        // to exactly zero (each pair cancels bitwise before any rounding)
        for (std::int64_t j = 0; j < stride; ++j)
          dst[j] = ((fm2[j] - fp2[j]) + 8.0 * (fp1[j] - fm1[j])) * c1;
      } else {
        for (std::int64_t j = 0; j < stride; ++j)
          dst[j] = (-fm2[j] + 16.0 * fm1[j] - 30.0 * f0[j] + 16.0 * fp1[j] -
                    fp2[j]) *
                   c2;
      }
    }
  }
  return out;
}

Herm2Field hermitian_hessian(const TorusGrid& g, const TorusField& f) {
  Herm2Field H;
  const TorusField f11 = axis_derivative(g, f, 0, 2);
  const TorusField f22 = axis_derivative(g, f, 1, 2);
  const TorusField f33 = axis_derivative(g, f, 2, 2);
  const TorusField f44 = axis_derivative(g, f, 3, 2);
  const TorusField f1 = axis_derivative(g, f, 0, 1);
  const TorusField f2 = axis_derivative(g, f, 1, 1);
  const TorusField f13 = axis_derivative(g, f1, 2, 1);
  const TorusField f14 = axis_derivative(g, f1, 3, 1);
  const TorusField f23 = axis_derivative(g, f2, 2, 1);
  const TorusField f24 = axis_derivative(g, f2, 3, 1);
  H.a11 = 0.25 * (f11 + f22);
  H.a22 = 0.25 * (f33 + f44);
  H.re12 = 0.25 * (f13 + f24);
  H.im12 = 0.25 * (f14 - f23);
  return H;
}

Real torus_integral(const TorusGrid& g, const TorusField& f) {
  if (f.size() != g.size()) throw ShapeError("torus_integral: field size");
  return f.sum() * g.cell_volume();
}

TorusField flat_laplacian_apply(const TorusGrid& g, const TorusField& u) {
  if (u.size() != g.size()) throw ShapeError("flat_laplacian_apply: size");
  TorusField out = TorusField::Zero(g.size());
  const int n = g.n;
  std::int64_t stride = 1;
  for (int a = 0; a < 4; ++a) {
    const Real inv_d2 = 1.0 / (g.dx(a) * g.dx(a));
    const std::int64_t span = stride * n;
    const std::int64_t n_outer = g.size() / span;
    for (std::int64_t o = 0; o < n_outer; ++o) {
      const std::int64_t base = o * span;
      for (int c = 0; c < n; ++c) {
        const Real* um = u.data() + base + std::int64_t(g.wrap(c - 1)) * stride;
        const Real* u0 = u.data() + base + std::int64_t(c) * stride;
        const Real* up = u.data() + base + std::int64_t(g.wrap(c + 1)) * stride;
        Real* dst = out.data() + base + std::int64_t(c) * stride;
        for (std::int64_t j = 0; j < stride; ++j)
          dst[j] += (2.0 * u0[j] - um[j] - up[j]) * inv_d2;
      }
    }
    stride *= n;
  }
  return out;
}

TorusField conj_box_apply(const TorusGrid& g, const TorusField& h,
                          const TorusField& f) {
  if (h.size() != g.size() || f.size() != g.size())
    throw ShapeError("conj_box_apply: field size");
  if (h.minCoeff() <= 0)
    throw PositivityError("conj_box_apply: conformal factor must be positive");
  const TorusField u = f.cwiseQuotient(h);
  const TorusField lu = flat_laplacian_apply(g, u);
  return h.array().cube() * lu.array();
}

TorusField conj_potential(const TorusGrid& g, const TorusField& h) {
  if (h.size() != g.size()) throw ShapeError("conj_potential: field size");
  if (h.minCoeff() <= 0)
    throw PositivityError("conj_potential: conformal factor must be positive");
  const TorusField inv = h.cwiseInverse();
  const TorusField li = flat_laplacian_apply(g, inv);
  return h.array().cube() * li.array();
}

// --- FFT flat solver --------------------------------------------------------

struct FlatPoisson::Impl {
  TorusGrid g;
  Real shift = 0;
  fftw_plan fwd = nullptr, bwd = nullptr;
  double* real_buf = nullptr;
  fftw_complex* spec_buf = nullptr;
  std::vector<Real> symbol;  // per spectral bin
  std::int64_t n_spec = 0;
};

FlatPoisson::FlatPoisson(const TorusGrid& g, Real shift)
    : impl_(new Impl) {
  impl_->g = g;
  impl_->shift = shift;
  const int n = g.n;
  const std::int64_t n_real = g.size();
  impl_->n_spec = std::int64_t(n) * n * n * (n / 2 + 1);
  impl_->real_buf = fftw_alloc_real(n_real);
  impl_->spec_buf = fftw_alloc_complex(impl_->n_spec);
  if (!impl_->real_buf || !impl_->spec_buf)
    throw SolverError("FlatPoisson: allocation failed");
  // storage is x1-fastest, so in FFTW's row-major convention the dimension
  // order is (x4, x3, x2, x1) and the halved axis is x1
  int dims[4] = {n, n, n, n};
  impl_->fwd = fftw_plan_dft_r2c(4, dims, impl_->real_buf, impl_->spec_buf,
                                 FFTW_ESTIMATE);
  impl_->bwd = fftw_plan_dft_c2r(4, dims, impl_->spec_buf, impl_->real_buf,
                                 FFTW_ESTIMATE);
  if (!impl_->fwd || !impl_->bwd) throw SolverError("FlatPoisson: plan failed");
  // symbol of the positive flat Laplacian: sum_a (2 - 2 cos(2 pi k_a/n))/dx_a^2
  impl_->symbol.resize(impl_->n_spec);
  std::vector<Real> sym1(n * 4);
  for (int a = 0; a < 4; ++a) {
    const Real inv_d2 = 1.0 / (g.dx(a) * g.dx(a));
    for (int k = 0; k < n; ++k)
      sym1[a * n + k] = (2.0 - 2.0 * std::cos(2.0 * kPi * k / n)) * inv_d2;
  }
  std::int64_t idx = 0;
  const int nh = n / 2 + 1;
  for (int k4 = 0; k4 < n; ++k4)
    for (int k3 = 0; k3 < n; ++k3)
      for (int k2 = 0; k2 < n; ++k2)
        for (int k1 = 0; k1 < nh; ++k1)
          impl_->symbol[idx++] = sym1[3 * n + k4] + sym1[2 * n + k3] +
                                 sym1[1 * n + k2] + sym1[0 * n + k1] + shift;
}

FlatPoisson::~FlatPoisson() {
  if (impl_) {
    if (impl_->fwd) fftw_destroy_plan(impl_->fwd);
    if (impl_->bwd) fftw_destroy_plan(impl_->bwd);
    if (impl_->real_buf) fftw_free(impl_->real_buf);
    if (impl_->spec_buf) fftw_free(impl_->spec_buf);
  }
}

void FlatPoisson::solve(const TorusField& r, TorusField& u) const {
  const TorusGrid& g = impl_->g;
  if (r.size() != g.size()) throw ShapeError("FlatPoisson::solve: size");
  for (std::int64_t i = 0; i < g.size(); ++i) impl_->real_buf[i] = r[i];
  fftw_execute(impl_->fwd);
  const Real scale = 1.0 / Real(g.size());
  for (std::int64_t k = 0; k < impl_->n_spec; ++k) {
    const Real s = impl_->symbol[k];
    if (s == 0.0) {  // zero mode with shift 0: project out
      impl_->spec_buf[k][0] = 0.0;
      impl_->spec_buf[k][1] = 0.0;
    } else {
      impl_->spec_buf[k][0] *= scale / s;
      impl_->spec_buf[k][1] *= scale / s;
    }
  }
  fftw_execute(impl_->bwd);
  u.resize(g.size());
  for (std::int64_t i = 0; i < g.size(); ++i) u[i] = impl_->real_buf[i];
}

}  // namespace kummer
