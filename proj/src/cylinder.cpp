#include "kummer/cylinder.hpp"

#include <cmath>

#include "kummer/stencils.hpp"
#include "kummer/tridiag.hpp"

namespace kummer {

void require_compatible(const CylinderField& a, const CylinderField& b) {
  if (!a.es || !b.es) throw ShapeError("cylinder field without a basis");
  if (a.es.get() != b.es.get())
    throw ShapeError("cylinder fields built on different cross-section bases");
  if (!(a.grid == b.grid))
    throw ShapeError("cylinder fields on different axial grids");
}

namespace {

// Symmetric system A and mass diagonal M for one mode.
void mode_system(Real lambda, const AxialGrid& g, EndCondition bottom,
                 EndCondition top, TriDiag& a, Eigen::VectorXd& mass) {
  if (g.n < 3) throw ShapeError("axial grid too short");
  if (!(lambda >= 0)) throw DomainError("mode eigenvalue must be >= 0");
  const int n = g.n;
  const Real dt = g.dt();
  const Real c = 1.0 + lambda;
  a.diag = Eigen::VectorXd::Zero(n);
  a.sub = Eigen::VectorXd::Constant(n - 1, -1.0 / dt);
  mass = Eigen::VectorXd::Constant(n, dt);
  mass[0] = mass[n - 1] = 0.5 * dt;
  for (int i = 0; i < n; ++i) {
    Real stiff = 0;
    if (i > 0) stiff += 1.0 / dt;
    if (i + 1 < n) stiff += 1.0 / dt;
    a.diag[i] = stiff + c * mass[i];
  }
  const Real rate = std::sqrt(c);
  auto close_end = [&](int i, EndCondition ec) {
    switch (ec) {
      case EndCondition::decay:
        a.diag[i] += rate;
        break;
      case EndCondition::neumann:
        break;
      case EndCondition::dirichlet_zero:
        // pin by a huge diagonal (exactly representable power of two so the
        // elimination stays well-conditioned and reproducible)
        a.diag[i] += 0x1p80;
        break;
    }
  };
  close_end(0, bottom);
  close_end(n - 1, top);
}

}  // namespace

Eigen::VectorXd solve_mode_ode(Real lambda, const AxialGrid& g,
                               const Eigen::VectorXd& rhs, EndCondition bottom,
                               EndCondition top) {
  if (rhs.size() != g.n) throw ShapeError("solve_mode_ode: rhs size mismatch");
  TriDiag a;
  Eigen::VectorXd mass;
  mode_system(lambda, g, bottom, top, a, mass);
  TriDiagFactor f(a);
  return f.solve(mass.cwiseProduct(rhs));
}

Eigen::VectorXd apply_mode_operator(Real lambda, const AxialGrid& g,
                                    const Eigen::VectorXd& f, EndCondition bottom,
                                    EndCondition top) {
  if (f.size() != g.n)
    throw ShapeError("apply_mode_operator: field size mismatch");
  TriDiag a;
  Eigen::VectorXd mass;
  mode_system(lambda, g, bottom, top, a, mass);
  return a.apply(f).cwiseQuotient(mass);
}

CylinderField solve_cylinder(const CylinderField& rhs, EndCondition bottom,
                             EndCondition top) {
  CylinderField out(rhs.es, rhs.grid);
  for (int j = 0; j < rhs.es->n_modes(); ++j)
    out.coef.col(j) =
        solve_mode_ode(rhs.es->modes[j].lambda, rhs.grid, rhs.coef.col(j),
                       bottom, top);
  return out;
}

CylinderField apply_cylinder_operator(const CylinderField& f, EndCondition bottom,
                                      EndCondition top) {
  CylinderField out(f.es, f.grid);
  for (int j = 0; j < f.es->n_modes(); ++j)
    out.coef.col(j) = apply_mode_operator(f.es->modes[j].lambda, f.grid,
                                          f.coef.col(j), bottom, top);
  return out;
}

Real inner_l2(const CylinderField& a, const CylinderField& b) {
  require_compatible(a, b);
  const int n = a.grid.n;
  const Real dt = a.grid.dt();
  Real s = 0;
  for (int i = 0; i < n; ++i) {
    const Real w = (i == 0 || i == n - 1) ? 0.5 * dt : dt;
    s += w * a.coef.row(i).dot(b.coef.row(i));
  }
  return s;
}

Real norm_l2(const CylinderField& a) { return std::sqrt(inner_l2(a, a)); }

Real sobolev_norm(const CylinderField& f, int k) {
  if (k < 0 || k > 3) throw ConfigError("sobolev_norm: order must be 0..3");
  const int n = f.grid.n;
  const Real dt = f.grid.dt();
  const Eigen::VectorXd w = simpson_weights(n, dt);
  // binomials for k <= 3
  static const int binom[4][4] = {
      {1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
  Real total = 0;
  for (int m = 0; m < f.es->n_modes(); ++m) {
    const Real c = 1.0 + f.es->modes[m].lambda;
    Eigen::VectorXd der = f.coef.col(m);
    for (int j = 0; j <= k; ++j) {
      if (j > 0) der = uniform_derivative(f.coef.col(m), dt, j, 6);
      Real e = 0;
      for (int i = 0; i < n; ++i) e += w[i] * der[i] * der[i];
      total += binom[k][j] * std::pow(c, k - j) * e;
    }
  }
  return std::sqrt(total);
}

Eigen::MatrixXd field_samples(const CylinderField& f, const SphereGrid& nodes) {
  Eigen::MatrixXd vals(nodes.n_nodes(), f.es->n_modes());
  for (int j = 0; j < f.es->n_modes(); ++j)
    for (int i = 0; i < nodes.n_nodes(); ++i)
      vals(i, j) = f.es->modes[j].poly.eval(nodes.z1[i], nodes.z2[i]).real();
  return f.coef * vals.transpose();  // [n_t x n_nodes]
}

namespace {
const SphereGrid& product_grid_for(const EigenSystem& es) {
  // grids cached per (kind, max_degree); exactness 4K+2 integrates products
  // of two basis fields exactly
  static std::vector<std::pair<std::pair<int, int>, SphereGrid>> cache;
  const int kind = static_cast<int>(es.spec.kind);
  for (auto& e : cache)
    if (e.first == std::make_pair(kind, es.spec.max_degree)) return e.second;
  if (es.spec.kind == CrossKind::circle) {
    // circle projection grid already has ample exactness; reuse it
    cache.push_back({{kind, es.spec.max_degree}, es.grid});
    return cache.back().second;
  }
  cache.push_back(
      {{kind, es.spec.max_degree},
       make_sphere_grid(4 * es.spec.max_degree + 2,
                        es.spec.kind == CrossKind::sphere3_quotient)});
  return cache.back().second;
}
}  // namespace

Real sup_norm(const CylinderField& f) {
  const SphereGrid& g = product_grid_for(*f.es);
  const Eigen::MatrixXd s = field_samples(f, g);
  return s.cwiseAbs().maxCoeff();
}

Real l4_norm(const CylinderField& f) {
  const SphereGrid& g = product_grid_for(*f.es);
  const Eigen::MatrixXd s = field_samples(f, g);
  const Eigen::VectorXd wt = simpson_weights(f.grid.n, f.grid.dt());
  Real total = 0;
  for (int i = 0; i < f.grid.n; ++i) {
    Real level = 0;
    for (int nidx = 0; nidx < g.n_nodes(); ++nidx)
      level += g.w[nidx] * sq(sq(s(i, nidx)));
    total += wt[i] * level;
  }
  return std::pow(total, 0.25);
}

CylinderField multiply(const CylinderField& a, const CylinderField& b,
                       Real tail_tol) {
  require_compatible(a, b);
  const SphereGrid& g = product_grid_for(*a.es);
  // mode values on the product grid
  Eigen::MatrixXd vals(g.n_nodes(), a.es->n_modes());
  for (int j = 0; j < a.es->n_modes(); ++j)
    for (int i = 0; i < g.n_nodes(); ++i)
      vals(i, j) = a.es->modes[j].poly.eval(g.z1[i], g.z2[i]).real();
  Eigen::MatrixXd wvals = vals;
  for (int i = 0; i < g.n_nodes(); ++i) wvals.row(i) *= g.w[i];

  CylinderField out(a.es, a.grid);
  Real prod_energy = 0, proj_energy = 0;
  const Real dt = a.grid.dt();
  for (int i = 0; i < a.grid.n; ++i) {
    const Eigen::VectorXd sa = vals * a.coef.row(i).transpose();
    const Eigen::VectorXd sb = vals * b.coef.row(i).transpose();
    const Eigen::VectorXd prod = sa.cwiseProduct(sb);
    const Eigen::VectorXd c = wvals.transpose() * prod;
    out.coef.row(i) = c.transpose();
    const Real w = (i == 0 || i == a.grid.n - 1) ? 0.5 * dt : dt;
    Real pe = 0;
    for (int nidx = 0; nidx < g.n_nodes(); ++nidx)
      pe += g.w[nidx] * prod[nidx] * prod[nidx];
    prod_energy += w * pe;
    proj_energy += w * c.squaredNorm();
  }
  const Real tail = prod_energy - proj_energy;
  if (tail > tail_tol * tail_tol * prod_energy && prod_energy > 0)
    throw AliasingError(
        "multiply: spectral tail beyond the basis exceeds tolerance "
        "(relative tail " +
        format_double(std::sqrt(std::max(tail, 0.0) / prod_energy)) + " > " +
        format_double(tail_tol) + "); raise max_degree");
  return out;
}

EmbeddingProbeReport embedding_ratio_probe(
    const std::shared_ptr<const EigenSystem>& es, const AxialGrid& g,
    int n_probes, std::uint64_t seed, Real bump_center, Real bump_width) {
  EmbeddingProbeReport rep;
  Rng rng(seed);
  for (int p = 0; p < n_probes; ++p) {
    CylinderField f(es, g);
    // random band-limited coefficients under a Gaussian axial envelope
    Eigen::VectorXd amp(es->n_modes());
    for (int j = 0; j < es->n_modes(); ++j)
      amp[j] = rng.gauss() / (1.0 + es->modes[j].lambda);
    for (int i = 0; i < g.n; ++i) {
      const Real t = g.t(i);
      const Real env = std::exp(-sq((t - bump_center) / bump_width));
      f.coef.row(i) = env * amp.transpose();
    }
    const Real c0 = sup_norm(f) / sobolev_norm(f, 3);
    const Real l4 = l4_norm(f) / sobolev_norm(f, 1);
    rep.c0_ratios.push_back(c0);
    rep.l4_ratios.push_back(l4);
    rep.c0_ratio_max = std::max(rep.c0_ratio_max, c0);
    rep.l4_ratio_max = std::max(rep.l4_ratio_max, l4);
  }
  return rep;
}

}  // namespace kummer
