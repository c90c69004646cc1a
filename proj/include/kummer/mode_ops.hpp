#pragma once
// Radial-spectral charts: geometry on [s0, s1] x M discretized per radial
// mode family. The weighted conformal Laplacian
//   []f = h^3 Delta_omega (h^{-1} f)
// decouples over cross-section mode families (k, m = pq): writing u = f/h,
//   [] f = h^3 { sigma^{-1} [ -(c u')' ] + V_ang u },
//   sigma = P D rho^2,  c = P rho (face values),
//   V_ang = [ lambda P + (2k + 4m) rho S ] / (rho P D),
// with P = psi', S = psi'', D = P + rho S along the radial profile and
// lambda = k(k+2).
//
// Discrete form: for each family the symmetric matrix K (w.r.t. the measure
// weights w = 4 sigma h^-4 ds) is assembled as
//   K = graph(m_face) + diag(w V + lambda angA + (2k+4m) angB) + closures,
//   m_face = 4 c_face / (ds h_i h_j),
// where V is *defined* as the diagonal defect of the h-conjugated operator;
// this makes [] h = 0 exact (any arrays), makes [] exactly self-adjoint in
// the discrete L^2(dmu), and makes Delta_Theta := [] - V an exact weighted
// graph Laplacian (so N = Delta_Theta + 1 is SPD and defines Sobolev norms).
//
// End closures act on the u-variable: decaying solutions have
//   u' = (sqrt(1+lambda) - 1) u  toward t -> -infinity,
//   u' = -(sqrt(1+lambda) + 1) u toward t -> +infinity,
// giving Robin terms kappa * 4c/h^2 on the end diagonal (kappa = 0 keeps the
// exact kernel for the (0,0) family: Neumann).

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "kummer/cross_section.hpp"
#include "kummer/tridiag.hpp"

namespace kummer {

enum class Closure { decay_down, decay_up, neumann, dirichlet };

struct SpectralChart {
  std::shared_ptr<const EigenSystem> es;
  int ns = 0;
  Real s0 = 0, ds = 0;
  Closure bottom = Closure::neumann, top = Closure::neumann;

  Eigen::VectorXd m_face;  // ns-1 graph weights of Delta_Theta
  Eigen::VectorXd Vpot;    // ns   discrete potential
  Eigen::VectorXd angA;    // ns   lambda-coefficient of the K diagonal
  Eigen::VectorXd angB;    // ns   (2k+4m)-coefficient of the K diagonal
  Eigen::VectorXd w;       // ns   measure weights (node mass in L^2(dmu))
  Eigen::VectorXd h;       // ns   physical conformal factor
  Eigen::VectorXd rho;     // ns   chart-coordinate rho (diagnostics)
  Real cbot = 0, ctop = 0; // closure coefficient bases 4c/h^2 at the ends
  // Orientation of h at each end (+1 ascending, -1 mirrored): a decaying
  // solution f ~ e^{-sqrt(1+lambda)|t|} has u = f/h Robin rate
  // sqrt(1+lambda) -+ eta at the bottom/top end.
  Real eta_bot = 1, eta_top = 1;

  Real s(int i) const { return s0 + i * ds; }
  int n_modes() const { return es->n_modes(); }
};

// Radial geometry sample used by the chart builder.
struct RadialPoint {
  Real P = 1, S = 0, rho = 1;
  Real h = 1;  // assembly-scale conformal factor
  Real h_phys = 1;  // physical-scale conformal factor stored on the chart
};
using RadialSampler = std::function<RadialPoint(Real s)>;

SpectralChart build_chart(std::shared_ptr<const EigenSystem> es, Real s0,
                          Real s1, Real ds, const RadialSampler& geom,
                          Closure bottom, Closure top);

// Symmetric family matrix K for degree k, family label m (includes closures;
// a dirichlet end gets no closure term -- callers eliminate that row).
TriDiag family_matrix(const SpectralChart& ch, int kdeg, int m);

// forward application of [] to a chart field [ns x n_modes].
Eigen::MatrixXd box_apply(const SpectralChart& ch, const Eigen::MatrixXd& f);

// direct solve [] f = rhs (+ shift * f). Throws on dirichlet closures
// (those are interface solves owned by the composite machinery) and on an
// exactly singular family unless deflate_kernel is set, in which case the
// (0,0)-family is solved in the complement of the exact kernel h.
Eigen::MatrixXd box_solve(const SpectralChart& ch, const Eigen::MatrixXd& rhs,
                          Real shift = 0.0, bool deflate_kernel = false);

// discrete potential V (the diagonal defect defining Delta_Theta);
// equals box_apply(1) restricted to the (0,0) family up to closures.
Eigen::VectorXd potential_v(const SpectralChart& ch);

// L^2(dmu) inner product and Sobolev norms <f, (Delta_Theta + 1)^k f>^(1/2).
Real chart_inner(const SpectralChart& ch, const Eigen::MatrixXd& a,
                 const Eigen::MatrixXd& b);
Real chart_norm(const SpectralChart& ch, const Eigen::MatrixXd& a);
Real chart_sobolev(const SpectralChart& ch, const Eigen::MatrixXd& f, int k);

// Lowest eigenvalues of [] per family (dense symmetric tridiagonal solve);
// the backbone of the kernel census on radial-spectral manifolds.
struct FamilyEigs {
  int kdeg = 0, m = 0;
  std::vector<Real> lowest;
};
std::vector<FamilyEigs> family_spectra(const SpectralChart& ch, int n_lowest);

// The exact kernel candidate: h in the (0,0) family, normalized in L^2(dmu).
Eigen::MatrixXd normalized_kernel_field(const SpectralChart& ch);

}  // namespace kummer
