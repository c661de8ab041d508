#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "tadlab/potential.hpp"

namespace tadlab {

/// Principal Dirichlet eigenpair of L = -V' d/dx + beta^{-1} d^2/dx^2 on a
/// basin, discretized on n+1 uniform nodes.  Weights are carried shifted,
/// w = exp(-beta (V - V0)), so nothing underflows near the minimum.
struct EigenPair {
  double a = 0.0;
  double b = 0.0;
  double h = 0.0;
  double beta = 0.0;
  double x0 = 0.0;
  double V0 = 0.0;
  std::vector<double> x;  // n+1 nodes
  std::vector<double> u;  // u(a) = u(b) = 0, u(x0) = 1
  // u_{k+1} - u_k, size n.  Carried separately (and in extended precision)
  // because near the minimum it is far below the rounding of u.
  std::vector<long double> du;
  std::vector<double> w;  // nodal weights
  std::vector<double> c;  // midpoint conductances, size n
  double lambda = 0.0;
  double lambda2 = 0.0;
  double residual = 0.0;  // relative, weighted norm

  std::size_t n() const { return x.empty() ? 0 : x.size() - 1; }
};

/// max(4000, ceil(250 beta)): keeps ~8 nodes across the boundary layer.
std::size_t default_grid_n(double beta);

/// Conservative finite differences on beta^{-1} (w u')' = -lambda w u.
/// lambda comes from inverse iteration (a positive-sum Rayleigh quotient,
/// so it keeps relative accuracy when it is ~1e-14); lambda2 from Sturm
/// bisection.  n = 0 selects default_grid_n(beta).
EigenPair solve_principal_eigenpair(const Potential1D& pot, const Basin& basin, double beta,
                                    std::size_t n = 0);

/// Smallest k eigenvalues of the symmetrized discrete operator by Sturm
/// bisection.  Absolute accuracy ~1e-13 * max diagonal, so only useful for
/// lambda1 at moderate beta.
std::vector<double> bisect_eigenvalues(const EigenPair& eig, int k);

/// u w normalized to unit trapezoidal integral, on eig.x.
std::vector<double> qsd_density(const EigenPair& eig);

struct ExitStatistics {
  double lambda = 0.0;
  double p_left = 0.5;
  double p_right = 0.5;
  // (w u')(endpoint) from the conservative end fluxes, in units of
  // exp(-beta V0).
  double flux_left = 0.0;
  double flux_right = 0.0;
  double mass = 0.0;     // trapezoid of u w, same units
  double defect = 0.0;   // |flux sum / (beta lambda mass) - 1| before renormalizing
  double stencil_defect = 0.0;  // same identity with 3-point one-sided derivatives

  double p(Side s) const { return s == Side::left ? p_left : p_right; }
  double rate(Side s) const { return lambda * p(s); }
};

inline constexpr double kMaxStencilDefect = 1e-3;

ExitStatistics exit_statistics(const EigenPair& eig);

struct ThetaEntry {
  double theta_exact = 1.0;
  double theta_arrhenius = 1.0;
  double gap() const { return theta_exact / theta_arrhenius - 1.0; }
};

struct ThetaTable {
  double beta_hi = 0.0;
  double beta_lo = 0.0;
  std::array<ThetaEntry, 2> side{};  // indexed by Side

  const ThetaEntry& operator[](Side s) const { return side[s == Side::left ? 0 : 1]; }
  double min_theta() const;
};

ThetaTable theta_table(const Potential1D& pot, const Basin& basin, double beta_hi, double beta_lo,
                       std::size_t n = 0);
ThetaTable theta_table(const Basin& basin, const ExitStatistics& hi, double beta_hi,
                       const ExitStatistics& lo, double beta_lo);

/// (sqrt(V''(x0) |V''(x_i)|) / 2 pi) exp(-beta (V(x_i) - V(x0))).
double kramers_rate(const Basin& basin, Side side, double beta);

struct GridFunction {
  std::vector<double> x;
  std::vector<double> y;
};

enum class Segment { left_of_min, right_of_min };

/// f(x) = int_a^x e^{beta V} / int_a^{x0} e^{beta V} on [a, x0] (and the
/// mirror image on [x0, b]), trapezoid on the nodes a + j h that fall in
/// the segment plus x0 itself.  Evaluated with the integrand scaled by
/// exp(-beta max V) so it cannot overflow.
GridFunction comparison_function_f(const Potential1D& pot, const Basin& basin, double beta,
                                   Segment seg, std::size_t n = 0);

struct Proximity {
  double max_f_u = 0.0;
  double max_df_du = 0.0;
};

/// max |f - u| and max |f' - u'| over one segment.  Needs x0 on a grid node
/// of eig (true for the canonical well at even n).
Proximity f_u_proximity(const Potential1D& pot, const Basin& basin, const EigenPair& eig, Segment seg);

/// Affine map x = a + (x0 - a) y taking the basin to (0, b') with the minimum
/// at 1 and V shifted so the left saddle sits at 0.  Polynomial potentials
/// only.
struct NormalizedBasin {
  Potential1D pot;
  Basin basin;
  double scale;  // x0 - a
};
NormalizedBasin normalize_basin(const Potential1D& pot, const Basin& basin);

}  // namespace tadlab
