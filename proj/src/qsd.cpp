#include "tadlab/qsd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tadlab/error.hpp"

namespace tadlab {
namespace {

constexpr double kWeightFloor = 1e-290;

// Solves K v = rhs (Dirichlet, conservative) for the next inverse-iteration
// vector and returns the unnormalized increments dv_k = v_{k+1} - v_k.
// Both end fluxes are recovered from positive sums and each flux is taken
// from whichever end accumulates less, so no step subtracts nearly equal
// large numbers except where u is O(1).
void flux_solve(const std::vector<double>& f, const std::vector<long double>& rc, std::vector<long double>& dv,
                std::size_t& split) {
  using ld = long double;
  const std::size_t n = rc.size();
  std::vector<ld> sl(n), sr(n);
  sl[0] = 0.0;
  for (std::size_t k = 1; k < n; ++k) sl[k] = sl[k - 1] + f[k];
  sr[n - 1] = 0.0;
  for (std::size_t k = n - 1; k-- > 0;) sr[k] = sr[k + 1] + f[k + 1];
  ld sum_rc = 0.0L, sum_l = 0.0L, sum_r = 0.0L;
  for (std::size_t k = 0; k < n; ++k) {
    sum_rc += rc[k];
    sum_l += sl[k] * rc[k];
    sum_r += sr[k] * rc[k];
  }
  const ld fl = sum_l / sum_rc;
  const ld fr = sum_r / sum_rc;
  dv.resize(n);
  split = n;
  for (std::size_t k = 0; k < n; ++k) {
    const bool left = sl[k] <= sr[k];
    if (!left && split == n) split = k;
    dv[k] = (left ? fl - sl[k] : sr[k] - fr) * rc[k];
  }
}

double interp_at(const std::vector<double>& x, const std::vector<double>& y, double h, double at) {
  const std::size_t n = x.size() - 1;
  auto j = static_cast<std::size_t>(std::llround((at - x[0]) / h));
  j = std::clamp<std::size_t>(j, 1, n - 1);
  const double x0 = x[j - 1], x1 = x[j], x2 = x[j + 1];
  const double l0 = (at - x1) * (at - x2) / ((x0 - x1) * (x0 - x2));
  const double l1 = (at - x0) * (at - x2) / ((x1 - x0) * (x1 - x2));
  const double l2 = (at - x0) * (at - x1) / ((x2 - x0) * (x2 - x1));
  return l0 * y[j - 1] + l1 * y[j] + l2 * y[j + 1];
}

}  // namespace

std::size_t default_grid_n(double beta) {
  return std::max<std::size_t>(4000, static_cast<std::size_t>(std::ceil(250.0 * beta)));
}

EigenPair solve_principal_eigenpair(const Potential1D& pot, const Basin& basin, double beta, std::size_t n) {
  if (!(beta > 0.0)) throw SolverError("beta must be positive");
  if (n == 0) n = default_grid_n(beta);
  if (n < 200) throw SolverError("grid needs n >= 200");
  EigenPair e;
  e.a = basin.bounds.lo;
  e.b = basin.bounds.hi;
  e.h = (e.b - e.a) / static_cast<double>(n);
  e.beta = beta;
  e.x0 = basin.x0;
  e.V0 = basin.V0;
  e.x.resize(n + 1);
  e.w.resize(n + 1);
  e.c.resize(n);
  for (std::size_t j = 0; j <= n; ++j) {
    e.x[j] = j == n ? e.b : e.a + static_cast<double>(j) * e.h;
    e.w[j] = std::exp(-beta * (pot.eval(e.x[j]) - e.V0));
  }
  std::vector<long double> rc(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double xm = e.a + (static_cast<double>(k) + 0.5) * e.h;
    e.c[k] = std::exp(-beta * (pot.eval(xm) - e.V0));
    if (!(e.c[k] > kWeightFloor) || !std::isfinite(e.c[k])) {
      std::ostringstream os;
      os << "Boltzmann weights leave double range at beta=" << beta
         << "; a log-space solver would be needed (reduce beta or rescale V)";
      throw UnderflowError(os.str());
    }
    rc[k] = 1.0L / e.c[k];
  }

  const double bh2 = beta * e.h * e.h;
  std::vector<double> u(n + 1, 1.0), f(n + 1, 0.0);
  std::vector<long double> dv;
  u[0] = u[n] = 0.0;
  double lambda = 0.0;
  int stable = 0;
  for (int it = 0; it < 500 && stable < 3; ++it) {
    for (std::size_t j = 1; j < n; ++j) f[j] = e.w[j] * u[j];
    std::size_t split = n;
    flux_solve(f, rc, dv, split);
    // Left part by forward sums, right part by backward sums.
    std::vector<long double> acc(n + 1, 0.0L);
    for (std::size_t j = 1; j <= split && j < n; ++j) acc[j] = acc[j - 1] + dv[j - 1];
    for (std::size_t j = n - 1; j > split; --j) acc[j] = acc[j + 1] - dv[j];
    long double umax = 0.0L;
    for (const auto v : acc) umax = std::max(umax, v);
    if (!(umax > 0.0L) || !std::isfinite(static_cast<double>(umax)))
      throw SolverError("inverse iteration broke down");
    for (std::size_t j = 0; j <= n; ++j) u[j] = static_cast<double>(acc[j] / umax);
    long double num = 0.0L;
    for (std::size_t k = 0; k < n; ++k) {
      dv[k] /= umax;
      num += e.c[k] * dv[k] * dv[k];
    }
    double den = 0.0;
    for (std::size_t j = 1; j < n; ++j) den += e.w[j] * u[j] * u[j];
    const double next = static_cast<double>(num / (bh2 * den));
    stable = std::abs(next - lambda) <= 4e-16 * next ? stable + 1 : 0;
    lambda = next;
  }
  for (std::size_t j = 1; j < n; ++j)
    if (!(u[j] > 0.0)) throw SolverError("principal eigenvector changed sign");

  const double u_at_x0 = interp_at(e.x, u, e.h, e.x0);
  for (auto& v : u) v /= u_at_x0;
  for (auto& v : dv) v /= static_cast<long double>(u_at_x0);
  e.u = std::move(u);
  e.du = std::move(dv);
  e.lambda = lambda;

  // Weighted relative residual of (1/beta h^2) K u - lambda W u, with K u
  // taken from the increments.
  double rr = 0.0, uu = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    const long double ku = (e.c[j - 1] * e.du[j - 1] - e.c[j] * e.du[j]) / bh2;
    const double r = static_cast<double>(ku - static_cast<long double>(lambda) * e.w[j] * e.u[j]);
    rr += r * r / e.w[j];
    uu += e.w[j] * e.u[j] * e.u[j];
  }
  e.residual = std::sqrt(rr) / (lambda * std::sqrt(uu));

  const auto evs = bisect_eigenvalues(e, 2);
  e.lambda2 = evs[1];
  if (!(e.lambda2 > e.lambda)) throw SolverError("spectral gap not resolved");
  return e;
}

std::vector<double> bisect_eigenvalues(const EigenPair& e, int k) {
  const std::size_t n = e.n();
  const std::size_t m = n - 1;
  const double bh2 = e.beta * e.h * e.h;
  std::vector<double> d(m), off(m > 0 ? m - 1 : 0);
  double upper = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + 1;
    d[i] = (e.c[j - 1] + e.c[j]) / (bh2 * e.w[j]);
    if (i + 1 < m) off[i] = -e.c[j] / (bh2 * std::sqrt(e.w[j] * e.w[j + 1]));
  }
  for (std::size_t i = 0; i < m; ++i) {
    double r = d[i];
    if (i > 0) r += std::abs(off[i - 1]);
    if (i + 1 < m) r += std::abs(off[i]);
    upper = std::max(upper, r);
  }
  auto count_below = [&](double s) {
    std::size_t cnt = 0;
    double q = d[0] - s;
    const double tiny = 1e-300;
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++cnt;
    for (std::size_t i = 1; i < m; ++i) {
      q = d[i] - s - off[i - 1] * off[i - 1] / q;
      if (q == 0.0) q = -tiny;
      if (q < 0.0) ++cnt;
    }
    return cnt;
  };
  std::vector<double> out;
  for (int idx = 1; idx <= k; ++idx) {
    double lo = 0.0, hi = upper;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (count_below(mid) >= static_cast<std::size_t>(idx))
        hi = mid;
      else
        lo = mid;
    }
    out.push_back(0.5 * (lo + hi));
  }
  return out;
}

std::vector<double> qsd_density(const EigenPair& e) {
  const std::size_t n = e.n();
  std::vector<double> rho(n + 1);
  double mass = 0.0;
  for (std::size_t j = 0; j <= n; ++j) rho[j] = e.u[j] * e.w[j];
  for (std::size_t j = 0; j < n; ++j) mass += 0.5 * (rho[j] + rho[j + 1]) * e.h;
  if (!(mass > 0.0)) throw DegenerateEigenpairError("QSD density has zero mass");
  for (auto& v : rho) v /= mass;
  return rho;
}

ExitStatistics exit_statistics(const EigenPair& e) {
  const std::size_t n = e.n();
  if (n < 2 || e.u.size() != n + 1) throw DegenerateEigenpairError("eigenpair has no grid");
  ExitStatistics s;
  s.lambda = e.lambda;
  s.flux_left = e.c[0] * e.u[1] / e.h;
  s.flux_right = e.c[n - 1] * e.u[n - 1] / e.h;
  double mass = 0.0;
  for (std::size_t j = 1; j < n; ++j) mass += e.w[j] * e.u[j];
  s.mass = mass * e.h;
  const double expected = e.beta * e.lambda * s.mass;
  const double total = s.flux_left + s.flux_right;
  s.defect = std::abs(total / expected - 1.0);
  const double gl = (4.0 * e.u[1] * e.w[1] - e.u[2] * e.w[2]) / (2.0 * e.h);
  const double gr = (4.0 * e.u[n - 1] * e.w[n - 1] - e.u[n - 2] * e.w[n - 2]) / (2.0 * e.h);
  s.stencil_defect = std::abs((gl + gr) / expected - 1.0);
  if (s.stencil_defect > kMaxStencilDefect)
    throw GridTooCoarseError("boundary flux identity off by more than 1e-3; refine the grid",
                             s.stencil_defect);
  s.p_left = s.flux_left / total;
  s.p_right = s.flux_right / total;
  return s;
}

double ThetaTable::min_theta() const {
  return std::min(side[0].theta_exact, side[1].theta_exact);
}

ThetaTable theta_table(const Basin& basin, const ExitStatistics& hi, double beta_hi,
                       const ExitStatistics& lo, double beta_lo) {
  ThetaTable t;
  t.beta_hi = beta_hi;
  t.beta_lo = beta_lo;
  for (Side s : {Side::left, Side::right}) {
    ThetaEntry& en = t.side[s == Side::left ? 0 : 1];
    en.theta_exact = hi.rate(s) / lo.rate(s);
    en.theta_arrhenius = std::exp(-(beta_hi - beta_lo) * basin.barrier(s));
  }
  return t;
}

ThetaTable theta_table(const Potential1D& pot, const Basin& basin, double beta_hi, double beta_lo,
                       std::size_t n) {
  if (!(beta_hi > 0.0) || beta_hi > beta_lo) throw ConfigError("theta table needs 0 < beta_hi <= beta_lo");
  const auto hi = exit_statistics(solve_principal_eigenpair(pot, basin, beta_hi, n));
  const auto lo = beta_lo == beta_hi ? hi : exit_statistics(solve_principal_eigenpair(pot, basin, beta_lo, n));
  return theta_table(basin, hi, beta_hi, lo, beta_lo);
}

double kramers_rate(const Basin& basin, Side side, double beta) {
  const double k0 = basin.Vpp0;
  const double ks = side == Side::left ? basin.Vpp_left : basin.Vpp_right;
  if (!(k0 > 0.0) || !(ks < 0.0)) throw TopologyError("Kramers rate needs a Morse minimum and saddle");
  return std::sqrt(k0 * -ks) / (2.0 * std::numbers::pi) * std::exp(-beta * basin.barrier(side));
}

GridFunction comparison_function_f(const Potential1D& pot, const Basin& basin, double beta, Segment seg,
                                   std::size_t n) {
  if (n == 0) n = default_grid_n(beta);
  const double a = basin.bounds.lo, b = basin.bounds.hi, x0 = basin.x0;
  const double h = (b - a) / static_cast<double>(n);
  const double snap = 1e-9 * h;
  GridFunction g;
  if (seg == Segment::left_of_min) {
    for (std::size_t j = 0; j <= n; ++j) {
      const double x = a + static_cast<double>(j) * h;
      if (x >= x0 - snap) break;
      g.x.push_back(x);
    }
    g.x.push_back(x0);
  } else {
    g.x.push_back(x0);
    for (std::size_t j = 0; j <= n; ++j) {
      const double x = j == n ? b : a + static_cast<double>(j) * h;
      if (x > x0 + snap) g.x.push_back(x);
    }
  }
  const std::size_t m = g.x.size();
  std::vector<double> v(m);
  double vmax = -INFINITY;
  for (std::size_t i = 0; i < m; ++i) {
    v[i] = pot.eval(g.x[i]);
    vmax = std::max(vmax, v[i]);
  }
  std::vector<double> q(m);
  for (std::size_t i = 0; i < m; ++i) q[i] = std::exp(beta * (v[i] - vmax));
  g.y.assign(m, 0.0);
  if (seg == Segment::left_of_min) {
    for (std::size_t i = 1; i < m; ++i) g.y[i] = g.y[i - 1] + 0.5 * (q[i] + q[i - 1]) * (g.x[i] - g.x[i - 1]);
    const double tot = g.y[m - 1];
    for (auto& y : g.y) y /= tot;
    g.y[m - 1] = 1.0;
  } else {
    for (std::size_t i = m - 1; i-- > 0;) g.y[i] = g.y[i + 1] + 0.5 * (q[i] + q[i + 1]) * (g.x[i + 1] - g.x[i]);
    const double tot = g.y[0];
    for (auto& y : g.y) y /= tot;
    g.y[0] = 1.0;
  }
  return g;
}

Proximity f_u_proximity(const Potential1D& pot, const Basin& basin, const EigenPair& eig, Segment seg) {
  const auto j0 = static_cast<std::size_t>(std::llround((basin.x0 - eig.a) / eig.h));
  if (std::abs(eig.x[j0] - basin.x0) > 1e-9 * eig.h)
    throw SolverError("f/u comparison needs the minimum on a grid node");
  const auto f = comparison_function_f(pot, basin, eig.beta, seg, eig.n());
  const std::size_t first = seg == Segment::left_of_min ? 0 : j0;
  Proximity p;
  for (std::size_t i = 0; i < f.x.size(); ++i) {
    p.max_f_u = std::max(p.max_f_u, std::abs(f.y[i] - eig.u[first + i]));
    if (i + 1 < f.x.size()) {
      const double df = (f.y[i + 1] - f.y[i]) / eig.h;
      const double du = (eig.u[first + i + 1] - eig.u[first + i]) / eig.h;
      p.max_df_du = std::max(p.max_df_du, std::abs(df - du));
    }
  }
  return p;
}

NormalizedBasin normalize_basin(const Potential1D& pot, const Basin& basin) {
  if (pot.cos_amplitude() != 0.0) throw Error("basin normalization supports polynomial potentials only");
  const double a = basin.bounds.lo;
  const double s = basin.x0 - a;
  const auto c = pot.coeffs();
  std::vector<double> out(c.size(), 0.0);
  for (std::size_t k = 0; k < c.size(); ++k) {
    // c_k (a + s y)^k = c_k sum_i binom(k, i) a^(k-i) s^i y^i
    double binom = 1.0;
    for (std::size_t i = 0; i <= k; ++i) {
      out[i] += c[k] * binom * std::pow(a, static_cast<double>(k - i)) * std::pow(s, static_cast<double>(i));
      binom = binom * static_cast<double>(k - i) / static_cast<double>(i + 1);
    }
  }
  if (!out.empty()) out[0] = 0.0;
  const Interval dom{(pot.domain().lo - a) / s, (pot.domain().hi - a) / s};
  Potential1D np(out, 0.0, 0.0, dom, pot.name() + "_normalized");
  const auto top = analyze(np);
  return {np, top.basin(assign_basin(top, 1.0)), s};
}

}  // namespace tadlab
