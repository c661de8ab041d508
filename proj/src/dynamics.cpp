#include "tadlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tadlab/error.hpp"

namespace tadlab {

void SdeConfig::validate() const {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
}

double SdeConfig::noise() const { return std::sqrt(2.0 * dt / beta); }

double default_dt(double beta) {
  if (beta <= 8.0) return 1e-3;
  return 1e-3 * std::exp2(-std::ceil((beta - 8.0) / 4.0));
}

std::int64_t steps_for(double t, double dt) {
  if (!(t > 0.0)) return 0;
  if (!std::isfinite(t)) return INT64_MAX;
  return static_cast<std::int64_t>(std::llround(t / dt));
}

double em_step_with_noise(double x, const Potential1D& pot, const SdeConfig& cfg, double xi) {
  cfg.validate();
  const double xn = (x - pot.grad(x) * cfg.dt) + cfg.noise() * xi;
  const Interval& d = pot.domain();
  if (!(xn >= d.lo && xn <= d.hi)) throw DomainEscapeError(xn, d.lo, d.hi);
  return xn;
}

double em_step(double x, const Potential1D& pot, const SdeConfig& cfg, Rng& rng) {
  return em_step_with_noise(x, pot, cfg, rng.normal());
}

Sim<ExitEvent> exit_sim(double x0, Interval bounds, double beta, double dt, std::int64_t max_steps) {
  SegmentRequest req;
  req.x = x0;
  req.lo = bounds.lo;
  req.hi = bounds.hi;
  req.beta = beta;
  req.dt = dt;
  req.max_steps = max_steps;
  const SegmentOutcome o = co_await segment(req);
  if (!o.exited) throw TimeoutError("no basin exit within the step budget", static_cast<double>(o.steps) * dt);
  ExitEvent ev;
  ev.steps = o.steps;
  ev.time = static_cast<double>(o.steps) * dt;
  ev.position = o.x;
  ev.side = o.x <= bounds.lo ? Side::left : Side::right;
  co_return ev;
}

Sim<RelaxResult> relax_sim(double x_start, Interval bounds, double beta, double dt, double t_relax,
                           std::int64_t max_restarts) {
  RelaxResult r;
  r.x = x_start;
  const std::int64_t n = steps_for(t_relax, dt);
  if (n == 0) co_return r;
  SegmentRequest req;
  req.lo = bounds.lo;
  req.hi = bounds.hi;
  req.beta = beta;
  req.dt = dt;
  req.max_steps = n;
  for (;;) {
    req.x = x_start;
    const SegmentOutcome o = co_await segment(req);
    r.steps += o.steps;
    if (!o.exited) {
      r.x = o.x;
      co_return r;
    }
    if (++r.restarts >= max_restarts) {
      std::ostringstream os;
      os << "QSD rejection sampling failed " << max_restarts << " times (t_relax=" << t_relax
         << " too long for beta=" << beta << ")";
      throw InfeasibleError(os.str());
    }
  }
}

ExitEvent evolve_until_exit(double x0, const Basin& basin, const Potential1D& pot, const SdeConfig& cfg,
                            Rng& rng, std::int64_t max_steps) {
  cfg.validate();
  if (!basin.bounds.contains_open(x0)) throw DomainEscapeError(x0, basin.bounds.lo, basin.bounds.hi);
  return run_sync(ForceField::from(pot), exit_sim(x0, basin.bounds, cfg.beta, cfg.dt, max_steps), rng);
}

double evolve_with_reflection(double x0, const Interval& bounds, const Potential1D& pot, const SdeConfig& cfg,
                              Rng& rng, double t_end) {
  cfg.validate();
  if (!(x0 >= bounds.lo && x0 <= bounds.hi)) throw DomainEscapeError(x0, bounds.lo, bounds.hi);
  SegmentRequest req;
  req.x = x0;
  req.lo = bounds.lo;
  req.hi = bounds.hi;
  req.beta = cfg.beta;
  req.dt = cfg.dt;
  req.max_steps = steps_for(t_end, cfg.dt);
  req.reflect = true;
  if (req.max_steps == 0) return x0;
  return run_segment(ForceField::from(pot), req, rng).x;
}

double sample_qsd_by_rejection(const Basin& basin, const Potential1D& pot, const SdeConfig& cfg, Rng& rng,
                               double t_relax, std::int64_t max_restarts) {
  cfg.validate();
  if (t_relax < 0.0) throw ConfigError("t_relax must be non-negative");
  return run_sync(ForceField::from(pot),
                  relax_sim(basin.x0, basin.bounds, cfg.beta, cfg.dt, t_relax, max_restarts), rng)
      .x;
}

QsdSampler::QsdSampler(const EigenPair& eig) : eig_(&eig) {
  const std::size_t n = eig.n();
  if (n < 2 || eig.u.size() != n + 1) throw DegenerateEigenpairError("eigenpair has no grid");
  cum_.assign(n + 1, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    cum_[j + 1] = cum_[j] + 0.5 * eig.h * (eig.u[j] * eig.w[j] + eig.u[j + 1] * eig.w[j + 1]);
  if (!(cum_[n] > 0.0) || !std::isfinite(cum_[n]))
    throw DegenerateEigenpairError("QSD grid density has no mass");
}

double QsdSampler::operator()(Rng& rng) const {
  const EigenPair& eig = *eig_;
  const std::size_t n = eig.n();
  double v;
  do v = rng.uniform();
  while (v == 0.0);
  const double target = v * cum_[n];
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
  std::size_t j = static_cast<std::size_t>(std::distance(cum_.begin(), it));
  j = std::clamp<std::size_t>(j, 1, n) - 1;
  // Solve r0 s + (r1 - r0) s^2 / 2h = t for the offset inside the cell.
  const double t = target - cum_[j];
  const double r0 = eig.u[j] * eig.w[j];
  const double r1 = eig.u[j + 1] * eig.w[j + 1];
  const double disc = std::max(0.0, r0 * r0 + 2.0 * (r1 - r0) * t / eig.h);
  const double denom = r0 + std::sqrt(disc);
  double s = denom > 0.0 ? 2.0 * t / denom : 0.5 * eig.h;
  s = std::clamp(s, 0.0, eig.h);
  double x = eig.x[j] + s;
  if (x <= eig.a) x = std::nextafter(eig.a, eig.b);
  if (x >= eig.b) x = std::nextafter(eig.b, eig.a);
  return x;
}

double sample_qsd_exact(const EigenPair& eig, Rng& rng) { return QsdSampler(eig)(rng); }

double default_t_relax(const EigenPair& eig) { return 10.0 / (eig.lambda2 - eig.lambda); }

}  // namespace tadlab
