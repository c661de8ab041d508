#include <algorithm>
#include <cmath>

#include "tadlab/error.hpp"
#include "tadlab/tad.hpp"
#include "tad_internal.hpp"

namespace tadlab {

Sim<ExitStepResult> exit_step_sim(Variant v, const TadModel& m, int label, double x_start, Rng& rng,
                                  ExitStepOptions opt) {
  const TadConfig& cfg = m.cfg();
  const BasinModel& bm = m.basin(label);
  const Interval bounds = bm.basin.bounds;
  const double dt = cfg.dt;
  if (v == Variant::original && !bounds.contains_open(x_start))
    throw DomainEscapeError(x_start, bounds.lo, bounds.hi);

  ExitStepResult r;
  std::int64_t s_sim = 0;
  std::int64_t s_stop = INT64_MAX;
  const std::int64_t s_horizon = steps_for(opt.horizon, dt);
  std::array<bool, 2> seen{false, false};
  double x = x_start;

  SegmentRequest req;
  req.lo = bounds.lo;
  req.hi = bounds.hi;
  req.beta = cfg.beta_hi;
  req.dt = dt;

  for (;;) {
    std::int64_t budget = cfg.max_steps;
    if (opt.stop_enabled) {
      if (s_sim >= s_stop) break;
      if (s_stop != INT64_MAX) budget = std::min(budget, s_stop - s_sim);
    } else if (seen[0] && seen[1] && s_sim >= s_horizon) {
      break;
    }

    if (v == Variant::idealized) {
      x = (*bm.sampler_hi)(rng);
    } else if (v == Variant::modified) {
      const RelaxResult rr =
          co_await relax_sim(bm.basin.x0, bounds, cfg.beta_hi, dt, bm.t_relax_hi, 1'000'000);
      r.steps_dephase += rr.steps;
      x = rr.x;
    }

    req.x = x;
    req.max_steps = budget;
    const SegmentOutcome o = co_await segment(req);
    r.steps_search += o.steps;
    s_sim += o.steps;
    if (!o.exited) {
      if (opt.stop_enabled && s_sim >= s_stop) break;
      throw TimeoutError("exit search exceeded max_steps", static_cast<double>(s_sim) * dt);
    }

    ExitAttempt ev;
    ev.attempt_index = r.n_attempts++;
    ev.side = o.x <= bounds.lo ? Side::left : Side::right;
    ev.steps_sim = s_sim;
    ev.t_sim = static_cast<double>(s_sim) * dt;
    ev.position = o.x;
    const int k = ev.side == Side::left ? 0 : 1;
    if (!seen[k]) {
      seen[k] = true;
      ev.t_hi = ev.t_sim;
      ev.t_lo = detail::extrapolate(v, m, bm, ev.side, ev.t_sim);
      r.t_hi[k] = ev.t_hi;
      r.t_lo[k] = ev.t_lo;
      if (ev.t_lo < r.t_min_lo) {
        r.t_min_lo = ev.t_lo;
        r.i_min_lo = ev.side;
        r.exit_position = o.x;
      }
    }
    r.t_stop = detail::stop_rule(v, m, bm, r.t_min_lo);
    s_stop = detail::stop_steps(r.t_stop, dt);
    ev.t_stop_after = r.t_stop;
    r.events.push_back(ev);

    if (v == Variant::original) {
      // Mirror back into the basin and keep the same trajectory going.
      const double s = ev.side == Side::left ? bounds.lo : bounds.hi;
      x = 2.0 * s - o.x;
      if (!bounds.contains_open(x)) x = s + (ev.side == Side::left ? 1e-12 : -1e-12);
    }
  }
  r.t_sim_final = static_cast<double>(s_sim) * dt;
  co_return r;
}

ExitStepResult exit_step_idealized(const TadModel& m, int label, Rng& rng, ExitStepOptions opt) {
  return run_sync(m.field(), exit_step_sim(Variant::idealized, m, label, 0.0, rng, opt), rng);
}

ExitStepResult exit_step_modified(const TadModel& m, int label, Rng& rng, ExitStepOptions opt) {
  return run_sync(m.field(), exit_step_sim(Variant::modified, m, label, 0.0, rng, opt), rng);
}

ExitStepResult exit_step_original(const TadModel& m, int label, double x_start, Rng& rng,
                                  ExitStepOptions opt) {
  return run_sync(m.field(), exit_step_sim(Variant::original, m, label, x_start, rng, opt), rng);
}

}  // namespace tadlab
