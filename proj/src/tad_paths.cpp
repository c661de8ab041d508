#include <cmath>
#include <sstream>

#include "tadlab/error.hpp"
#include "tadlab/tad.hpp"

namespace tadlab {
namespace {

std::int64_t clock_steps(double t, double dt) {
  if (!(t > 0.0)) return 0;
  return static_cast<std::int64_t>(std::floor(t / dt + 1e-9));
}

Side to_side(SegmentEnd e) { return e == SegmentEnd::left ? Side::left : Side::right; }
SegmentEnd to_end(Side s) { return s == Side::left ? SegmentEnd::left : SegmentEnd::right; }

}  // namespace

double MetastablePath::total_time() const {
  double t = 0.0;
  for (const auto& s : segments) t += s.duration;
  return t;
}

void MetastablePath::check(const BasinTopology& top) const {
  if (segments.empty()) throw TopologyError("path has no segments");
  const bool zero_path = segments.size() == 1 && segments[0].duration == 0.0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const PathSegment& s = segments[i];
    std::ostringstream where;
    where << "path segment " << i << ": ";
    if (!(s.duration > 0.0) && !zero_path) throw TopologyError(where.str() + "non-positive duration");
    const bool last = i + 1 == segments.size();
    if (!last) {
      if (s.end == SegmentEnd::none || s.terminal) throw TopologyError(where.str() + "path continues after its end");
      const auto nb = top.neighbor(s.basin, to_side(s.end));
      if (!nb || *nb != segments[i + 1].basin)
        throw TopologyError(where.str() + "next basin is not the neighbour through the exit side");
    } else if (s.terminal) {
      if (s.end == SegmentEnd::none || top.neighbor(s.basin, to_side(s.end)))
        throw TopologyError(where.str() + "terminal exit not through an outer wall");
    }
  }
}

std::string exit_side_label(const PathSegment& s) {
  if (s.end == SegmentEnd::none) return "none";
  std::string side = s.end == SegmentEnd::left ? "left" : "right";
  return s.terminal ? side + "_terminal" : side;
}

Sim<MetastablePath> direct_path_sim(const BasinTopology& top, double beta_lo, double x_init, double t_max,
                                    double dt, std::int64_t max_steps) {
  MetastablePath p;
  int label = assign_basin(top, x_init);
  double x = x_init;
  const std::int64_t total = clock_steps(t_max, dt);
  std::int64_t used = 0;
  PathSegment cur{label, 0.0, SegmentEnd::none, false};
  SegmentRequest req;
  req.beta = beta_lo;
  req.dt = dt;
  while (used < total) {
    const Interval b = top.basin(label).bounds;
    req.x = x;
    req.lo = b.lo;
    req.hi = b.hi;
    req.max_steps = std::min(total - used, max_steps);
    const SegmentOutcome o = co_await segment(req);
    used += o.steps;
    p.steps += o.steps;
    cur.duration += static_cast<double>(o.steps) * dt;
    if (!o.exited) {
      if (used < total) p.truncated = true;
      break;
    }
    const Side side = o.x <= b.lo ? Side::left : Side::right;
    cur.end = to_end(side);
    const auto nb = top.neighbor(label, side);
    if (!nb) {
      cur.terminal = true;
      break;
    }
    p.segments.push_back(cur);
    label = *nb;
    x = o.x;
    cur = PathSegment{label, 0.0, SegmentEnd::none, false};
  }
  p.segments.push_back(cur);
  co_return p;
}

MetastablePath run_direct(const Potential1D& pot, const BasinTopology& top, double beta_lo, double x_init,
                          double t_max, double dt, Rng& rng, std::int64_t max_steps) {
  if (!(beta_lo > 0.0) || !(dt > 0.0)) throw ConfigError("direct run needs beta > 0 and dt > 0");
  return run_sync(ForceField::from(pot), direct_path_sim(top, beta_lo, x_init, t_max, dt, max_steps), rng);
}

RateTable exact_rates(const TadModel& m, bool low_temperature) {
  RateTable r;
  for (const Basin& b : m.topology().basins()) {
    const auto& st = low_temperature ? m.basin(b.label).stats_lo : m.basin(b.label).stats_hi;
    r.push_back({st.rate(Side::left), st.rate(Side::right)});
  }
  return r;
}

RateTable kramers_rates(const BasinTopology& top, double beta) {
  RateTable r;
  for (const Basin& b : top.basins()) r.push_back({kramers_rate(b, Side::left, beta), kramers_rate(b, Side::right, beta)});
  return r;
}

MetastablePath run_kmc(const BasinTopology& top, const RateTable& rates, double t_max, Rng& rng, int start_basin) {
  if (rates.size() != top.size()) throw ConfigError("rate table does not match the topology");
  for (const auto& rr : rates)
    if (!(rr[0] >= 0.0) || !(rr[1] >= 0.0) || !(rr[0] + rr[1] > 0.0))
      throw ConfigError("KMC rates must be non-negative with a positive total per basin");
  MetastablePath p;
  int label = start_basin;
  top.basin(label);
  double t = 0.0;
  for (;;) {
    const auto& rr = rates[static_cast<std::size_t>(label)];
    const double tl = rr[0] > 0.0 ? rng.exponential(rr[0]) : kInf;
    const double tr = rr[1] > 0.0 ? rng.exponential(rr[1]) : kInf;
    const Side side = tl <= tr ? Side::left : Side::right;
    const double dwell = std::min(tl, tr);
    if (t + dwell > t_max) {
      p.segments.push_back({label, t_max - t, SegmentEnd::none, false});
      break;
    }
    t += dwell;
    PathSegment s{label, dwell, to_end(side), false};
    const auto nb = top.neighbor(label, side);
    if (!nb) {
      s.terminal = true;
      p.segments.push_back(s);
      break;
    }
    p.segments.push_back(s);
    label = *nb;
  }
  return p;
}

double TadRun::boost() const {
  const double used = static_cast<double>(steps_lo + steps_hi);
  if (!(used > 0.0)) return 0.0;
  return path.total_time() / dt / used;
}

Sim<TadRun> tad_path_sim(Variant v, const TadModel& m, double x_init, Rng& rng) {
  const TadConfig& cfg = m.cfg();
  const BasinTopology& top = m.topology();
  const double dt = cfg.dt;
  TadRun run;
  run.dt = dt;
  int label = assign_basin(top, x_init);
  double x = x_init;
  double t = 0.0;
  PathSegment cur{label, 0.0, SegmentEnd::none, false};
  SegmentRequest req;
  req.beta = cfg.beta_lo;
  req.dt = dt;

  // Moves to the neighbour through `side`; false at an outer wall.
  auto cross = [&](Side side) {
    cur.end = to_end(side);
    const auto nb = top.neighbor(label, side);
    if (!nb) {
      cur.terminal = true;
      return false;
    }
    run.path.segments.push_back(cur);
    label = *nb;
    cur = PathSegment{label, 0.0, SegmentEnd::none, false};
    return true;
  };

  while (t < cfg.t_max) {
    const BasinModel& bm = m.basin(label);
    const Interval b = bm.basin.bounds;
    if (v != Variant::original) {
      // Decorrelation: exact low-temperature dynamics for t_corr.
      const double span = std::min(bm.t_corr, cfg.t_max - t);
      const std::int64_t n = clock_steps(span, dt);
      if (n > 0) {
        req.x = x;
        req.lo = b.lo;
        req.hi = b.hi;
        req.max_steps = n;
        const SegmentOutcome o = co_await segment(req);
        run.steps_lo += o.steps;
        const double d = static_cast<double>(o.steps) * dt;
        t += d;
        cur.duration += d;
        x = o.x;
        if (o.exited) {
          if (!cross(o.x <= b.lo ? Side::left : Side::right)) break;
          continue;
        }
      }
      if (span < bm.t_corr || !(t < cfg.t_max)) break;
    }

    ExitStepResult r;
    bool timed_out = false;
    try {
      r = co_await exit_step_sim(v, m, label, x, rng);
    } catch (const TimeoutError&) {
      timed_out = true;
    }
    if (timed_out) {
      run.path.truncated = true;
      break;
    }
    run.steps_hi += r.steps();
    if (t + r.t_min_lo > cfg.t_max) {
      cur.duration += cfg.t_max - t;
      t = cfg.t_max;
      run.exit_steps.push_back(std::move(r));
      break;
    }
    t += r.t_min_lo;
    cur.duration += r.t_min_lo;
    const Side side = r.i_min_lo;
    const double saddle = bm.basin.saddle(side);
    const double exit_pos = r.exit_position;
    run.exit_steps.push_back(std::move(r));
    if (!cross(side)) break;
    const Basin& nb = top.basin(label);
    switch (v) {
      case Variant::idealized:
        // In 1D the exit law restricted to one side is a point mass at the saddle.
        x = std::nextafter(saddle, nb.x0);
        break;
      case Variant::modified:
        x = nb.bounds.contains_open(exit_pos) ? exit_pos : std::nextafter(saddle, nb.x0);
        break;
      case Variant::original:
        x = nb.x0;
        break;
    }
  }
  run.path.segments.push_back(cur);
  run.path.steps = run.steps_lo + run.steps_hi;
  co_return run;
}

TadRun run_tad(Variant v, const TadModel& m, double x_init, Rng& rng) {
  return run_sync(m.field(), tad_path_sim(v, m, x_init, rng), rng);
}

}  // namespace tadlab
