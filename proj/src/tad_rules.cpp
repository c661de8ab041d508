#include <algorithm>
#include <cmath>

#include "tadlab/error.hpp"
#include "tadlab/tad.hpp"
#include "tad_internal.hpp"

namespace tadlab {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::original: return "original";
    case Variant::modified: return "modified";
    case Variant::idealized: return "idealized";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "original") return Variant::original;
  if (s == "modified") return Variant::modified;
  if (s == "idealized") return Variant::idealized;
  throw ConfigError("unknown TAD variant '" + s + "' (original, modified, idealized)");
}

void TadConfig::validate() const {
  if (!(beta_hi > 0.0) || !(beta_lo > beta_hi))
    throw ConfigError("need 0 < beta_hi < beta_lo");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (!(nu_min > 0.0)) throw ConfigError("nu_min must be positive");
  if (!(e_min >= 0.0)) throw ConfigError("e_min must be non-negative");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(t_max >= 0.0)) throw ConfigError("t_max must be non-negative");
  if (max_steps <= 0) throw ConfigError("max_steps must be positive");
}

double extrapolate_exit_time(double t_hi, double barrier, double beta_hi, double beta_lo) {
  return t_hi * std::exp(-(beta_hi - beta_lo) * barrier);
}

double stop_time_original(double t_min_lo, double nu_min, double delta, double beta_hi, double beta_lo) {
  if (std::isinf(t_min_lo)) return kInf;
  const double l = std::log(1.0 / delta);
  return (l / nu_min) * std::pow(nu_min * t_min_lo / l, beta_hi / beta_lo);
}

double stop_time_modified(double t_min_lo, double e_min, double beta_hi, double beta_lo) {
  if (std::isinf(t_min_lo)) return kInf;
  return t_min_lo * std::exp((beta_hi - beta_lo) * e_min);
}

TadModel::TadModel(Potential1D pot, TadConfig cfg, std::size_t grid_n)
    : pot_(std::move(pot)), cfg_(cfg), top_(analyze(pot_)), field_(ForceField::from(pot_)) {
  cfg_.validate();
  for (const Basin& b : top_.basins()) {
    if (cfg_.e_min > b.min_barrier())
      throw ConfigError("e_min = " + std::to_string(cfg_.e_min) + " exceeds the smallest barrier " +
                        std::to_string(b.min_barrier()) + " of basin " + std::to_string(b.label) +
                        "; the modified stop rule would lose its guarantee");
  }
  for (const Basin& b : top_.basins()) {
    BasinModel bm;
    bm.basin = b;
    auto hi = std::make_shared<EigenPair>(solve_principal_eigenpair(pot_, b, cfg_.beta_hi, grid_n));
    auto lo = std::make_shared<EigenPair>(solve_principal_eigenpair(pot_, b, cfg_.beta_lo, grid_n));
    bm.stats_hi = exit_statistics(*hi);
    bm.stats_lo = exit_statistics(*lo);
    bm.theta = theta_table(b, bm.stats_hi, cfg_.beta_hi, bm.stats_lo, cfg_.beta_lo);
    bm.t_corr = cfg_.t_corr >= 0.0 ? cfg_.t_corr : default_t_relax(*lo);
    bm.t_relax_hi = cfg_.t_relax >= 0.0 ? cfg_.t_relax : default_t_relax(*hi);
    bm.sampler_hi = std::make_shared<QsdSampler>(*hi);
    bm.eig_hi = std::move(hi);
    bm.eig_lo = std::move(lo);
    basins_.push_back(std::move(bm));
  }
}

namespace detail {

std::int64_t stop_steps(double t_stop, double dt) {
  if (!(t_stop < kInf)) return INT64_MAX;
  const double s = std::floor(t_stop / dt);
  if (s >= 9.0e18) return INT64_MAX;
  return static_cast<std::int64_t>(std::max(0.0, s));
}

double extrapolate(Variant v, const TadModel& m, const BasinModel& bm, Side side, double t_hi) {
  if (v == Variant::idealized) return t_hi * bm.theta[side].theta_exact;
  return extrapolate_exit_time(t_hi, bm.basin.barrier(side), m.cfg().beta_hi, m.cfg().beta_lo);
}

double stop_rule(Variant v, const TadModel& m, const BasinModel& bm, double t_min_lo) {
  const TadConfig& c = m.cfg();
  switch (v) {
    case Variant::original: return stop_time_original(t_min_lo, c.nu_min, c.delta, c.beta_hi, c.beta_lo);
    case Variant::modified: return stop_time_modified(t_min_lo, c.e_min, c.beta_hi, c.beta_lo);
    case Variant::idealized:
      if (std::isinf(t_min_lo)) return kInf;
      return t_min_lo / bm.theta.min_theta();
  }
  return kInf;
}

}  // namespace detail

ReplayResult replay(Variant v, const TadModel& m, int label, const std::vector<ExitAttempt>& events) {
  const BasinModel& bm = m.basin(label);
  ReplayResult r;
  std::int64_t s_stop = INT64_MAX;
  std::array<bool, 2> seen{false, false};
  for (const ExitAttempt& ev : events) {
    if (ev.steps_sim > s_stop) {
      r.complete = true;
      return r;
    }
    const int k = ev.side == Side::left ? 0 : 1;
    if (!seen[k]) {
      seen[k] = true;
      const double t_lo = detail::extrapolate(v, m, bm, ev.side, ev.t_sim);
      if (t_lo < r.t_min_lo) {
        r.t_min_lo = t_lo;
        r.i_min_lo = ev.side;
      }
    }
    r.t_stop = detail::stop_rule(v, m, bm, r.t_min_lo);
    s_stop = detail::stop_steps(r.t_stop, m.cfg().dt);
  }
  return r;
}

int count_guarantee_violations(const TadModel& m, int label, const std::vector<ExitAttempt>& events) {
  const BasinModel& bm = m.basin(label);
  const auto r = replay(Variant::modified, m, label, events);
  if (!r.complete) return 0;
  const std::int64_t s_stop = detail::stop_steps(r.t_stop, m.cfg().dt);
  int bad = 0;
  for (const ExitAttempt& ev : events) {
    if (ev.steps_sim <= s_stop) continue;
    const double t_lo = detail::extrapolate(Variant::modified, m, bm, ev.side, ev.t_sim);
    if (t_lo < r.t_min_lo) ++bad;
  }
  return bad;
}

}  // namespace tadlab
