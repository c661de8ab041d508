#pragma once

#include <cstdint>
#include <vector>

#include "tadlab/potential.hpp"
#include "tadlab/qsd.hpp"
#include "tadlab/rng.hpp"
#include "tadlab/sim.hpp"

namespace tadlab {

struct SdeConfig {
  double beta = 1.0;
  double dt = 1e-3;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  void validate() const;
  double noise() const;  // sqrt(2 dt / beta)
  Rng rng() const { return Rng(seed, stream); }
};

/// dt = 1e-3 up to beta = 8, halved for every further +4 in beta.
double default_dt(double beta);

/// Number of steps covering time t (rounded to nearest).
std::int64_t steps_for(double t, double dt);

struct ExitEvent {
  double time = 0.0;
  Side side = Side::left;
  double position = 0.0;
  std::int64_t steps = 0;
};

/// x - V'(x) dt + sqrt(2 dt / beta) xi.  Throws DomainEscapeError when the
/// result leaves pot.domain().
double em_step(double x, const Potential1D& pot, const SdeConfig& cfg, Rng& rng);
double em_step_with_noise(double x, const Potential1D& pot, const SdeConfig& cfg, double xi);

/// First step whose iterate lies outside the open basin interval.  Throws
/// TimeoutError after max_steps.
ExitEvent evolve_until_exit(double x0, const Basin& basin, const Potential1D& pot, const SdeConfig& cfg,
                            Rng& rng, std::int64_t max_steps);

/// Position at t_end with mirror reflection at both ends of `bounds`.
double evolve_with_reflection(double x0, const Interval& bounds, const Potential1D& pot,
                              const SdeConfig& cfg, Rng& rng, double t_end);

/// First trajectory from the basin minimum that survives t_relax; exits
/// restart from the minimum.  Throws InfeasibleError after max_restarts.
double sample_qsd_by_rejection(const Basin& basin, const Potential1D& pot, const SdeConfig& cfg, Rng& rng,
                               double t_relax, std::int64_t max_restarts = 1'000'000);

/// Inverse CDF of the piecewise-linear grid density u w.
double sample_qsd_exact(const EigenPair& eig, Rng& rng);

/// sample_qsd_exact with the cumulative masses precomputed.  Keeps a
/// pointer to eig.
class QsdSampler {
 public:
  explicit QsdSampler(const EigenPair& eig);
  double operator()(Rng& rng) const;

 private:
  const EigenPair* eig_;
  std::vector<double> cum_;
};

/// 10 / (lambda2 - lambda).
double default_t_relax(const EigenPair& eig);

// Coroutine forms, for use inside ensembles.  Step counts are returned so
// callers can account for force evaluations.

Sim<ExitEvent> exit_sim(double x0, Interval bounds, double beta, double dt, std::int64_t max_steps);

struct RelaxResult {
  double x = 0.0;
  std::int64_t steps = 0;
  std::int64_t restarts = 0;
};

Sim<RelaxResult> relax_sim(double x_start, Interval bounds, double beta, double dt, double t_relax,
                           std::int64_t max_restarts);

}  // namespace tadlab
