#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tadlab/dynamics.hpp"
#include "tadlab/potential.hpp"
#include "tadlab/qsd.hpp"
#include "tadlab/sim.hpp"

namespace tadlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Variant { original, modified, idealized };

const char* to_string(Variant v);
Variant parse_variant(const std::string& s);

struct TadConfig {
  double beta_hi = 2.0;
  double beta_lo = 6.0;
  double t_corr = -1.0;   // < 0: 10 / gap at beta_lo, per basin
  double nu_min = 1.0;    // original stop rule
  double delta = 0.01;    // original stop rule
  double e_min = 0.0;     // modified stop rule; <= every barrier
  double t_max = 0.0;     // low-temperature clock budget for paths
  double dt = 1e-3;       // shared by both temperatures
  double t_relax = -1.0;  // < 0: 10 / gap at beta_hi
  std::int64_t max_steps = 10'000'000'000;  // per walker segment
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  void validate() const;
};

// --- closed-form rules ------------------------------------------------------

/// t_hi exp(-(beta_hi - beta_lo) barrier).
double extrapolate_exit_time(double t_hi, double barrier, double beta_hi, double beta_lo);
/// (log(1/delta)/nu_min) (nu_min t_min_lo / log(1/delta))^(beta_hi/beta_lo).
double stop_time_original(double t_min_lo, double nu_min, double delta, double beta_hi, double beta_lo);
/// t_min_lo exp((beta_hi - beta_lo) e_min).
double stop_time_modified(double t_min_lo, double e_min, double beta_hi, double beta_lo);

// --- per-basin model --------------------------------------------------------

struct BasinModel {
  Basin basin;
  std::shared_ptr<const EigenPair> eig_hi;
  std::shared_ptr<const EigenPair> eig_lo;
  std::shared_ptr<const QsdSampler> sampler_hi;
  ExitStatistics stats_hi;
  ExitStatistics stats_lo;
  ThetaTable theta;
  double t_corr = 0.0;
  double t_relax_hi = 0.0;
};

/// Topology plus every eigen-derived quantity TAD needs, per basin.
class TadModel {
 public:
  TadModel(Potential1D pot, TadConfig cfg, std::size_t grid_n = 0);

  const Potential1D& pot() const { return pot_; }
  const BasinTopology& topology() const { return top_; }
  const TadConfig& cfg() const { return cfg_; }
  const BasinModel& basin(int label) const { return basins_.at(static_cast<std::size_t>(label)); }
  const ForceField& field() const { return field_; }

 private:
  Potential1D pot_;
  TadConfig cfg_;
  BasinTopology top_;
  std::vector<BasinModel> basins_;
  ForceField field_;
};

// --- exit steps -------------------------------------------------------------

struct ExitAttempt {
  int attempt_index = 0;
  Side side = Side::left;
  std::int64_t steps_sim = 0;  // high-temperature clock in steps
  double t_sim = 0.0;
  double t_hi = std::numeric_limits<double>::quiet_NaN();  // first exit on this side only
  double t_lo = std::numeric_limits<double>::quiet_NaN();
  double t_stop_after = kInf;
  double position = 0.0;
};

struct ExitStepResult {
  double t_min_lo = kInf;
  Side i_min_lo = Side::left;
  int n_attempts = 0;
  double t_sim_final = 0.0;
  double t_stop = kInf;
  std::array<std::optional<double>, 2> t_hi;  // indexed by side
  std::array<std::optional<double>, 2> t_lo;
  double exit_position = 0.0;    // high-temperature exit point of the accepted event
  std::int64_t steps_search = 0;  // force evaluations in exit searches
  std::int64_t steps_dephase = 0; // force evaluations spent preparing QSD samples
  std::vector<ExitAttempt> events;

  std::int64_t steps() const { return steps_search + steps_dephase; }
};

struct ExitStepOptions {
  bool stop_enabled = true;
  /// With the stop disabled: keep searching until both sides were seen and
  /// the clock passed this horizon.
  double horizon = 0.0;
};

/// One exit step as a coroutine; `m` and `rng` must outlive it.  x_start is
/// the trajectory start for the original variant and ignored otherwise.
Sim<ExitStepResult> exit_step_sim(Variant v, const TadModel& m, int label, double x_start, Rng& rng,
                                  ExitStepOptions opt = {});

ExitStepResult exit_step_idealized(const TadModel& m, int label, Rng& rng, ExitStepOptions opt = {});
ExitStepResult exit_step_modified(const TadModel& m, int label, Rng& rng, ExitStepOptions opt = {});
ExitStepResult exit_step_original(const TadModel& m, int label, double x_start, Rng& rng,
                                  ExitStepOptions opt = {});

/// Applies the variant's stop rule to a recorded (stop-disabled) event log.
struct ReplayResult {
  bool complete = false;  // the log reaches past the stop time
  double t_min_lo = kInf;
  Side i_min_lo = Side::left;
  double t_stop = kInf;
};
ReplayResult replay(Variant v, const TadModel& m, int label, const std::vector<ExitAttempt>& events);

/// Events in a stop-disabled log that occur after the stop time in force
/// and still extrapolate below the accepted t_min_lo (modified rule).
int count_guarantee_violations(const TadModel& m, int label, const std::vector<ExitAttempt>& events);

// --- paths ------------------------------------------------------------------

enum class SegmentEnd { left, right, none };

struct PathSegment {
  int basin = 0;
  double duration = 0.0;
  SegmentEnd end = SegmentEnd::none;
  bool terminal = false;  // left through an outer wall
};

struct MetastablePath {
  std::vector<PathSegment> segments;
  bool truncated = false;  // a walker timed out; the path is partial
  std::int64_t steps = 0;  // force evaluations used to produce it
  double total_time() const;
  /// Throws TopologyError if durations or adjacency are inconsistent.
  void check(const BasinTopology& top) const;
};

std::string exit_side_label(const PathSegment& s);

/// Brute-force Euler–Maruyama at beta_lo with per-step labeling.
MetastablePath run_direct(const Potential1D& pot, const BasinTopology& top, double beta_lo, double x_init,
                          double t_max, double dt, Rng& rng, std::int64_t max_steps = 10'000'000'000);
Sim<MetastablePath> direct_path_sim(const BasinTopology& top, double beta_lo, double x_init, double t_max,
                                    double dt, std::int64_t max_steps);

/// Per-basin (left, right) rates; zero rates are allowed for caps.
using RateTable = std::vector<std::array<double, 2>>;
RateTable exact_rates(const TadModel& m, bool low_temperature = true);
RateTable kramers_rates(const BasinTopology& top, double beta);

MetastablePath run_kmc(const BasinTopology& top, const RateTable& rates, double t_max, Rng& rng,
                       int start_basin);

struct TadRun {
  MetastablePath path;
  std::vector<ExitStepResult> exit_steps;
  std::int64_t steps_lo = 0;  // decorrelation
  std::int64_t steps_hi = 0;  // exit steps, including dephasing
  double boost() const;       // (simulated low-T time / dt) / steps used
  double dt = 0.0;
};

TadRun run_tad(Variant v, const TadModel& m, double x_init, Rng& rng);
Sim<TadRun> tad_path_sim(Variant v, const TadModel& m, double x_init, Rng& rng);

}  // namespace tadlab
